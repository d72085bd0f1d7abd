use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use boxlab::bell::{chsh, evaluate_number, gyni, max_over_set_with, BellFunctional, SetClass, SetOptions};
use boxlab::membership::{check_class, ClassTag, MembershipOptions, Verdict};
use boxlab::model::{is_no_signalling, validate_box_with, VERDICT_EPS};
use boxlab::quantum::{born_box, ghz_state, paper_ghz_box, rationalize, BinaryMeasurement, RATIONALIZE_TOL};
use boxlab::random::tobl_corpus;
use boxlab::reproduce::reproduce;
use boxlab::wiring::{fig1b_wiring, paper_broadcast_protocol, run_protocol, Protocol};
use boxlab::{CorrelationBox, Error, Mode, Partition};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

const EXIT_INVALID: u8 = 2;
const EXIT_UNDECIDED: u8 = 3;
const EXIT_CLAIM: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

/// Correlation boxes: validation, class membership, wirings and Bell functionals.
#[derive(Parser)]
#[command(name = "boxlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check normalization, positivity and no-signalling of a box.
    Validate {
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        #[arg(value_name = "BOX")]
        path: PathBuf,
    },
    /// Boxes from qubit measurements.
    #[command(subcommand)]
    Quantum(QuantumCommand),
    /// Membership in local, bl, nsbl, tobl or tobl-general, with a certificate.
    Membership {
        #[arg(long)]
        class: String,
        /// Bipartition such as "1|2,3"; parties are numbered from 1.
        #[arg(long)]
        partition: Option<String>,
        #[command(flatten)]
        numeric: Numeric,
        /// TOBL with separate weights for each time order.
        #[arg(long)]
        independent_weights: bool,
        #[arg(value_name = "BOX")]
        path: PathBuf,
    },
    /// Run a protocol of broadcasts, relabelings and wirings on a box.
    Wire {
        #[arg(long, conflicts_with_all = ["paper_fig1b", "paper_broadcast"])]
        protocol: Option<PathBuf>,
        /// Relay wiring: the second party's output becomes the third party's input.
        #[arg(long, conflicts_with = "paper_broadcast")]
        paper_fig1b: bool,
        /// Broadcast of the second party's outcome followed by a conditional relabeling.
        #[arg(long)]
        paper_broadcast: bool,
        /// Input box; the GHZ example box when omitted.
        #[arg(value_name = "BOX")]
        path: Option<PathBuf>,
    },
    /// Evaluate a functional on a box, or maximize it over a set.
    Bell {
        /// `chsh`, `gyni` or a functional file.
        #[arg(long)]
        functional: String,
        /// One of ns, local, bl, nsbl, tobl.
        #[arg(long)]
        max_over: Option<String>,
        #[arg(long)]
        partition: Option<String>,
        /// Require the maximizer itself to be no-signalling.
        #[arg(long)]
        no_signalling: bool,
        #[command(flatten)]
        numeric: Numeric,
        #[arg(value_name = "BOX")]
        path: Option<PathBuf>,
    },
    /// Recompute every claim on the GHZ example and report pass or fail.
    Reproduce {
        #[arg(long)]
        json: bool,
        /// Replace the GHZ example box by this one.
        #[arg(long = "box", value_name = "BOX")]
        replacement: Option<PathBuf>,
    },
    /// Generate committed test data.
    #[command(subcommand)]
    Corpus(CorpusCommand),
}

#[derive(Subcommand)]
enum QuantumCommand {
    /// The three-qubit GHZ example box.
    GhzPaper {
        /// Emit the exact rationalized copy.
        #[arg(long)]
        rationalize: bool,
    },
    /// GHZ state on as many qubits as `--party` flags, one observable list per party.
    Ghz {
        /// Space-separated observables such as "z x" or "theta:0.785 theta:-0.785".
        #[arg(long = "party", required = true)]
        parties: Vec<String>,
        #[arg(long)]
        rationalize: bool,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Seeded boxes certified time-ordered bilocal across 1|2,3.
    Tobl {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
    /// Exact maximum of GYNI over time-ordered bilocal boxes, with its maximizer.
    GyniTobl,
}

#[derive(Args, Clone, Copy)]
struct Numeric {
    /// rational or float; defaults to the mode of the input.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    tolerance: Option<f64>,
}

enum Failure {
    Core(Error),
    Undecided(Value),
    Claims(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = std::env::args().collect::<Vec<_>>();
    match run(cli.command, command) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Undecided(v)) => {
            emit(&v);
            eprintln!("undecided: the check exceeded a size cap");
            ExitCode::from(EXIT_UNDECIDED)
        }
        Err(Failure::Claims(ids)) => {
            eprintln!("failed claims: {}", ids.join(", "));
            ExitCode::from(EXIT_CLAIM)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Cap(_) => EXIT_UNDECIDED,
        Error::Lp(_) | Error::Certificate(_) => EXIT_INTERNAL,
        _ => EXIT_INVALID,
    }
}

fn emit(v: &Value) {
    if !v.is_null() {
        print_text(&serde_json::to_string_pretty(v).expect("json value prints"));
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn print_text(text: &str) {
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn read_text(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn read_box(path: &Path) -> Result<CorrelationBox, Error> {
    CorrelationBox::from_json_str(&read_text(path)?)
}

/// Converts a box to the requested mode; float boxes are rationalized.
fn in_mode(b: CorrelationBox, mode: Option<Mode>) -> Result<CorrelationBox, Error> {
    match (mode, b.mode()) {
        (Some(Mode::Float), Mode::Rational) => Ok(b.to_float()),
        (Some(Mode::Rational), Mode::Float) => {
            let r = rationalize(&b, RATIONALIZE_TOL)?;
            log::warn!("box rationalized with entrywise residual {:e}", r.residual);
            Ok(r.boxed)
        }
        _ => Ok(b),
    }
}

fn partition(p: Option<&str>) -> Result<Option<Partition>, Error> {
    p.map(str::parse).transpose()
}

fn functional(name: &str) -> Result<BellFunctional, Error> {
    match name {
        "chsh" => Ok(chsh()),
        "gyni" => Ok(gyni()),
        path => BellFunctional::from_json_str(&read_text(Path::new(path))?),
    }
}

fn run(command: Command, echo: Vec<String>) -> Outcome {
    match command {
        Command::Validate { tolerance, path } => {
            let b = read_box(&path)?;
            let v = validate_box_with(&b, tolerance);
            let ns = is_no_signalling(&b, tolerance);
            let report = json!({
                "schema": "boxlab-validation-v1",
                "valid": v.valid,
                "max_residual": v.max_residual,
                "most_negative": v.most_negative,
                "no_signalling": ns.passed,
                "max_marginal_discrepancy": ns.max_discrepancy,
                "tolerance": tolerance,
            });
            if v.valid {
                Ok(report)
            } else {
                emit(&report);
                Err(Error::InvalidBox(format!("normalization residual {:e}", v.max_residual)).into())
            }
        }
        Command::Quantum(QuantumCommand::GhzPaper { rationalize: exact }) => quantum_out(paper_ghz_box(), exact),
        Command::Quantum(QuantumCommand::Ghz { parties, rationalize: exact }) => {
            let settings = parties
                .iter()
                .map(|p| p.split_whitespace().map(str::parse::<BinaryMeasurement>).collect())
                .collect::<Result<Vec<Vec<_>>, Error>>()?;
            let b = born_box(&ghz_state(settings.len())?, &settings)?;
            quantum_out(b, exact)
        }
        Command::Membership {
            class,
            partition: p,
            numeric,
            independent_weights,
            path,
        } => {
            let class: ClassTag = class.parse()?;
            let b = in_mode(read_box(&path)?, numeric.mode)?;
            let opts = MembershipOptions {
                independent_weights,
                tolerance: numeric.tolerance.unwrap_or(VERDICT_EPS),
                ..MembershipOptions::default()
            };
            let r = check_class(&b, class, partition(p.as_deref())?.as_ref(), &opts)?;
            if r.verdict == Verdict::Undecided {
                return Err(Failure::Undecided(r.to_json()));
            }
            Ok(r.to_json())
        }
        Command::Wire {
            protocol,
            paper_fig1b,
            paper_broadcast,
            path,
        } => {
            let b = match &path {
                Some(p) => read_box(p)?,
                None => paper_ghz_box(),
            };
            let protocol = if paper_fig1b {
                Protocol {
                    steps: Vec::new(),
                    wirings: vec![fig1b_wiring()],
                }
            } else if paper_broadcast {
                paper_broadcast_protocol()
            } else if let Some(p) = protocol {
                Protocol::from_json_str(&read_text(&p)?)?
            } else {
                return Err(Error::Protocol("give --protocol, --paper-fig1b or --paper-broadcast".into()).into());
            };
            Ok(run_protocol(&b, &protocol)?.to_json())
        }
        Command::Bell {
            functional: name,
            max_over,
            partition: p,
            no_signalling,
            numeric,
            path,
        } => {
            let f = functional(&name)?;
            match max_over {
                Some(set) => {
                    let set: SetClass = set.parse()?;
                    let mut opts = SetOptions {
                        no_signalling,
                        ..SetOptions::default()
                    };
                    if let Some(m) = numeric.mode {
                        opts.mode = m;
                    }
                    if let Some(t) = numeric.tolerance {
                        opts.membership.tolerance = t;
                    }
                    let m = max_over_set_with(&f, set, partition(p.as_deref())?.as_ref(), &opts)?;
                    Ok(json!({
                        "schema": "boxlab-maximum-v1",
                        "functional": f.name,
                        "set": set.to_string(),
                        "partition": p,
                        "value": m.value,
                        "value_f64": m.value.to_f64(),
                        "dual_bound": m.dual_bound,
                        "maximizer": m.maximizer.to_json(),
                        "recheck": m.recheck.map(|r| r.to_json()),
                    }))
                }
                None => {
                    let path = path.ok_or_else(|| Error::Parse("a box is needed unless --max-over is given".into()))?;
                    let b = in_mode(read_box(&path)?, numeric.mode)?;
                    let v = evaluate_number(&f, &b)?;
                    Ok(json!({
                        "schema": "boxlab-evaluation-v1",
                        "functional": f.name,
                        "value": v,
                        "value_f64": v.to_f64(),
                    }))
                }
            }
        }
        Command::Reproduce { json, replacement } => {
            let b = replacement.as_deref().map(read_box).transpose()?;
            let report = reproduce(b.as_ref(), echo);
            if json {
                emit(&serde_json::to_value(&report).map_err(Error::from)?);
            } else {
                let mut out = String::new();
                for c in &report.claims {
                    let shown: Vec<String> = c.values.iter().map(|v| format!("{} = {}", v.name, v.value)).collect();
                    let _ = writeln!(
                        out,
                        "{} {:<16} {:>7.3}s  {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.id,
                        c.seconds,
                        c.description
                    );
                    if !shown.is_empty() {
                        let _ = writeln!(out, "     {}", shown.join("; "));
                    }
                    if let Some(n) = &c.note {
                        let _ = writeln!(out, "     {n}");
                    }
                }
                print_text(out.trim_end());
            }
            if report.passed {
                Ok(Value::Null)
            } else {
                Err(Failure::Claims(report.failed_claims().iter().map(|s| s.to_string()).collect()))
            }
        }
        Command::Corpus(CorpusCommand::Tobl { seed, count }) => {
            let boxes = tobl_corpus(seed, count)?;
            Ok(json!({
                "schema": "boxlab-corpus-v1",
                "class": "tobl",
                "partition": "1|2,3",
                "seed": seed,
                "boxes": boxes,
            }))
        }
        Command::Corpus(CorpusCommand::GyniTobl) => {
            let cut = Partition::singleton_first();
            let m = max_over_set_with(&gyni(), SetClass::Tobl, Some(&cut), &SetOptions::default())?;
            Ok(json!({
                "schema": "boxlab-maximum-v1",
                "functional": "gyni",
                "set": "tobl",
                "partition": cut.to_string(),
                "value": m.value,
                "dual_bound": m.dual_bound,
                "maximizer": m.maximizer.to_json(),
                "recheck": m.recheck.map(|r| r.to_json()),
            }))
        }
    }
}

fn quantum_out(b: CorrelationBox, exact: bool) -> Outcome {
    if exact {
        let r = rationalize(&b, RATIONALIZE_TOL)?;
        let mut v = r.boxed.to_json();
        v["rationalization_residual"] = r.residual.into();
        Ok(v)
    } else {
        Ok(b.to_json())
    }
}
