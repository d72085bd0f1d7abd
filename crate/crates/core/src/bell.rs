//! Bell functionals: evaluation, local bounds by enumeration and maxima over
//! the no-signalling, local and bilocal sets by linear programming.
//!
//! Bounds are reported as maxima of `c·P`. The witness form `bound - c·P ≥ 0`
//! is available through [`BellFunctional::witness`].

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index;
use crate::lp::{maximize, LpStatus, SolverOptions};
use crate::membership::program::{bilocal_program, local_program, marginal_equalities, no_signalling_program, Target};
use crate::membership::{check_class, rules_for, ClassTag, MembershipOptions, MembershipResult};
use crate::model::{is_no_signalling, validate_box, CorrelationBox, Partition, Scenario, DEFAULT_EPS};
use crate::scalar::{format_rational, parse_rational, ratio, Mode, Number, Scalar, Table};

pub const BELL_SCHEMA: &str = "boxlab-bell-v1";

/// A recorded bound of a functional over one set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownBound {
    /// Set name, e.g. `local` or `nsbl`.
    pub set: String,
    #[serde(with = "rational_string")]
    pub value: BigRational,
    /// How the value was obtained.
    pub source: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    pub name: String,
    pub scenario: Scenario,
    /// Indexed like a box table.
    pub coefficients: Vec<BigRational>,
    pub bounds: Vec<KnownBound>,
}

#[derive(Serialize, Deserialize)]
struct FunctionalJson {
    schema: String,
    name: String,
    scenario: Scenario,
    coefficients: Vec<String>,
    #[serde(default)]
    bounds: Vec<KnownBound>,
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::scalar::format_rational(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::scalar::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

impl BellFunctional {
    pub fn new(name: impl Into<String>, scenario: Scenario, coefficients: Vec<BigRational>) -> Result<Self> {
        if coefficients.len() != scenario.table_len() {
            return Err(Error::Functional(format!(
                "{} coefficients for a table of {}",
                coefficients.len(),
                scenario.table_len()
            )));
        }
        Ok(BellFunctional {
            name: name.into(),
            scenario,
            coefficients,
            bounds: Vec::new(),
        })
    }

    pub fn from_fn(name: impl Into<String>, scenario: Scenario, mut f: impl FnMut(&[usize], &[usize]) -> BigRational) -> Self {
        let mut c = Vec::with_capacity(scenario.table_len());
        for xi in 0..scenario.input_count() {
            let x = scenario.input_tuple(xi);
            for ai in 0..scenario.output_count() {
                c.push(f(&x, &scenario.output_tuple(ai)));
            }
        }
        BellFunctional {
            name: name.into(),
            scenario,
            coefficients: c,
            bounds: Vec::new(),
        }
    }

    pub fn with_bound(mut self, set: &str, value: BigRational, source: &str) -> Self {
        self.bounds.push(KnownBound {
            set: set.into(),
            value,
            source: source.into(),
        });
        self
    }

    pub fn bound(&self, set: &str) -> Option<&BigRational> {
        self.bounds.iter().find(|b| b.set == set).map(|b| &b.value)
    }

    /// `bound - c·P` for a recorded bound; nonnegative on the set.
    pub fn witness(&self, set: &str, b: &CorrelationBox) -> Result<f64> {
        let bound = self
            .bound(set)
            .ok_or_else(|| Error::Functional(format!("no recorded bound for {set}")))?;
        Ok(bound.to_f64() - evaluate(self, b)?)
    }

    pub fn scaled(&self, k: &BigRational) -> Self {
        BellFunctional {
            name: self.name.clone(),
            scenario: self.scenario.clone(),
            coefficients: self.coefficients.iter().map(|c| c * k).collect(),
            bounds: Vec::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FunctionalJson {
            schema: BELL_SCHEMA.into(),
            name: self.name.clone(),
            scenario: self.scenario.clone(),
            coefficients: self.coefficients.iter().map(format_rational).collect(),
            bounds: self.bounds.clone(),
        })
        .expect("functional serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: FunctionalJson = serde_json::from_str(s)?;
        if raw.schema != BELL_SCHEMA {
            return Err(Error::Parse(format!("unsupported functional schema {:?}", raw.schema)));
        }
        let coefficients = raw.coefficients.iter().map(|c| parse_rational(c)).collect::<Result<Vec<_>>>()?;
        let mut f = BellFunctional::new(raw.name, raw.scenario, coefficients)?;
        f.bounds = raw.bounds;
        Ok(f)
    }
}

fn check_scenarios(f: &BellFunctional, b: &CorrelationBox) -> Result<()> {
    if &f.scenario != b.scenario() {
        return Err(Error::Dimension(format!("functional {} does not match the box scenario", f.name)));
    }
    Ok(())
}

/// `c·P` in floating point.
pub fn evaluate(f: &BellFunctional, b: &CorrelationBox) -> Result<f64> {
    check_scenarios(f, b)?;
    Ok(f.coefficients
        .iter()
        .enumerate()
        .map(|(i, c)| c.to_f64() * b.table().get_f64(i))
        .sum())
}

/// `c·P` exactly; the box must be rational.
pub fn evaluate_exact(f: &BellFunctional, b: &CorrelationBox) -> Result<BigRational> {
    check_scenarios(f, b)?;
    let p = b.values::<BigRational>()?;
    Ok(f.coefficients.iter().zip(p).map(|(c, v)| c * v).sum())
}

/// `c·P` in the box's own numeric mode.
pub fn evaluate_number(f: &BellFunctional, b: &CorrelationBox) -> Result<Number> {
    match b.mode() {
        Mode::Rational => evaluate_exact(f, b).map(Number::Rational),
        Mode::Float => evaluate(f, b).map(Number::Float),
    }
}

/// Correlator sign for two binary outputs: `+1` when equal.
fn agreement(a: &[usize]) -> i64 {
    if a[0] == a[1] {
        1
    } else {
        -1
    }
}

/// `C(0,0) + C(0,1) + C(1,1) - C(1,0)` with `C(x,y) = P(a = b|x,y) - P(a ≠ b|x,y)`.
pub fn chsh() -> BellFunctional {
    chsh_variant(2, false)
}

/// CHSH with the minus sign on input pair `(x,y)` encoded as `2x + y`,
/// optionally negated. `chsh_variant(2, false)` is [`chsh`].
pub fn chsh_variant(minus_at: usize, negate: bool) -> BellFunctional {
    assert!(minus_at < 4, "input pair index out of range");
    let s = Scenario::uniform(2, 2, 2).expect("binary pair");
    let name = if minus_at == 2 && !negate {
        "chsh".to_string()
    } else {
        format!("chsh[{minus_at}{}]", if negate { ",neg" } else { "" })
    };
    let f = BellFunctional::from_fn(name, s, |x, a| {
        let mut sign = agreement(a);
        if 2 * x[0] + x[1] == minus_at {
            sign = -sign;
        }
        if negate {
            sign = -sign;
        }
        BigRational::from_integer(sign.into())
    });
    f.with_bound("local", ratio(2, 1), "vertex enumeration")
        .with_bound("ns", ratio(4, 1), "linear program")
}

/// All eight relabelings of CHSH.
pub fn chsh_family() -> Vec<BellFunctional> {
    (0..4)
        .flat_map(|m| [chsh_variant(m, false), chsh_variant(m, true)])
        .collect()
}

/// Largest CHSH value over the whole family. A bipartite binary box is local
/// exactly when this is at most 2.
pub fn chsh_family_max(b: &CorrelationBox) -> Result<f64> {
    chsh_family()
        .iter()
        .map(|f| evaluate(f, b))
        .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
}

/// `P(000|000) + P(110|011) + P(011|101) + P(101|110)`.
pub fn gyni() -> BellFunctional {
    let s = Scenario::uniform(3, 2, 2).expect("binary triple");
    let hits: [([usize; 3], [usize; 3]); 4] = [
        ([0, 0, 0], [0, 0, 0]),
        ([0, 1, 1], [1, 1, 0]),
        ([1, 0, 1], [0, 1, 1]),
        ([1, 1, 0], [1, 0, 1]),
    ];
    BellFunctional::from_fn("gyni", s, |x, a| {
        if hits.iter().any(|(hx, ha)| hx == x && ha == a) {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    })
    .with_bound("local", ratio(1, 1), "vertex enumeration")
    .with_bound("nsbl", ratio(1, 1), "linear program")
}

/// Maximum of `f` over products of deterministic strategies of every party.
pub fn local_bound(f: &BellFunctional) -> Result<BigRational> {
    local_bound_with_cap(f, crate::membership::DEFAULT_VERTEX_CAP)
}

pub fn local_bound_with_cap(f: &BellFunctional, cap: usize) -> Result<BigRational> {
    let s = &f.scenario;
    s.local_vertex_count()
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Cap(format!("local vertex count exceeds {cap}")))?;
    let per_party: Vec<usize> = (0..s.parties()).map(|p| s.outputs()[p].pow(s.inputs()[p] as u32)).collect();
    let strategies: Vec<Vec<Vec<usize>>> = (0..s.parties())
        .map(|p| index::tuples(&vec![s.outputs()[p]; s.inputs()[p]]).collect())
        .collect();
    let inputs: Vec<Vec<usize>> = (0..s.input_count()).map(|xi| s.input_tuple(xi)).collect();
    let mut best: Option<BigRational> = None;
    let mut a = vec![0; s.parties()];
    for v in index::tuples(&per_party) {
        let mut total = BigRational::zero();
        for x in &inputs {
            for p in 0..s.parties() {
                a[p] = strategies[p][v[p]][x[p]];
            }
            total += &f.coefficients[s.index(x, &a)];
        }
        if best.as_ref().is_none_or(|b| total > *b) {
            best = Some(total);
        }
    }
    Ok(best.expect("at least one vertex"))
}

/// Maximum of `f` over products of one deterministic strategy per side,
/// where a side's strategy is any function of its joint inputs.
pub fn grouped_local_bound(f: &BellFunctional, partition: &Partition) -> Result<BigRational> {
    grouped_local_bound_with_cap(f, partition, crate::membership::DEFAULT_VERTEX_CAP)
}

pub fn grouped_local_bound_with_cap(f: &BellFunctional, partition: &Partition, cap: usize) -> Result<BigRational> {
    let s = &f.scenario;
    partition.check_scenario(s)?;
    let sa = s.restrict(partition.first())?;
    let sb = s.restrict(partition.second())?;
    let count = |g: &Scenario| {
        (0..g.input_count()).try_fold(1usize, |acc, _| acc.checked_mul(g.output_count()))
    };
    let (ca, cb) = (count(&sa), count(&sb));
    // enumerate the side with fewer strategies, optimize the other per input
    let swap = match (ca, cb) {
        (Some(a), Some(b)) => b < a,
        (None, Some(_)) => true,
        _ => false,
    };
    let (enum_side, free_side) = if swap { (1, 0) } else { (0, 1) };
    let groups = partition.sides();
    let (ge, gf) = (groups[enum_side], groups[free_side]);
    let (se, sf) = if swap { (&sb, &sa) } else { (&sa, &sb) };
    let n_enum = count(se)
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Cap(format!("side strategy count exceeds {cap}")))?;
    let mut x = vec![0; s.parties()];
    let mut a = vec![0; s.parties()];
    let mut best: Option<BigRational> = None;
    for k in 0..n_enum {
        let strat = index::decode(&vec![se.output_count(); se.input_count()], k);
        let mut total = BigRational::zero();
        for xf in 0..sf.input_count() {
            for (&q, &v) in gf.iter().zip(&sf.input_tuple(xf)) {
                x[q] = v;
            }
            let mut row_best: Option<BigRational> = None;
            for af in 0..sf.output_count() {
                for (&q, &v) in gf.iter().zip(&sf.output_tuple(af)) {
                    a[q] = v;
                }
                let mut v = BigRational::zero();
                for xe in 0..se.input_count() {
                    for (&q, &val) in ge.iter().zip(&se.input_tuple(xe)) {
                        x[q] = val;
                    }
                    for (&q, &val) in ge.iter().zip(&se.output_tuple(strat[xe])) {
                        a[q] = val;
                    }
                    v += &f.coefficients[s.index(&x, &a)];
                }
                if row_best.as_ref().is_none_or(|b| v > *b) {
                    row_best = Some(v);
                }
            }
            total += row_best.expect("outputs");
        }
        if best.as_ref().is_none_or(|b| total > *b) {
            best = Some(total);
        }
    }
    Ok(best.expect("at least one strategy"))
}

/// Sets over which a functional can be maximized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetClass {
    #[serde(rename = "ns")]
    NoSignalling,
    Local,
    Bl,
    Nsbl,
    Tobl,
}

impl SetClass {
    pub fn membership_class(self) -> Option<ClassTag> {
        match self {
            SetClass::NoSignalling => None,
            SetClass::Local => Some(ClassTag::Local),
            SetClass::Bl => Some(ClassTag::Bl),
            SetClass::Nsbl => Some(ClassTag::Nsbl),
            SetClass::Tobl => Some(ClassTag::Tobl),
        }
    }

    pub fn needs_partition(self) -> bool {
        matches!(self, SetClass::Bl | SetClass::Nsbl | SetClass::Tobl)
    }
}

impl fmt::Display for SetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetClass::NoSignalling => "ns",
            SetClass::Local => "local",
            SetClass::Bl => "bl",
            SetClass::Nsbl => "nsbl",
            SetClass::Tobl => "tobl",
        })
    }
}

impl FromStr for SetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ns" | "no-signalling" => Ok(SetClass::NoSignalling),
            "local" => Ok(SetClass::Local),
            "bl" => Ok(SetClass::Bl),
            "nsbl" => Ok(SetClass::Nsbl),
            "tobl" => Ok(SetClass::Tobl),
            other => Err(Error::Parse(format!("unknown set {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SetOptions {
    pub mode: Mode,
    pub membership: MembershipOptions,
    /// Also require the maximizer itself to be no-signalling.
    pub no_signalling: bool,
}

impl Default for SetOptions {
    fn default() -> Self {
        SetOptions {
            mode: Mode::Rational,
            membership: MembershipOptions::default(),
            no_signalling: false,
        }
    }
}

/// Optimum of a functional over a set, with an attaining box.
#[derive(Clone, Debug)]
pub struct SetMaximum {
    pub set: SetClass,
    pub value: Number,
    /// Upper bound certified by the dual multipliers.
    pub dual_bound: Number,
    pub maximizer: CorrelationBox,
    /// Membership re-check of the maximizer (none for the no-signalling set).
    pub recheck: Option<MembershipResult>,
}

pub fn max_over_set(f: &BellFunctional, set: SetClass, partition: Option<&Partition>) -> Result<SetMaximum> {
    max_over_set_with(f, set, partition, &SetOptions::default())
}

pub fn max_over_set_with(
    f: &BellFunctional,
    set: SetClass,
    partition: Option<&Partition>,
    opts: &SetOptions,
) -> Result<SetMaximum> {
    if set.needs_partition() && partition.is_none() {
        return Err(Error::Partition(format!("set {set} needs a partition")));
    }
    match opts.mode {
        Mode::Rational => max_impl::<BigRational>(f, set, partition, opts),
        Mode::Float => max_impl::<f64>(f, set, partition, opts),
    }
}

fn max_impl<S: Scalar>(
    f: &BellFunctional,
    set: SetClass,
    partition: Option<&Partition>,
    opts: &SetOptions,
) -> Result<SetMaximum> {
    let s = &f.scenario;
    let cap = opts.membership.vertex_cap;
    let (mut lp, box0) = match set {
        SetClass::NoSignalling => (no_signalling_program::<S>(s), 0),
        SetClass::Local => {
            let prog = local_program::<S>(s, Target::Free, cap)?;
            (prog.lp, prog.box_var0.expect("free target"))
        }
        SetClass::Bl | SetClass::Nsbl | SetClass::Tobl => {
            let partition = partition.expect("checked above");
            partition.check_scenario(s)?;
            let (singleton, group) = partition
                .singleton_split()
                .ok_or_else(|| Error::Partition(format!("{partition} has no singleton side")))?;
            let class = set.membership_class().expect("bilocal set");
            let rules = rules_for(class, group.len())?;
            let shared = !(set == SetClass::Tobl && opts.membership.independent_weights);
            let prog = bilocal_program::<S>(s, singleton, group, rules, shared, Target::Free, cap)?;
            (prog.lp, prog.box_var0.expect("free target"))
        }
    };
    if opts.no_signalling && set != SetClass::NoSignalling {
        let n = s.parties();
        for m in 1u64..(1u64 << n).saturating_sub(1) {
            let keep: Vec<usize> = (0..n).filter(|p| m >> p & 1 == 1).collect();
            for coeffs in marginal_equalities::<S>(s, &keep, box0) {
                lp.add_equality(coeffs, S::zero());
            }
        }
    }
    let mut c = vec![S::zero(); lp.num_vars()];
    for (e, coeff) in f.coefficients.iter().enumerate() {
        c[box0 + e] = S::from_rational(coeff);
    }
    lp.set_objective(c);
    let solver = SolverOptions {
        verdict_tol: opts.membership.tolerance,
        ..opts.membership.solver
    };
    let res = maximize(&lp, &solver)?;
    if res.status != LpStatus::Optimal {
        return Err(Error::Functional(format!("maximization over {set} ended with {:?}", res.status)));
    }
    let x = res.primal.expect("optimal point");
    let value = res.objective.expect("optimal value");
    let dual = res.dual.expect("optimal duals");
    let dual_bound = lp.verify_dual_bound(&dual, opts.membership.tolerance)?;
    let values: Vec<S> = x[box0..box0 + s.table_len()].to_vec();
    let maximizer = CorrelationBox::new(s.clone(), S::into_table(values))?;
    let maximizer = if S::MODE == Mode::Float { clean_float(maximizer)? } else { maximizer };

    // independent re-checks of the attaining box
    let report = validate_box(&maximizer);
    if !report.valid {
        return Err(Error::Functional(format!("maximizer over {set} is not a valid box")));
    }
    let recomputed = evaluate(f, &maximizer)?;
    if (recomputed - value.to_f64()).abs() > 1e-9 * (1.0 + recomputed.abs()) {
        return Err(Error::Functional(format!(
            "maximizer evaluates to {recomputed}, program reported {}",
            value.to_f64()
        )));
    }
    if S::MODE == Mode::Rational && evaluate_exact(f, &maximizer)?.to_number() != value.to_number() {
        return Err(Error::Functional("exact re-evaluation of the maximizer differs".into()));
    }
    let ns_needed = set == SetClass::NoSignalling || opts.no_signalling;
    if ns_needed && !is_no_signalling(&maximizer, DEFAULT_EPS).passed {
        return Err(Error::Functional("maximizer is signalling".into()));
    }
    let recheck = match set.membership_class() {
        Some(class) => {
            let r = check_class(&maximizer, class, partition, &opts.membership)?;
            if !r.is_member() {
                return Err(Error::Functional(format!("maximizer over {set} fails its membership re-check")));
            }
            Some(r)
        }
        None => None,
    };
    Ok(SetMaximum {
        set,
        value: value.to_number(),
        dual_bound: dual_bound.to_number(),
        maximizer,
        recheck,
    })
}

/// Clamps tiny negative float entries left by the simplex.
fn clean_float(b: CorrelationBox) -> Result<CorrelationBox> {
    let s = b.scenario().clone();
    let mut t = b.table().to_f64_vec();
    for v in &mut t {
        if *v < 0.0 && v.abs() <= DEFAULT_EPS {
            *v = 0.0;
        }
    }
    CorrelationBox::new(s, Table::Float(t))
}
