//! Membership of a box in the local, bilocal, no-signalling bilocal and
//! time-ordered bilocal classes, with verifiable certificates.
//!
//! Every bilocal class mixes deterministic strategies `D_λ` of the singleton
//! party with tables `T_λ` of the grouped parties; restricting `λ` to
//! deterministic strategies loses nothing because any local response can be
//! split into its deterministic components. The classes differ only in what
//! `T_λ` may do: anything (BL), no signalling (NSBL), or two tables per `λ`,
//! one for each time order, each signalling only forward in time (TOBL).

mod certificate;
mod grouped;
pub(crate) mod program;

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lp::{solve_feasibility, LpResult, LpStatus, SolverOptions};
use crate::model::{ensure_valid, CorrelationBox, Partition, Scenario, VERDICT_EPS};
use crate::scalar::{Mode, Number, Scalar, Table};

pub use certificate::{
    Certificate, ClassTag, Decomposition, DeterministicStrategy, Direction, GroupTables, Hyperplane,
    MembershipResult, SignallingAudit, TermAudit, Term, Verdict, CERT_SCHEMA,
};
pub use grouped::{FamilyModel, MAX_GROUP};

use program::{bilocal_program, local_program, BilocalProgram, LocalProgram, TableRule, Target};

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;
pub const DEFAULT_FAMILY_CAP: usize = 1 << 14;
pub const DEFAULT_ROW_CAP: usize = 2048;

#[derive(Clone, Copy, Debug)]
pub struct MembershipOptions {
    pub solver: SolverOptions,
    pub vertex_cap: usize,
    /// Deterministic families enumerated on the smaller side of a grouped check.
    pub family_cap: usize,
    /// Rows of the grouped master program.
    pub row_cap: usize,
    /// TOBL with separate weights per time order.
    pub independent_weights: bool,
    /// Float-mode verdict tolerance.
    pub tolerance: f64,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            solver: SolverOptions::default(),
            vertex_cap: DEFAULT_VERTEX_CAP,
            family_cap: DEFAULT_FAMILY_CAP,
            row_cap: DEFAULT_ROW_CAP,
            independent_weights: false,
            tolerance: VERDICT_EPS,
        }
    }
}

impl MembershipOptions {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            verdict_tol: self.tolerance,
            ..self.solver
        }
    }
}

pub fn check_local(b: &CorrelationBox) -> Result<MembershipResult> {
    check_local_with(b, &MembershipOptions::default())
}

pub fn check_local_with(b: &CorrelationBox, opts: &MembershipOptions) -> Result<MembershipResult> {
    ensure_valid(b)?;
    match b.table() {
        Table::Rational(p) => local_impl::<BigRational>(b, p, opts),
        Table::Float(p) => local_impl::<f64>(b, p, opts),
    }
}

fn local_impl<S: Scalar>(b: &CorrelationBox, p: &[S], opts: &MembershipOptions) -> Result<MembershipResult> {
    let s = b.scenario();
    let prog: LocalProgram<S> = match local_program(s, Target::Fixed(p), opts.vertex_cap) {
        Ok(prog) => prog,
        Err(Error::Cap(msg)) => return Ok(MembershipResult::undecided(ClassTag::Local, S::MODE, msg)),
        Err(e) => return Err(e),
    };
    let res = solve_feasibility(&prog.lp, &opts.solver())?;
    match res.status {
        LpStatus::Feasible => {
            let x = res.primal.as_ref().expect("feasible point");
            let terms = prog
                .vertices
                .iter()
                .zip(x)
                .filter(|(_, w)| keep_weight(*w))
                .map(|(v, w)| Term {
                    weight: w.to_number(),
                    strategies: v
                        .iter()
                        .enumerate()
                        .map(|(party, &k)| strategy_at(s, party, k))
                        .collect(),
                    groups: Vec::new(),
                })
                .collect();
            finish_decomposition(b, ClassTag::Local, None, terms, opts.tolerance)
        }
        LpStatus::Infeasible => {
            let h = res.farkas.as_ref().map(|f| {
                let y = &f.equalities;
                let r: Vec<S> = prog.repro_rows.iter().map(|&i| -y[i].clone()).collect();
                hyperplane_from_multipliers(s, p, r, -y[prog.sum_row].clone())
            });
            if let Some(h) = &h {
                let worst = local_vertex_minimum(s, h)?;
                if worst < 0.0 {
                    return Err(Error::Certificate(format!("hyperplane is {worst} on a local vertex")));
                }
            }
            Ok(non_member(ClassTag::Local, &res, h))
        }
        _ => Ok(MembershipResult::undecided(ClassTag::Local, S::MODE, "simplex iteration cap")),
    }
}

fn keep_weight<S: Scalar>(w: &S) -> bool {
    !w.near_zero(if S::MODE == Mode::Rational { 0.0 } else { 1e-14 })
}

fn strategy_at(s: &Scenario, party: usize, k: usize) -> DeterministicStrategy {
    DeterministicStrategy::all(party, s.inputs()[party], s.outputs()[party])
        .nth(k)
        .expect("strategy index in range")
}

/// Minimum of `h` over all products of deterministic strategies.
fn local_vertex_minimum(s: &Scenario, h: &Hyperplane) -> Result<f64> {
    let mut worst = f64::INFINITY;
    let per_party: Vec<usize> = (0..s.parties()).map(|p| s.outputs()[p].pow(s.inputs()[p] as u32)).collect();
    for v in crate::index::tuples(&per_party) {
        let strategies: Vec<Vec<usize>> = v
            .iter()
            .enumerate()
            .map(|(p, &k)| strategy_at(s, p, k).outputs)
            .collect();
        let d = CorrelationBox::deterministic(s.clone(), &strategies)?;
        let d = if h.coefficients.mode() == Mode::Float { d.to_float() } else { d };
        worst = worst.min(h.evaluate(&d)?.to_f64());
    }
    Ok(worst)
}

pub fn check_bl(b: &CorrelationBox, partition: &Partition) -> Result<MembershipResult> {
    check_bilocal(b, partition, ClassTag::Bl, &MembershipOptions::default())
}

pub fn check_nsbl(b: &CorrelationBox, partition: &Partition) -> Result<MembershipResult> {
    check_bilocal(b, partition, ClassTag::Nsbl, &MembershipOptions::default())
}

pub fn check_tobl(b: &CorrelationBox, partition: &Partition) -> Result<MembershipResult> {
    check_bilocal(b, partition, ClassTag::Tobl, &MembershipOptions::default())
}

/// Time-ordered tables for a group of two: `[first → second, second → first]`.
pub(crate) fn tobl_rules() -> Vec<TableRule> {
    vec![TableRule::Sequential(vec![0, 1]), TableRule::Sequential(vec![1, 0])]
}

pub(crate) fn rules_for(class: ClassTag, group_len: usize) -> Result<Vec<TableRule>> {
    Ok(match class {
        ClassTag::Bl => vec![TableRule::Unconstrained],
        ClassTag::Nsbl => vec![TableRule::NoSignalling],
        ClassTag::Tobl if group_len == 2 => tobl_rules(),
        ClassTag::Tobl => {
            return Err(Error::Partition(
                "time-ordered bilocality needs a group of two; use tobl-general".into(),
            ))
        }
        other => return Err(Error::Partition(format!("{other} is not a singleton-versus-group class"))),
    })
}

/// BL, NSBL or TOBL across a partition with a singleton side.
pub fn check_bilocal(
    b: &CorrelationBox,
    partition: &Partition,
    class: ClassTag,
    opts: &MembershipOptions,
) -> Result<MembershipResult> {
    ensure_valid(b)?;
    partition.check_scenario(b.scenario())?;
    let (singleton, group) = partition.singleton_split().ok_or_else(|| {
        Error::Partition(format!("{partition} has no singleton side; use the grouped checks"))
    })?;
    let rules = rules_for(class, group.len())?;
    let shared = !(class == ClassTag::Tobl && opts.independent_weights);
    match b.table() {
        Table::Rational(p) => bilocal_impl::<BigRational>(b, p, partition, singleton, group, class, rules, shared, opts),
        Table::Float(p) => bilocal_impl::<f64>(b, p, partition, singleton, group, class, rules, shared, opts),
    }
}

#[allow(clippy::too_many_arguments)]
fn bilocal_impl<S: Scalar>(
    b: &CorrelationBox,
    p: &[S],
    partition: &Partition,
    singleton: usize,
    group: &[usize],
    class: ClassTag,
    rules: Vec<TableRule>,
    shared: bool,
    opts: &MembershipOptions,
) -> Result<MembershipResult> {
    let s = b.scenario();
    let prog: BilocalProgram<S> =
        match bilocal_program(s, singleton, group, rules, shared, Target::Fixed(p), opts.vertex_cap) {
            Ok(prog) => prog,
            Err(Error::Cap(msg)) => return Ok(MembershipResult::undecided(class, S::MODE, msg)),
            Err(e) => return Err(e),
        };
    let res = solve_feasibility(&prog.lp, &opts.solver())?;
    match res.status {
        LpStatus::Feasible => {
            let x = res.primal.as_ref().expect("feasible point");
            if shared {
                let terms = bilocal_terms(&prog, x, 0, None);
                finish_decomposition(b, class, Some(partition.clone()), terms, opts.tolerance)
            } else {
                let mut parts = Vec::new();
                for d in 0..prog.rules.len() {
                    let terms = bilocal_terms(&prog, x, d, Some(d));
                    let r = finish_decomposition(b, class, Some(partition.clone()), terms, opts.tolerance)?;
                    match r.certificate {
                        Some(Certificate::Decomposition(dec)) => parts.push(dec),
                        _ => return Ok(r),
                    }
                }
                let margin = parts.iter().map(|d| d.residual).fold(0.0, f64::max);
                Ok(MembershipResult {
                    class,
                    verdict: Verdict::Member,
                    mode: S::MODE,
                    certificate: Some(Certificate::PerDirection { decompositions: parts }),
                    margin,
                    note: Some("independent weights per time order".into()),
                })
            }
        }
        LpStatus::Infeasible => {
            let h = res.farkas.as_ref().map(|f| {
                let y = &f.equalities;
                let mut r = vec![S::zero(); s.table_len()];
                for rows in &prog.repro_rows {
                    for (e, &i) in rows.iter().enumerate() {
                        r[e].add_ref(&-y[i].clone());
                    }
                }
                let mut off = S::zero();
                for &i in &prog.sum_rows {
                    off.add_ref(&-y[i].clone());
                }
                hyperplane_from_multipliers(s, p, r, off)
            });
            if let (Some(h), ClassTag::Bl) = (&h, class) {
                let worst = bl_minimum::<S>(s, singleton, group, h)?;
                if worst < S::zero() {
                    return Err(Error::Certificate(format!(
                        "hyperplane is {} on a bilocal vertex",
                        worst.to_f64()
                    )));
                }
            }
            Ok(non_member(class, &res, h))
        }
        _ => Ok(MembershipResult::undecided(class, S::MODE, "simplex iteration cap")),
    }
}

/// Terms of direction `d`, weighted by the weight set that direction uses.
/// With `only` set, each term carries just that direction's table.
fn bilocal_terms<S: Scalar>(prog: &BilocalProgram<S>, x: &[S], d: usize, only: Option<usize>) -> Vec<Term> {
    let set = prog.weight_set(d);
    let gs = &prog.group_scenario;
    let directions: Vec<usize> = match only {
        Some(d) => vec![d],
        None => (0..prog.rules.len()).collect(),
    };
    let mut terms = Vec::new();
    for (l, st) in prog.strategies.iter().enumerate() {
        let w = &x[prog.weights[set][l]];
        if !keep_weight(w) {
            continue;
        }
        let tables = directions
            .iter()
            .map(|&dd| {
                let t0 = prog.tables[l][dd];
                S::into_table(x[t0..t0 + gs.table_len()].iter().map(|t| t.div_ref(w)).collect())
            })
            .collect();
        let orders = directions
            .iter()
            .map(|&dd| match &prog.rules[dd] {
                TableRule::Sequential(o) => o.iter().map(|&q| prog.group[q]).collect(),
                _ => Vec::new(),
            })
            .collect();
        terms.push(Term {
            weight: w.to_number(),
            strategies: vec![st.clone()],
            groups: vec![GroupTables {
                parties: prog.group.clone(),
                orders,
                tables,
            }],
        });
    }
    terms
}

/// Minimum of `h` over `D_λ ⊗ T` for every singleton strategy and every table `T`.
fn bl_minimum<S: Scalar>(s: &Scenario, singleton: usize, group: &[usize], h: &Hyperplane) -> Result<S> {
    let c = S::slice_of(&h.coefficients).ok_or_else(|| Error::ModeMismatch("hyperplane mode".into()))?;
    let gs = s.restrict(group)?;
    let entries = program::split_entries(s, singleton, group, &gs);
    let dg = gs.output_count();
    let mut worst: Option<S> = None;
    for st in DeterministicStrategy::all(singleton, s.inputs()[singleton], s.outputs()[singleton]) {
        // per group input, the coefficient each group output collects
        let mut acc = vec![S::zero(); gs.table_len()];
        for (e, &(x1, a1, gi)) in entries.iter().enumerate() {
            if st.output(x1) == a1 {
                acc[gi].add_ref(&c[e]);
            }
        }
        let mut v = S::from_number(&h.offset)?;
        for row in acc.chunks(dg) {
            let m = row.iter().cloned().reduce(|a, b| if b < a { b } else { a }).expect("outputs");
            v.add_ref(&m);
        }
        if worst.as_ref().is_none_or(|w| v < *w) {
            worst = Some(v);
        }
    }
    Ok(worst.unwrap_or_else(S::zero))
}

/// Grouped time-ordered bilocality (both sides may hold several parties).
pub fn check_tobl_general(b: &CorrelationBox, partition: &Partition) -> Result<MembershipResult> {
    check_grouped_with(b, partition, FamilyModel::Sequential, &MembershipOptions::default())
}

/// Grouped analogue of BL: each side's table is arbitrary.
pub fn check_bl_general(b: &CorrelationBox, partition: &Partition) -> Result<MembershipResult> {
    check_grouped_with(b, partition, FamilyModel::Unconstrained, &MembershipOptions::default())
}

pub fn check_grouped_with(
    b: &CorrelationBox,
    partition: &Partition,
    model: FamilyModel,
    opts: &MembershipOptions,
) -> Result<MembershipResult> {
    ensure_valid(b)?;
    partition.check_scenario(b.scenario())?;
    let gopts = grouped::GroupedOptions {
        solver: opts.solver(),
        family_cap: opts.family_cap,
        row_cap: opts.row_cap,
        tolerance: opts.tolerance,
    };
    match b.table() {
        Table::Rational(p) => grouped::check_grouped::<BigRational>(b, p, partition, model, &gopts),
        Table::Float(p) => grouped::check_grouped::<f64>(b, p, partition, model, &gopts),
    }
}

/// Dispatch by class tag.
pub fn check_class(
    b: &CorrelationBox,
    class: ClassTag,
    partition: Option<&Partition>,
    opts: &MembershipOptions,
) -> Result<MembershipResult> {
    let need = || partition.ok_or_else(|| Error::Partition(format!("class {class} needs a partition")));
    match class {
        ClassTag::Local => check_local_with(b, opts),
        ClassTag::Bl | ClassTag::Nsbl | ClassTag::Tobl => check_bilocal(b, need()?, class, opts),
        ClassTag::GroupedTobl => check_grouped_with(b, need()?, FamilyModel::Sequential, opts),
        ClassTag::GroupedBl => check_grouped_with(b, need()?, FamilyModel::Unconstrained, opts),
    }
}

fn finish_decomposition(
    b: &CorrelationBox,
    class: ClassTag,
    partition: Option<Partition>,
    terms: Vec<Term>,
    tol: f64,
) -> Result<MembershipResult> {
    let mut dec = Decomposition {
        class,
        scenario: b.scenario().clone(),
        partition,
        terms,
        residual: 0.0,
    };
    dec.residual = dec.residual_against(b)?;
    accept_decomposition(b, dec, tol)
}

/// Independent re-check of a decomposition before it is reported.
pub(crate) fn accept_decomposition(b: &CorrelationBox, dec: Decomposition, tol: f64) -> Result<MembershipResult> {
    let exact = b.mode() == Mode::Rational;
    let limit = if exact { 0.0 } else { tol };
    if dec.residual > limit {
        return Err(Error::Certificate(format!(
            "decomposition reconstructs the box only to {:e}",
            dec.residual
        )));
    }
    dec.check_components(if exact { 0.0 } else { tol })?;
    Ok(MembershipResult {
        class: dec.class,
        verdict: Verdict::Member,
        mode: b.mode(),
        margin: dec.residual,
        certificate: Some(Certificate::Decomposition(dec)),
        note: None,
    })
}

fn non_member<S: Scalar>(class: ClassTag, res: &LpResult<S>, h: Option<Hyperplane>) -> MembershipResult {
    let margin = match &h {
        Some(h) => -h.value_on_box.to_f64(),
        None => res.margin,
    };
    MembershipResult {
        class,
        verdict: Verdict::NonMember,
        mode: S::MODE,
        certificate: h.map(Certificate::Hyperplane),
        margin,
        note: None,
    }
}

/// `h(Q) = coefficients·Q + offset`, scaled so the largest coefficient has
/// magnitude one.
pub(crate) fn hyperplane_from_multipliers<S: Scalar>(s: &Scenario, p: &[S], coefficients: Vec<S>, offset: S) -> Hyperplane {
    let scale = coefficients
        .iter()
        .chain(std::iter::once(&offset))
        .map(Scalar::abs_val)
        .fold(S::zero(), |m, v| if v > m { v } else { m });
    let scale = if scale.is_zero() { S::one() } else { scale };
    let coefficients: Vec<S> = coefficients.iter().map(|c| c.div_ref(&scale)).collect();
    let offset = offset.div_ref(&scale);
    let mut value = offset.clone();
    for (c, q) in coefficients.iter().zip(p) {
        value.add_ref(&c.mul_ref(q));
    }
    Hyperplane {
        scenario: s.clone(),
        coefficients: S::into_table(coefficients),
        offset: offset.to_number(),
        value_on_box: value.to_number(),
    }
}

/// Signalling directions of each term of a BL decomposition with one group of two.
pub fn classify_bl_certificate(cert: &Decomposition) -> Result<SignallingAudit> {
    if cert.class != ClassTag::Bl {
        return Err(Error::Certificate(format!("expected a bl certificate, got {}", cert.class)));
    }
    let tol = match cert.mode() {
        Mode::Rational => 0.0,
        Mode::Float => VERDICT_EPS,
    };
    let mut terms = Vec::new();
    for (i, t) in cert.terms.iter().enumerate() {
        for g in &t.groups {
            if g.parties.len() != 2 || g.tables.len() != 1 {
                return Err(Error::Certificate("audit needs one table per two-party group".into()));
            }
            let gb = CorrelationBox::new(cert.scenario.restrict(&g.parties)?, g.tables[0].clone())?;
            // forward: the second party's marginal moves with the first input
            let forward = certificate::order_violation(&gb, &g.parties, &[g.parties[1], g.parties[0]])?;
            let backward = certificate::order_violation(&gb, &g.parties, &g.parties)?;
            let direction = match (forward > tol, backward > tol) {
                (false, false) => Direction::None,
                (true, false) => Direction::Forward,
                (false, true) => Direction::Backward,
                (true, true) => Direction::Both,
            };
            terms.push(TermAudit {
                term: i,
                weight: t.weight.clone(),
                parties: g.parties.clone(),
                direction,
                forward_discrepancy: forward,
                backward_discrepancy: backward,
            });
        }
    }
    let count = |d| terms.iter().filter(|t: &&TermAudit| t.direction == d).count();
    let (forward_terms, backward_terms, both_terms) =
        (count(Direction::Forward), count(Direction::Backward), count(Direction::Both));
    let requires_two_way_terms = match (&cert.partition, cert.reconstruct()?.into_iter().next()) {
        (Some(partition), Some(b)) => match check_tobl(&b, partition)?.verdict {
            Verdict::Member => Some(false),
            Verdict::NonMember => Some(true),
            Verdict::Undecided => None,
        },
        _ => None,
    };
    Ok(SignallingAudit {
        terms,
        forward_terms,
        backward_terms,
        both_terms,
        two_way_present: both_terms > 0 || (forward_terms > 0 && backward_terms > 0),
        requires_two_way_terms,
    })
}

/// Weight sum of a decomposition in its own mode.
pub fn total_weight(dec: &Decomposition) -> Number {
    match dec.mode() {
        Mode::Rational => {
            let mut s = BigRational::zero();
            for t in &dec.terms {
                if let Number::Rational(r) = &t.weight {
                    s += r;
                }
            }
            Number::Rational(s)
        }
        Mode::Float => Number::Float(dec.terms.iter().map(|t| t.weight.to_f64()).sum()),
    }
}

#[cfg(test)]
mod tests;
