//! Dense two-phase simplex with Bland's rule over exact rationals or floats.
//!
//! Programs have the form
//!
//! ```text
//!   maximize    c·x
//!   subject to  E x  = e
//!               G x >= g
//!               x   >= l
//! ```
//!
//! Exact solves re-check every answer by substitution before returning it:
//! a primal point against the constraints, an infeasibility verdict against
//! its Farkas multipliers, and an optimum against its dual multipliers.

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::{Mode, Scalar};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("solver self-check failed: {0}")]
    VerificationFailed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<S> {
    /// Sparse row as `(variable, coefficient)`.
    pub coeffs: Vec<(usize, S)>,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Option<Vec<S>>,
    equalities: Vec<Constraint<S>>,
    inequalities: Vec<Constraint<S>>,
    lower_bounds: Vec<S>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: None,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            lower_bounds: vec![S::zero(); num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn equalities(&self) -> &[Constraint<S>] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint<S>] {
        &self.inequalities
    }

    pub fn lower_bounds(&self) -> &[S] {
        &self.lower_bounds
    }

    pub fn objective(&self) -> Option<&[S]> {
        self.objective.as_deref()
    }

    /// Appends a variable with lower bound 0 and returns its index.
    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.lower_bounds.push(S::zero());
        if let Some(c) = &mut self.objective {
            c.push(S::zero());
        }
        self.num_vars - 1
    }

    pub fn set_objective(&mut self, c: Vec<S>) {
        self.objective = Some(c);
    }

    pub fn set_lower_bound(&mut self, var: usize, lb: S) {
        self.lower_bounds[var] = lb;
    }

    /// Returns the row index among equalities.
    pub fn add_equality(&mut self, coeffs: Vec<(usize, S)>, rhs: S) -> usize {
        self.equalities.push(Constraint { coeffs, rhs });
        self.equalities.len() - 1
    }

    /// `row >= rhs`; returns the row index among inequalities.
    pub fn add_inequality(&mut self, coeffs: Vec<(usize, S)>, rhs: S) -> usize {
        self.inequalities.push(Constraint { coeffs, rhs });
        self.inequalities.len() - 1
    }

    /// `row <= rhs`, stored negated.
    pub fn add_upper_inequality(&mut self, coeffs: Vec<(usize, S)>, rhs: S) -> usize {
        self.add_inequality(coeffs.into_iter().map(|(j, v)| (j, -v)).collect(), -rhs)
    }

    fn check(&self) -> Result<(), LpError> {
        if let Some(c) = &self.objective {
            if c.len() != self.num_vars {
                return Err(LpError::Malformed(format!(
                    "objective has {} coefficients for {} variables",
                    c.len(),
                    self.num_vars
                )));
            }
        }
        if self.lower_bounds.len() != self.num_vars {
            return Err(LpError::Malformed("one lower bound per variable required".into()));
        }
        let finite = |v: &S| v.to_f64().is_finite();
        for row in self.equalities.iter().chain(&self.inequalities) {
            if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
                return Err(LpError::Malformed(format!("row references variable {j}")));
            }
            if !row.coeffs.iter().all(|(_, v)| finite(v)) || !finite(&row.rhs) {
                return Err(LpError::Malformed("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        let mut bump = |v: S| {
            if v > worst {
                worst = v;
            }
        };
        for row in &self.equalities {
            bump((row_dot(&row.coeffs, x) - row.rhs.clone()).abs_val());
        }
        for row in &self.inequalities {
            bump(row.rhs.clone() - row_dot(&row.coeffs, x));
        }
        for (xj, lb) in x.iter().zip(&self.lower_bounds) {
            bump(lb.clone() - xj.clone());
        }
        worst
    }

    pub fn objective_value(&self, x: &[S]) -> Option<S> {
        self.objective.as_ref().map(|c| {
            let mut s = S::zero();
            for (cj, xj) in c.iter().zip(x) {
                s.add_ref(&cj.mul_ref(xj));
            }
            s
        })
    }

    /// `Σ_i y_i row_i` as a dense vector over the variables.
    fn combine(&self, m: &Multipliers<S>) -> Vec<S> {
        let mut out = vec![S::zero(); self.num_vars];
        let rows = self.equalities.iter().zip(&m.equalities).chain(self.inequalities.iter().zip(&m.inequalities));
        for (row, y) in rows {
            for (j, v) in &row.coeffs {
                out[*j].add_ref(&y.mul_ref(v));
            }
        }
        out
    }

    fn multiplier_rhs(&self, m: &Multipliers<S>) -> S {
        let mut s = S::zero();
        for (row, y) in self.equalities.iter().zip(&m.equalities).chain(self.inequalities.iter().zip(&m.inequalities)) {
            s.add_ref(&y.mul_ref(&row.rhs));
        }
        s
    }

    /// Checks a Farkas certificate: `yᵀA <= 0` on every variable, inequality
    /// multipliers `>= 0`, and `yᵀb - (yᵀA)·l > 0`, which together rule out
    /// every feasible point.
    pub fn verify_farkas(&self, cert: &Multipliers<S>, tol: f64) -> Result<S, LpError> {
        self.check_multiplier_shape(cert)?;
        if let Some(v) = cert.inequalities.iter().find(|v| v.is_negative_beyond(tol)) {
            return Err(LpError::VerificationFailed(format!("negative inequality multiplier {v:?}")));
        }
        let combo = self.combine(cert);
        if let Some((j, v)) = combo.iter().enumerate().find(|(_, v)| v.is_positive_beyond(tol)) {
            return Err(LpError::VerificationFailed(format!("Farkas combination positive on variable {j}: {v:?}")));
        }
        let mut gap = self.multiplier_rhs(cert);
        for (cj, lb) in combo.iter().zip(&self.lower_bounds) {
            gap.sub_mul(cj, lb);
        }
        if !gap.is_positive_beyond(tol) {
            return Err(LpError::VerificationFailed(format!("Farkas gap {gap:?} is not positive")));
        }
        Ok(gap)
    }

    /// Checks dual multipliers `m` for a maximization and returns the upper
    /// bound they certify: `c - Aᵀm <= 0`, inequality multipliers `<= 0`;
    /// the bound is `mᵀb + (c - Aᵀm)·l`.
    pub fn verify_dual_bound(&self, m: &Multipliers<S>, tol: f64) -> Result<S, LpError> {
        let c = self
            .objective
            .as_ref()
            .ok_or_else(|| LpError::Malformed("no objective".into()))?;
        self.check_multiplier_shape(m)?;
        if let Some(v) = m.inequalities.iter().find(|v| v.is_positive_beyond(tol)) {
            return Err(LpError::VerificationFailed(format!("positive inequality dual {v:?}")));
        }
        let combo = self.combine(m);
        let mut bound = self.multiplier_rhs(m);
        for ((cj, aj), lb) in c.iter().zip(&combo).zip(&self.lower_bounds) {
            let red = cj.clone() - aj.clone();
            if red.is_positive_beyond(tol) {
                return Err(LpError::VerificationFailed(format!("dual infeasible: reduced cost {red:?}")));
            }
            bound.add_ref(&red.mul_ref(lb));
        }
        Ok(bound)
    }

    fn check_multiplier_shape(&self, m: &Multipliers<S>) -> Result<(), LpError> {
        if m.equalities.len() != self.equalities.len() || m.inequalities.len() != self.inequalities.len() {
            return Err(LpError::VerificationFailed("multiplier count mismatch".into()));
        }
        Ok(())
    }
}

pub(crate) fn row_dot<S: Scalar>(coeffs: &[(usize, S)], x: &[S]) -> S {
    let mut s = S::zero();
    for (j, v) in coeffs {
        s.add_ref(&v.mul_ref(&x[*j]));
    }
    s
}

/// One multiplier per constraint row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Multipliers<S> {
    pub equalities: Vec<S>,
    pub inequalities: Vec<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Feasible,
    Infeasible,
    Optimal,
    Unbounded,
    /// Iteration cap or numerical trouble; never a verdict.
    Undecided,
}

#[derive(Clone, Debug)]
pub struct LpResult<S> {
    pub status: LpStatus,
    pub primal: Option<Vec<S>>,
    pub objective: Option<S>,
    /// Exact mode only.
    pub farkas: Option<Multipliers<S>>,
    /// Optimal dual multipliers (maximize only).
    pub dual: Option<Multipliers<S>>,
    /// Float: max constraint violation of the returned point, or the
    /// phase-one residual when infeasible. Exact: 0 or the residual.
    pub margin: f64,
    pub iterations: usize,
}

/// Entering-column choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Lowest-index improving column.
    Bland,
    /// Largest reduced cost; switches to Bland while pivots stay degenerate.
    Dantzig,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub pivot_tol: f64,
    pub verdict_tol: f64,
    pub rule: PivotRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 500_000,
            pivot_tol: 1e-10,
            verdict_tol: 1e-9,
            rule: PivotRule::Bland,
        }
    }
}

pub fn solve_feasibility<S: Scalar>(lp: &LinearProgram<S>, opts: &SolverOptions) -> Result<LpResult<S>, LpError> {
    solve(lp, opts, false)
}

pub fn maximize<S: Scalar>(lp: &LinearProgram<S>, opts: &SolverOptions) -> Result<LpResult<S>, LpError> {
    if lp.objective.is_none() {
        return Err(LpError::Malformed("maximize needs an objective".into()));
    }
    solve(lp, opts, true)
}

pub(crate) enum RunOutcome {
    Optimal,
    Unbounded,
    IterationCap,
}

/// Tableau state. Columns `0..m` are the artificials (their block holds
/// `B⁻¹`); structural columns follow and may be appended at any time.
pub(crate) struct Simplex<S> {
    m: usize,
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    costs: Vec<S>,
    reduced: Vec<S>,
    neg_obj: S,
    opts: SolverOptions,
    pub(crate) iterations: usize,
}

const DROP_TOL: f64 = 1e-14;
/// Degenerate pivots tolerated under the Dantzig rule before Bland takes over.
const DEGENERATE_STREAK: usize = 50;

impl<S: Scalar> Simplex<S> {
    /// Phase-one start; `rhs` must be nonnegative.
    pub(crate) fn new(rhs: Vec<S>, opts: SolverOptions) -> Self {
        let m = rhs.len();
        let rows = (0..m)
            .map(|i| (0..m).map(|k| if i == k { S::one() } else { S::zero() }).collect())
            .collect();
        let mut neg_obj = S::zero();
        for b in &rhs {
            neg_obj.add_ref(b);
        }
        Simplex {
            m,
            rows,
            rhs,
            basis: (0..m).collect(),
            costs: vec![-S::one(); m],
            reduced: vec![S::zero(); m],
            neg_obj,
            opts,
            iterations: 0,
        }
    }

    pub(crate) fn struct_count(&self) -> usize {
        self.costs.len() - self.m
    }

    /// Appends a structural column given in the starting row space; returns
    /// its structural index.
    pub(crate) fn add_column(&mut self, col: &[(usize, S)], cost: S) -> usize {
        let mut red = cost.clone();
        for i in 0..self.m {
            let mut v = S::zero();
            for (k, a) in col {
                let binv = &self.rows[i][*k];
                if !binv.near_zero(0.0) {
                    v.add_ref(&binv.mul_ref(a));
                }
            }
            if v.near_zero(DROP_TOL) {
                v = S::zero();
            } else {
                red.sub_mul(&self.costs[self.basis[i]], &v);
            }
            self.rows[i].push(v);
        }
        self.costs.push(cost);
        self.reduced.push(red);
        self.struct_count() - 1
    }

    /// Phase-one residual `Σ artificials`.
    pub(crate) fn phase_one_residual(&self) -> S {
        self.neg_obj.clone()
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.rows[pr][pc].clone();
        let width = self.rows[pr].len();
        let mut nz = Vec::new();
        for j in 0..width {
            let v = &mut self.rows[pr][j];
            if v.near_zero(0.0) {
                continue;
            }
            *v = v.div_ref(&piv);
            nz.push(j);
        }
        self.rows[pr][pc] = S::one();
        self.rhs[pr] = self.rhs[pr].div_ref(&piv);
        let prow: Vec<(usize, S)> = nz.iter().map(|&j| (j, self.rows[pr][j].clone())).collect();
        let prhs = self.rhs[pr].clone();
        for i in 0..self.m {
            if i == pr {
                continue;
            }
            let f = self.rows[i][pc].clone();
            if f.near_zero(0.0) {
                continue;
            }
            let row = &mut self.rows[i];
            for (j, v) in &prow {
                row[*j].sub_mul(&f, v);
                if row[*j].near_zero(DROP_TOL) {
                    row[*j] = S::zero();
                }
            }
            row[pc] = S::zero();
            self.rhs[i].sub_mul(&f, &prhs);
            if self.rhs[i].near_zero(DROP_TOL) {
                self.rhs[i] = S::zero();
            }
        }
        let f = self.reduced[pc].clone();
        if !f.near_zero(0.0) {
            for (j, v) in &prow {
                self.reduced[*j].sub_mul(&f, v);
            }
            self.reduced[pc] = S::zero();
            self.neg_obj.sub_mul(&f, &prhs);
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving
    /// variable among ratio ties. Artificials never enter.
    pub(crate) fn run(&mut self) -> RunOutcome {
        let tol = self.opts.pivot_tol;
        let mut streak = 0;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return RunOutcome::IterationCap;
            }
            let bland = self.opts.rule == PivotRule::Bland || streak >= DEGENERATE_STREAK;
            let improving = (self.m..self.costs.len()).filter(|&j| self.reduced[j].is_positive_beyond(tol));
            let entering = if bland {
                improving.take(1).next()
            } else {
                improving.fold(None, |best: Option<usize>, j| match best {
                    Some(b) if self.reduced[b] >= self.reduced[j] => Some(b),
                    _ => Some(j),
                })
            };
            let Some(pc) = entering else {
                return RunOutcome::Optimal;
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.m {
                let a = &self.rows[i][pc];
                if !a.is_positive_beyond(tol) {
                    continue;
                }
                let ratio = self.rhs[i].div_ref(a);
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        let diff = ratio.clone() - br.clone();
                        if diff.near_zero(tol * (1.0 + br.to_f64().abs())) {
                            self.basis[i] < self.basis[*bi]
                        } else {
                            diff < S::zero()
                        }
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((pr, ratio)) => {
                    if ratio.near_zero(tol) {
                        streak += 1;
                    } else {
                        streak = 0;
                    }
                    self.pivot(pr, pc)
                }
                None => return RunOutcome::Unbounded,
            }
        }
    }

    /// Pivots basic artificials out where a structural entry allows it.
    pub(crate) fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] >= self.m {
                continue;
            }
            if let Some(j) = (self.m..self.costs.len()).find(|&j| !self.rows[i][j].near_zero(self.opts.pivot_tol)) {
                self.rhs[i] = S::zero();
                self.pivot(i, j);
            }
        }
    }

    /// Switches to phase two with the given structural costs (maximize).
    pub(crate) fn set_costs(&mut self, structural: &[S]) {
        for k in 0..self.m {
            self.costs[k] = S::zero();
        }
        for (j, c) in structural.iter().enumerate() {
            self.costs[self.m + j] = c.clone();
        }
        let width = self.costs.len();
        self.reduced = self.costs.clone();
        self.neg_obj = S::zero();
        for i in 0..self.m {
            let cb = self.costs[self.basis[i]].clone();
            if cb.near_zero(0.0) {
                continue;
            }
            for j in 0..width {
                let v = &self.rows[i][j];
                if !v.near_zero(0.0) {
                    let t = cb.mul_ref(v);
                    self.reduced[j] = self.reduced[j].clone() - t;
                }
            }
            self.neg_obj.sub_mul(&cb, &self.rhs[i]);
        }
        for i in 0..self.m {
            self.reduced[self.basis[i]] = S::zero();
        }
    }

    /// Row duals `y = c_Bᵀ B⁻¹` in the starting row space.
    pub(crate) fn duals(&self) -> Vec<S> {
        (0..self.m).map(|k| self.costs[k].clone() - self.reduced[k].clone()).collect()
    }

    /// Values of the structural variables.
    pub(crate) fn structural_values(&self) -> Vec<S> {
        let mut x = vec![S::zero(); self.struct_count()];
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= self.m {
                x[b - self.m] = self.rhs[i].clone();
            }
        }
        x
    }
}

/// Standard-form view of a program: per-row sign flips and the shifted rhs.
struct StandardForm<S> {
    signs: Vec<bool>,
    rhs: Vec<S>,
    /// Structural columns: originals then one slack per inequality.
    columns: Vec<Vec<(usize, S)>>,
}

fn standardize<S: Scalar>(lp: &LinearProgram<S>) -> StandardForm<S> {
    let rows: Vec<&Constraint<S>> = lp.equalities.iter().chain(&lp.inequalities).collect();
    let n_eq = lp.equalities.len();
    let mut rhs = Vec::with_capacity(rows.len());
    let mut signs = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut b = row.rhs.clone();
        for (j, v) in &row.coeffs {
            b.sub_mul(v, &lp.lower_bounds[*j]);
        }
        let neg = b < S::zero();
        signs.push(neg);
        rhs.push(if neg { -b } else { b });
    }
    let mut columns: Vec<Vec<(usize, S)>> = vec![Vec::new(); lp.num_vars];
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in &row.coeffs {
            let v = if signs[i] { -v.clone() } else { v.clone() };
            match columns[*j].last_mut() {
                Some((r, acc)) if *r == i => acc.add_ref(&v),
                _ => columns[*j].push((i, v)),
            }
        }
    }
    for i in n_eq..rows.len() {
        columns.push(vec![(i, if signs[i] { S::one() } else { -S::one() })]);
    }
    StandardForm { signs, rhs, columns }
}

fn to_original_multipliers<S: Scalar>(lp: &LinearProgram<S>, signs: &[bool], y: Vec<S>) -> Multipliers<S> {
    let mut y: Vec<S> = y
        .into_iter()
        .zip(signs)
        .map(|(v, &neg)| if neg { -v } else { v })
        .collect();
    let inequalities = y.split_off(lp.equalities.len());
    Multipliers {
        equalities: y,
        inequalities,
    }
}

fn solve<S: Scalar>(lp: &LinearProgram<S>, opts: &SolverOptions, optimize: bool) -> Result<LpResult<S>, LpError> {
    lp.check()?;
    let exact = S::MODE == Mode::Rational;
    let std = standardize(lp);
    let mut sx = Simplex::new(std.rhs.clone(), *opts);
    for col in &std.columns {
        sx.add_column(col, S::zero());
    }
    let undecided = |iterations| LpResult {
        status: LpStatus::Undecided,
        primal: None,
        objective: None,
        farkas: None,
        dual: None,
        margin: f64::NAN,
        iterations,
    };

    match sx.run() {
        RunOutcome::IterationCap => return Ok(undecided(sx.iterations)),
        RunOutcome::Unbounded => {
            return Err(LpError::VerificationFailed("phase one cannot be unbounded".into()));
        }
        RunOutcome::Optimal => {}
    }
    let residual = sx.phase_one_residual();
    if residual.is_positive_beyond(opts.verdict_tol) {
        // y = -duals of phase one gives yᵀA <= 0, yᵀb > 0 in standard form.
        let y: Vec<S> = sx.duals().into_iter().map(|v| -v).collect();
        let cert = to_original_multipliers(lp, &std.signs, y);
        let farkas = if exact {
            lp.verify_farkas(&cert, 0.0)?;
            Some(cert)
        } else {
            None
        };
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            primal: None,
            objective: None,
            farkas,
            dual: None,
            margin: residual.to_f64(),
            iterations: sx.iterations,
        });
    }

    sx.drive_out_artificials();
    let mut status = LpStatus::Feasible;
    let mut dual = None;
    if optimize {
        let c = lp.objective.as_ref().expect("checked by maximize");
        let mut costs = c.clone();
        costs.resize(std.columns.len(), S::zero());
        sx.set_costs(&costs);
        match sx.run() {
            RunOutcome::IterationCap => return Ok(undecided(sx.iterations)),
            RunOutcome::Unbounded => {
                return Ok(LpResult {
                    status: LpStatus::Unbounded,
                    primal: None,
                    objective: None,
                    farkas: None,
                    dual: None,
                    margin: 0.0,
                    iterations: sx.iterations,
                })
            }
            RunOutcome::Optimal => status = LpStatus::Optimal,
        }
        dual = Some(to_original_multipliers(lp, &std.signs, sx.duals()));
    }

    let values = sx.structural_values();
    let x: Vec<S> = values[..lp.num_vars]
        .iter()
        .zip(&lp.lower_bounds)
        .map(|(v, lb)| v.clone() + lb.clone())
        .collect();
    let violation = lp.max_violation(&x);
    let objective = lp.objective_value(&x).filter(|_| optimize);
    if exact {
        if !violation.near_zero(0.0) {
            return Err(LpError::VerificationFailed(format!("primal violates constraints by {violation:?}")));
        }
        if let (Some(d), Some(obj)) = (&dual, &objective) {
            let bound = lp.verify_dual_bound(d, 0.0)?;
            if bound != *obj {
                return Err(LpError::VerificationFailed(format!("dual bound {bound:?} != objective {obj:?}")));
            }
        }
    } else if violation.to_f64() > opts.verdict_tol {
        let mut r = undecided(sx.iterations);
        r.margin = violation.to_f64();
        return Ok(r);
    }
    Ok(LpResult {
        status,
        primal: Some(x),
        objective,
        farkas: None,
        dual,
        margin: violation.to_f64(),
        iterations: sx.iterations,
    })
}

/// Float copy of an exact program.
pub fn to_float(lp: &LinearProgram<BigRational>) -> LinearProgram<f64> {
    let conv = |rows: &[Constraint<BigRational>]| -> Vec<Constraint<f64>> {
        rows.iter()
            .map(|r| Constraint {
                coeffs: r.coeffs.iter().map(|(j, v)| (*j, Scalar::to_f64(v))).collect(),
                rhs: Scalar::to_f64(&r.rhs),
            })
            .collect()
    };
    LinearProgram {
        num_vars: lp.num_vars,
        objective: lp.objective.as_ref().map(|c| c.iter().map(Scalar::to_f64).collect()),
        equalities: conv(&lp.equalities),
        inequalities: conv(&lp.inequalities),
        lower_bounds: lp.lower_bounds.iter().map(Scalar::to_f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    fn r(n: i64) -> BigRational {
        ratio(n, 1)
    }

    #[test]
    fn single_equality_feasible() {
        let mut lp = LinearProgram::<BigRational>::new(1);
        lp.add_equality(vec![(0, r(1))], r(1));
        let res = solve_feasibility(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Feasible);
        assert_eq!(res.primal.unwrap(), vec![r(1)]);
    }

    #[test]
    fn negative_target_is_infeasible_with_certificate() {
        let mut lp = LinearProgram::<BigRational>::new(1);
        lp.add_equality(vec![(0, r(1))], r(-1));
        let res = solve_feasibility(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        let cert = res.farkas.unwrap();
        assert!(lp.verify_farkas(&cert, 0.0).is_ok());
    }

    #[test]
    fn bounded_maximum() {
        let mut lp = LinearProgram::<BigRational>::new(1);
        lp.add_upper_inequality(vec![(0, r(1))], r(3));
        lp.set_objective(vec![r(1)]);
        let res = maximize(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.objective.unwrap(), r(3));
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.add_inequality(vec![(0, 1.0), (1, -1.0)], 0.0);
        lp.set_objective(vec![1.0, 0.0]);
        let res = maximize(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Unbounded);
    }

    #[test]
    fn empty_program_is_feasible() {
        let lp = LinearProgram::<BigRational>::new(0);
        let res = solve_feasibility(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Feasible);
        assert_eq!(res.primal.unwrap(), Vec::<BigRational>::new());
    }

    #[test]
    fn lower_bounds_shift_the_solution() {
        // x + y = 1, x >= 2, y >= -3, maximize y
        let mut lp = LinearProgram::<BigRational>::new(2);
        lp.set_lower_bound(0, r(2));
        lp.set_lower_bound(1, r(-3));
        lp.add_equality(vec![(0, r(1)), (1, r(1))], r(1));
        lp.set_objective(vec![r(0), r(1)]);
        let res = maximize(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.objective.unwrap(), r(-1));
        assert_eq!(res.primal.unwrap(), vec![r(2), r(-1)]);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let mut lp = LinearProgram::<BigRational>::new(2);
        lp.add_equality(vec![(0, r(1)), (1, r(1))], r(1));
        lp.add_equality(vec![(0, r(2)), (1, r(2))], r(2));
        lp.set_objective(vec![r(1), r(2)]);
        let res = maximize(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.objective.unwrap(), r(2));
    }

    #[test]
    fn iteration_cap_is_undecided() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0);
        let opts = SolverOptions {
            max_iterations: 0,
            ..SolverOptions::default()
        };
        assert_eq!(solve_feasibility(&lp, &opts).unwrap().status, LpStatus::Undecided);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add_equality(vec![(3, 1.0)], 1.0);
        assert!(matches!(solve_feasibility(&lp, &SolverOptions::default()), Err(LpError::Malformed(_))));
    }

    #[test]
    fn inequality_infeasibility_certificate() {
        // x >= 2 and x <= 1
        let mut lp = LinearProgram::<BigRational>::new(1);
        lp.add_inequality(vec![(0, r(1))], r(2));
        lp.add_upper_inequality(vec![(0, r(1))], r(1));
        let res = solve_feasibility(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, LpStatus::Infeasible);
        let cert = res.farkas.unwrap();
        assert!(cert.inequalities.iter().all(|v| *v >= r(0)));
    }
}
