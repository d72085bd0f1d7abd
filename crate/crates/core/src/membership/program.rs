//! Constraint systems shared by membership checks and set-restricted maxima.

use crate::error::{Error, Result};
use crate::index;
use crate::lp::LinearProgram;
use crate::model::Scenario;
use crate::scalar::Scalar;

use super::certificate::DeterministicStrategy;

/// What the class decomposition must reproduce.
pub(crate) enum Target<'a, S> {
    Fixed(&'a [S]),
    /// Box entries become variables `q ≥ 0`.
    Free,
}

impl<S: Scalar> Target<'_, S> {
    fn add_repro_row(&self, lp: &mut LinearProgram<S>, mut coeffs: Vec<(usize, S)>, e: usize, box_var0: Option<usize>) -> usize {
        match self {
            Target::Fixed(p) => lp.add_equality(coeffs, p[e].clone()),
            Target::Free => {
                coeffs.push((box_var0.expect("free target has box variables") + e, -S::one()));
                lp.add_equality(coeffs, S::zero())
            }
        }
    }
}

/// Restriction placed on each grouped-side table.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum TableRule {
    Unconstrained,
    NoSignalling,
    /// Prefix marginals of this order (positions within the group) ignore later inputs.
    Sequential(Vec<usize>),
}

pub(crate) struct LocalProgram<S> {
    pub lp: LinearProgram<S>,
    /// Per vertex, one strategy per party.
    pub vertices: Vec<Vec<usize>>,
    pub repro_rows: Vec<usize>,
    pub sum_row: usize,
    pub box_var0: Option<usize>,
}

/// Mixture of products of deterministic strategies of every party.
pub(crate) fn local_program<S: Scalar>(s: &Scenario, target: Target<'_, S>, cap: usize) -> Result<LocalProgram<S>> {
    let count = s
        .local_vertex_count()
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Cap(format!("local vertex count exceeds {cap}")))?;
    let per_party: Vec<usize> = (0..s.parties())
        .map(|p| s.outputs()[p].pow(s.inputs()[p] as u32))
        .collect();
    let strategies: Vec<Vec<DeterministicStrategy>> = (0..s.parties())
        .map(|p| DeterministicStrategy::all(p, s.inputs()[p], s.outputs()[p]).collect())
        .collect();
    let len = s.table_len();
    let free = matches!(target, Target::Free);
    let mut lp = LinearProgram::new(count + if free { len } else { 0 });
    let box_var0 = free.then_some(count);
    let mut rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); len];
    let mut vertices = Vec::with_capacity(count);
    let mut a = vec![0; s.parties()];
    for v in 0..count {
        let choice = index::decode(&per_party, v);
        for xi in 0..s.input_count() {
            let x = s.input_tuple(xi);
            for p in 0..s.parties() {
                a[p] = strategies[p][choice[p]].output(x[p]);
            }
            rows[s.index(&x, &a)].push((v, S::one()));
        }
        vertices.push(choice);
    }
    let repro_rows = rows
        .into_iter()
        .enumerate()
        .map(|(e, r)| target.add_repro_row(&mut lp, r, e, box_var0))
        .collect();
    let sum_row = lp.add_equality((0..count).map(|v| (v, S::one())).collect(), S::one());
    Ok(LocalProgram {
        lp,
        vertices,
        repro_rows,
        sum_row,
        box_var0,
    })
}

pub(crate) struct BilocalProgram<S> {
    pub lp: LinearProgram<S>,
    pub group: Vec<usize>,
    pub group_scenario: Scenario,
    pub strategies: Vec<DeterministicStrategy>,
    pub rules: Vec<TableRule>,
    /// `weights[set][λ]`; one set when weights are shared.
    pub weights: Vec<Vec<usize>>,
    /// `tables[λ][direction]` is the first variable of that table.
    pub tables: Vec<Vec<usize>>,
    /// `repro_rows[direction][entry]`.
    pub repro_rows: Vec<Vec<usize>>,
    pub sum_rows: Vec<usize>,
    pub box_var0: Option<usize>,
}

impl<S> BilocalProgram<S> {
    pub fn weight_set(&self, direction: usize) -> usize {
        if self.weights.len() == 1 {
            0
        } else {
            direction
        }
    }
}

/// Box entry `e` as `(singleton input, singleton output, group table index)`.
pub(crate) fn split_entries(s: &Scenario, singleton: usize, group: &[usize], gs: &Scenario) -> Vec<(usize, usize, usize)> {
    (0..s.table_len())
        .map(|e| {
            let x = s.input_tuple(e / s.output_count());
            let a = s.output_tuple(e % s.output_count());
            let xg: Vec<usize> = group.iter().map(|&q| x[q]).collect();
            let ag: Vec<usize> = group.iter().map(|&q| a[q]).collect();
            (x[singleton], a[singleton], gs.index(&xg, &ag))
        })
        .collect()
}

/// `P = Σ_λ w_λ D_λ ⊗ T_{λ,d}` for every direction `d`, where `D_λ` runs over
/// the singleton's deterministic strategies and `t = w_λ T` is a variable.
pub(crate) fn bilocal_program<S: Scalar>(
    s: &Scenario,
    singleton: usize,
    group: &[usize],
    rules: Vec<TableRule>,
    shared_weights: bool,
    target: Target<'_, S>,
    cap: usize,
) -> Result<BilocalProgram<S>> {
    let gs = s.restrict(group)?;
    let (xs, os) = (s.inputs()[singleton], s.outputs()[singleton]);
    let n_strat = os
        .checked_pow(xs as u32)
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Cap(format!("singleton strategy count exceeds {cap}")))?;
    let strategies: Vec<DeterministicStrategy> = DeterministicStrategy::all(singleton, xs, os).collect();
    let dirs = rules.len();
    let sets = if shared_weights { 1 } else { dirs };
    let tlen = gs.table_len();
    let mut next = 0;
    let mut take = |k: usize| {
        let first = next;
        next += k;
        first
    };
    let weights: Vec<Vec<usize>> = (0..sets).map(|_| (0..n_strat).map(|_| take(1)).collect()).collect();
    let tables: Vec<Vec<usize>> = (0..n_strat).map(|_| (0..dirs).map(|_| take(tlen)).collect()).collect();
    let box_var0 = matches!(target, Target::Free).then(|| take(s.table_len()));
    let mut lp = LinearProgram::new(next);

    let entries = split_entries(s, singleton, group, &gs);
    let mut repro_rows = Vec::with_capacity(dirs);
    for d in 0..dirs {
        let rows = entries
            .iter()
            .enumerate()
            .map(|(e, &(x1, a1, gi))| {
                let coeffs = strategies
                    .iter()
                    .enumerate()
                    .filter(|(_, st)| st.output(x1) == a1)
                    .map(|(l, _)| (tables[l][d] + gi, S::one()))
                    .collect();
                target.add_repro_row(&mut lp, coeffs, e, box_var0)
            })
            .collect();
        repro_rows.push(rows);
    }

    let dg = gs.output_count();
    for l in 0..n_strat {
        for (d, rule) in rules.iter().enumerate() {
            let t0 = tables[l][d];
            let w = weights[if shared_weights { 0 } else { d }][l];
            for xg in 0..gs.input_count() {
                let mut coeffs: Vec<(usize, S)> = (0..dg).map(|ag| (t0 + xg * dg + ag, S::one())).collect();
                coeffs.push((w, -S::one()));
                lp.add_equality(coeffs, S::zero());
            }
            let keeps: Vec<Vec<usize>> = match rule {
                TableRule::Unconstrained => Vec::new(),
                TableRule::NoSignalling => (1u64..(1u64 << group.len()) - 1)
                    .map(|m| (0..group.len()).filter(|p| m >> p & 1 == 1).collect())
                    .collect(),
                TableRule::Sequential(order) => (1..order.len()).map(|k| order[..k].to_vec()).collect(),
            };
            for keep in keeps {
                for coeffs in marginal_equalities::<S>(&gs, &keep, t0) {
                    lp.add_equality(coeffs, S::zero());
                }
            }
        }
    }
    let sum_rows = weights
        .iter()
        .map(|set| lp.add_equality(set.iter().map(|&v| (v, S::one())).collect(), S::one()))
        .collect();
    Ok(BilocalProgram {
        lp,
        group: group.to_vec(),
        group_scenario: gs,
        strategies,
        rules,
        weights,
        tables,
        repro_rows,
        sum_rows,
        box_var0,
    })
}

/// Rows forcing the marginal on `keep` of the table starting at `t0` to equal
/// its value at complementary inputs all zero.
pub(crate) fn marginal_equalities<S: Scalar>(gs: &Scenario, keep: &[usize], t0: usize) -> Vec<Vec<(usize, S)>> {
    let n = gs.parties();
    let keep_outputs: Vec<usize> = keep.iter().map(|&p| gs.outputs()[p]).collect();
    let dk = index::product(&keep_outputs);
    let d = gs.output_count();
    // kept-output index of each joint output
    let kidx: Vec<usize> = (0..d)
        .map(|ai| {
            let a = gs.output_tuple(ai);
            let ak: Vec<usize> = keep.iter().map(|&p| a[p]).collect();
            index::encode(&keep_outputs, &ak)
        })
        .collect();
    let mut rows = Vec::new();
    for xi in 0..gs.input_count() {
        let mut x = gs.input_tuple(xi);
        for (p, slot) in x.iter_mut().enumerate().take(n) {
            if !keep.contains(&p) {
                *slot = 0;
            }
        }
        let ri = index::encode(gs.inputs(), &x);
        if ri == xi {
            continue;
        }
        for k in 0..dk {
            let mut coeffs = Vec::new();
            for ai in (0..d).filter(|&ai| kidx[ai] == k) {
                coeffs.push((t0 + xi * d + ai, S::one()));
                coeffs.push((t0 + ri * d + ai, -S::one()));
            }
            rows.push(coeffs);
        }
    }
    rows
}

/// Box variables with normalization and every no-signalling equality.
pub(crate) fn no_signalling_program<S: Scalar>(s: &Scenario) -> LinearProgram<S> {
    let mut lp = LinearProgram::new(s.table_len());
    let d = s.output_count();
    for xi in 0..s.input_count() {
        lp.add_equality((0..d).map(|ai| (xi * d + ai, S::one())).collect(), S::one());
    }
    let n = s.parties();
    for m in 1u64..(1u64 << n).saturating_sub(1) {
        let keep: Vec<usize> = (0..n).filter(|p| m >> p & 1 == 1).collect();
        for coeffs in marginal_equalities::<S>(s, &keep, 0) {
            lp.add_equality(coeffs, S::zero());
        }
    }
    lp
}
