//! Grouped bilocal models by column generation.
//!
//! Each group of parties is described by a deterministic *family*: for the
//! sequential model, an output for every node of the tree of ordered input
//! prefixes, which yields one deterministic table per time order and makes
//! orders that share a prefix agree on it; for the unconstrained model, any
//! function from the group's joint input to its joint output. The master
//! program mixes products of one family per side and must reproduce the box
//! for every pair of orders. Columns are priced by enumerating the families
//! of the smaller side and optimizing the other side by dynamic programming
//! over its prefix tree.

use std::collections::{HashMap, HashSet};

use crate::error::Result;
use crate::index;
use crate::lp::{PivotRule, RunOutcome, Simplex, SolverOptions};
use crate::model::{CorrelationBox, Partition, Scenario};
use crate::scalar::{Mode, Scalar, Table};

use super::certificate::{
    Certificate, ClassTag, Decomposition, GroupTables, MembershipResult, Term, Verdict,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyModel {
    Sequential,
    Unconstrained,
}

/// Largest group accepted at all.
pub const MAX_GROUP: usize = 3;

pub(crate) struct Families {
    pub parties: Vec<usize>,
    pub scenario: Scenario,
    model: FamilyModel,
    /// Time orders as positions within the group.
    pub orders: Vec<Vec<usize>>,
    /// Sequential: `(ordered prefix, prefix inputs)` per node.
    nodes: Vec<(Vec<usize>, Vec<usize>)>,
    node_of: HashMap<(Vec<usize>, Vec<usize>), usize>,
    /// Alphabet of each family slot.
    slot_sizes: Vec<usize>,
    /// `paths[order][gx]`: node visited at each step.
    paths: Vec<Vec<Vec<usize>>>,
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

impl Families {
    pub fn new(s: &Scenario, parties: &[usize], model: FamilyModel) -> Result<Self> {
        let scenario = s.restrict(parties)?;
        let k = parties.len();
        let mut fam = Families {
            parties: parties.to_vec(),
            scenario,
            model,
            orders: Vec::new(),
            nodes: Vec::new(),
            node_of: HashMap::new(),
            slot_sizes: Vec::new(),
            paths: Vec::new(),
        };
        match model {
            FamilyModel::Unconstrained => {
                fam.orders = vec![Vec::new()];
                fam.slot_sizes = vec![fam.scenario.output_count(); fam.scenario.input_count()];
            }
            FamilyModel::Sequential => {
                fam.orders = permutations(k);
                fam.build_nodes(&mut Vec::new(), &mut Vec::new());
                let gs = &fam.scenario;
                let paths = fam
                    .orders
                    .iter()
                    .map(|o| {
                        (0..gs.input_count())
                            .map(|gx| {
                                let x = gs.input_tuple(gx);
                                (1..=k)
                                    .map(|j| {
                                        let xs = o[..j].iter().map(|&q| x[q]).collect();
                                        fam.node_of[&(o[..j].to_vec(), xs)]
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect();
                fam.paths = paths;
            }
        }
        Ok(fam)
    }

    fn build_nodes(&mut self, prefix: &mut Vec<usize>, xs: &mut Vec<usize>) {
        let k = self.parties.len();
        for q in 0..k {
            if prefix.contains(&q) {
                continue;
            }
            for xq in 0..self.scenario.inputs()[q] {
                prefix.push(q);
                xs.push(xq);
                let id = self.nodes.len();
                self.nodes.push((prefix.clone(), xs.clone()));
                self.node_of.insert((prefix.clone(), xs.clone()), id);
                self.slot_sizes.push(self.scenario.outputs()[q]);
                self.build_nodes(prefix, xs);
                prefix.pop();
                xs.pop();
            }
        }
    }

    /// Number of deterministic families, if it fits in `usize`.
    pub fn count(&self) -> Option<usize> {
        index::checked_product(&self.slot_sizes)
    }

    pub fn family(&self, k: usize) -> Vec<usize> {
        index::decode(&self.slot_sizes, k)
    }

    /// Joint output index of `fam` under `order` at group input `gx`.
    pub fn output(&self, fam: &[usize], order: usize, gx: usize) -> usize {
        match self.model {
            FamilyModel::Unconstrained => fam[gx],
            FamilyModel::Sequential => {
                let o = &self.orders[order];
                let mut a = vec![0; o.len()];
                for (step, &node) in self.paths[order][gx].iter().enumerate() {
                    a[o[step]] = fam[node];
                }
                index::encode(self.scenario.outputs(), &a)
            }
        }
    }

    /// `table[order][gx] = joint output`.
    pub fn outputs(&self, fam: &[usize]) -> Vec<Vec<usize>> {
        (0..self.orders.len())
            .map(|o| (0..self.scenario.input_count()).map(|gx| self.output(fam, o, gx)).collect())
            .collect()
    }

    /// Family minimizing `Σ_{order,gx} cost[order][gx][ga]`, where `None`
    /// marks a forbidden outcome. `None` when every family is forbidden.
    pub fn minimize<S: Scalar>(&self, cost: &[Vec<Vec<Option<S>>>]) -> Option<(S, Vec<usize>)> {
        let mut fam = vec![0; self.slot_sizes.len()];
        match self.model {
            FamilyModel::Unconstrained => {
                let mut total = S::zero();
                for (gx, row) in cost[0].iter().enumerate() {
                    let (best, v) = argmin(row)?;
                    fam[gx] = best;
                    total.add_ref(&v);
                }
                Some((total, fam))
            }
            FamilyModel::Sequential => {
                let k = self.parties.len();
                let mut x = vec![0; k];
                let mut a = vec![0; k];
                let v = self.descend(cost, &mut Vec::new(), &mut x, &mut a, &mut fam)?;
                Some((v, fam))
            }
        }
    }

    fn descend<S: Scalar>(
        &self,
        cost: &[Vec<Vec<Option<S>>>],
        prefix: &mut Vec<usize>,
        x: &mut [usize],
        a: &mut [usize],
        fam: &mut [usize],
    ) -> Option<S> {
        let gs = &self.scenario;
        if prefix.len() == self.parties.len() {
            let o = self.orders.binary_search(prefix).expect("full prefix is an order");
            return cost[o][index::encode(gs.inputs(), x)][index::encode(gs.outputs(), a)].clone();
        }
        let mut total = Some(S::zero());
        for q in 0..self.parties.len() {
            if prefix.contains(&q) {
                continue;
            }
            for xq in 0..gs.inputs()[q] {
                x[q] = xq;
                prefix.push(q);
                let xs: Vec<usize> = prefix.iter().map(|&p| x[p]).collect();
                let node = self.node_of[&(prefix.clone(), xs)];
                let mut best: Option<(usize, S)> = None;
                for aq in 0..gs.outputs()[q] {
                    a[q] = aq;
                    if let Some(v) = self.descend(cost, prefix, x, a, fam) {
                        if best.as_ref().is_none_or(|(_, b)| v < *b) {
                            best = Some((aq, v));
                        }
                    }
                }
                match best {
                    Some((aq, v)) => {
                        // later siblings overwrote the subtree; replay the winner
                        a[q] = aq;
                        self.descend(cost, prefix, x, a, fam);
                        fam[node] = aq;
                        if let Some(t) = total.as_mut() {
                            t.add_ref(&v);
                        }
                    }
                    None => total = None,
                }
                prefix.pop();
                x[q] = 0;
                a[q] = 0;
            }
        }
        total
    }

    /// Deterministic tables of `fam`, one per order, in mode `S`.
    pub fn tables<S: Scalar>(&self, fam: &[usize]) -> Vec<Table> {
        let gs = &self.scenario;
        self.outputs(fam)
            .into_iter()
            .map(|row| {
                let mut t = vec![S::zero(); gs.table_len()];
                for (gx, ga) in row.into_iter().enumerate() {
                    t[gx * gs.output_count() + ga] = S::one();
                }
                S::into_table(t)
            })
            .collect()
    }

    /// Order labels in global party indices.
    pub fn order_labels(&self) -> Vec<Vec<usize>> {
        self.orders
            .iter()
            .map(|o| o.iter().map(|&q| self.parties[q]).collect())
            .collect()
    }
}

fn argmin<S: Scalar>(row: &[Option<S>]) -> Option<(usize, S)> {
    let mut best: Option<(usize, S)> = None;
    for (i, v) in row.iter().enumerate() {
        if let Some(v) = v {
            if best.as_ref().is_none_or(|(_, b)| v < b) {
                best = Some((i, v.clone()));
            }
        }
    }
    best
}

pub(crate) struct GroupedOptions {
    pub solver: SolverOptions,
    pub family_cap: usize,
    pub row_cap: usize,
    pub tolerance: f64,
}

/// Master program layout. Box entries with zero probability get no rows;
/// columns touching them are never generated.
struct Master<'a, S> {
    box_values: &'a [S],
    scenario: &'a Scenario,
    /// Enumerated side first.
    sides: [Families; 2],
    /// `entry[gxA][gaA][gxB][gaB]`, flattened.
    entry: Vec<usize>,
    dims: [usize; 4],
    combos: usize,
    /// Row offset of each box entry within a combination block.
    live: Vec<Option<usize>>,
    live_count: usize,
}

impl<S: Scalar> Master<'_, S> {
    fn entry(&self, gxa: usize, gaa: usize, gxb: usize, gab: usize) -> usize {
        let [_, da, xb, db] = self.dims;
        self.entry[((gxa * da + gaa) * xb + gxb) * db + gab]
    }

    fn combo(&self, oa: usize, ob: usize) -> usize {
        oa * self.sides[1].orders.len() + ob
    }

    fn row(&self, combo: usize, e: usize) -> Option<usize> {
        self.live[e].map(|k| combo * self.live_count + k)
    }

    fn sum_row(&self) -> usize {
        self.combos * self.live_count
    }

    fn column(&self, va: &[Vec<usize>], vb: &[Vec<usize>]) -> Vec<(usize, S)> {
        let mut col = Vec::new();
        for (oa, rowa) in va.iter().enumerate() {
            for (ob, rowb) in vb.iter().enumerate() {
                let c = self.combo(oa, ob);
                for (gxa, &gaa) in rowa.iter().enumerate() {
                    for (gxb, &gab) in rowb.iter().enumerate() {
                        let r = self.row(c, self.entry(gxa, gaa, gxb, gab)).expect("generated columns avoid zero entries");
                        col.push((r, S::one()));
                    }
                }
            }
        }
        col.push((self.sum_row(), S::one()));
        col.sort_by_key(|c| c.0);
        col
    }

    /// Best partner of every enumerated family, reported as
    /// `(Σ cost over the column's entries + offset, family index, partner)`.
    fn price<T: Scalar>(&self, cost: impl Fn(usize, usize) -> Option<T>, offset: &T, mut keep: impl FnMut(T, usize, Vec<usize>)) {
        let [a, b] = &self.sides;
        let count = a.count().expect("checked against the cap");
        let (xa, xb, db) = (self.dims[0], self.dims[2], self.dims[3]);
        for k in 0..count {
            let va = a.outputs(&a.family(k));
            let mut table = vec![vec![vec![Some(T::zero()); db]; xb]; b.orders.len()];
            for (ob, c_ob) in table.iter_mut().enumerate() {
                for (gxb, c_x) in c_ob.iter_mut().enumerate() {
                    for (gab, c) in c_x.iter_mut().enumerate() {
                        for (oa, rowa) in va.iter().enumerate() {
                            let combo = self.combo(oa, ob);
                            for (gxa, &gaa) in rowa.iter().enumerate().take(xa) {
                                let term = cost(combo, self.entry(gxa, gaa, gxb, gab));
                                *c = match (c.take(), term) {
                                    (Some(mut acc), Some(t)) => {
                                        acc.add_ref(&t);
                                        Some(acc)
                                    }
                                    _ => None,
                                };
                            }
                        }
                    }
                }
            }
            if let Some((v, fb)) = b.minimize(&table) {
                keep(v + offset.clone(), k, fb);
            }
        }
    }

    /// Reduced-cost view of the duals: forbidden where the entry has no row.
    fn dual_cost<'b, T: Scalar>(&'b self, y: &'b [T]) -> impl Fn(usize, usize) -> Option<T> + 'b {
        move |combo, e| self.row(combo, e).map(|r| y[r].clone())
    }
}

pub(crate) fn check_grouped<S: Scalar>(
    b: &CorrelationBox,
    p: &[S],
    partition: &Partition,
    model: FamilyModel,
    opts: &GroupedOptions,
) -> Result<MembershipResult> {
    let class = match model {
        FamilyModel::Sequential => ClassTag::GroupedTobl,
        FamilyModel::Unconstrained => ClassTag::GroupedBl,
    };
    let s = b.scenario();
    let [g0, g1] = partition.sides();
    if g0.len().max(g1.len()) > MAX_GROUP {
        return Ok(MembershipResult::undecided(class, S::MODE, "scale: group larger than 3 parties"));
    }
    let f0 = Families::new(s, g0, model)?;
    let f1 = Families::new(s, g1, model)?;
    let first_small = match (f0.count(), f1.count()) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        _ => false,
    };
    let sides = if first_small { [f0, f1] } else { [f1, f0] };
    if sides[0].count().is_none_or(|c| c > opts.family_cap) {
        return Ok(MembershipResult::undecided(
            class,
            S::MODE,
            format!("scale: more than {} families on the smaller side", opts.family_cap),
        ));
    }
    let exact = S::MODE == Mode::Rational;
    let zero_tol = if exact { 0.0 } else { 1e-12 };
    let mut live = Vec::with_capacity(p.len());
    let mut live_count = 0;
    for v in p {
        if v.near_zero(zero_tol) {
            live.push(None);
        } else {
            live.push(Some(live_count));
            live_count += 1;
        }
    }
    let combos = sides[0].orders.len() * sides[1].orders.len();
    if combos * live_count + 1 > opts.row_cap {
        return Ok(MembershipResult::undecided(
            class,
            S::MODE,
            format!("scale: master program exceeds {} rows", opts.row_cap),
        ));
    }

    let dims = [
        sides[0].scenario.input_count(),
        sides[0].scenario.output_count(),
        sides[1].scenario.input_count(),
        sides[1].scenario.output_count(),
    ];
    let mut entry = vec![0; dims.iter().product()];
    let mut x = vec![0; s.parties()];
    let mut a = vec![0; s.parties()];
    for gxa in 0..dims[0] {
        for gaa in 0..dims[1] {
            for gxb in 0..dims[2] {
                for gab in 0..dims[3] {
                    for (side, (gx, ga)) in sides.iter().zip([(gxa, gaa), (gxb, gab)]) {
                        let xs = side.scenario.input_tuple(gx);
                        let os = side.scenario.output_tuple(ga);
                        for (j, &q) in side.parties.iter().enumerate() {
                            x[q] = xs[j];
                            a[q] = os[j];
                        }
                    }
                    entry[((gxa * dims[1] + gaa) * dims[2] + gxb) * dims[3] + gab] = s.index(&x, &a);
                }
            }
        }
    }
    let master = Master {
        box_values: p,
        scenario: s,
        sides,
        entry,
        dims,
        combos,
        live,
        live_count,
    };

    let tol = opts.tolerance;
    let mut rhs: Vec<S> = Vec::with_capacity(master.sum_row() + 1);
    for _ in 0..combos {
        rhs.extend(master.box_values.iter().filter(|v| !v.near_zero(zero_tol)).cloned());
    }
    rhs.push(S::one());
    let solver = SolverOptions {
        rule: PivotRule::Dantzig,
        ..opts.solver
    };
    let mut sx = Simplex::new(rhs, solver);
    let mut columns: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut seen: HashSet<(usize, Vec<usize>)> = HashSet::new();
    const BATCH: usize = 24;

    loop {
        match sx.run() {
            RunOutcome::Optimal => {}
            RunOutcome::IterationCap => {
                return Ok(MembershipResult::undecided(class, S::MODE, "simplex iteration cap"));
            }
            RunOutcome::Unbounded => {
                return Ok(MembershipResult::undecided(class, S::MODE, "phase one reported unbounded"));
            }
        }
        let residual = sx.phase_one_residual();
        log::debug!(
            "grouped master: {} columns, {} pivots, residual {:e}",
            columns.len(),
            sx.iterations,
            residual.to_f64()
        );
        if residual.near_zero(tol) {
            break;
        }
        let y = sx.duals();
        let yf: Vec<f64> = y.iter().map(Scalar::to_f64).collect();
        let mut found: Vec<(f64, usize, Vec<usize>)> = Vec::new();
        master.price(master.dual_cost(&yf), &yf[master.sum_row()], |v, k, fb| {
            if v < -tol && !seen.contains(&(k, fb.clone())) {
                found.push((v, k, fb));
            }
        });
        if found.is_empty() && exact {
            // exact pass over every family before concluding
            master.price(master.dual_cost(&y), &y[master.sum_row()], |v, k, fb| {
                if v < S::zero() && !seen.contains(&(k, fb.clone())) {
                    found.push((v.to_f64(), k, fb));
                }
            });
        }
        if found.is_empty() {
            return non_member(&master, b, class, &y, residual.to_f64());
        }
        found.sort_by(|l, r| l.0.total_cmp(&r.0));
        found.dedup_by(|l, r| l.1 == r.1 && l.2 == r.2);
        for (_, k, fb) in found.into_iter().take(BATCH) {
            let va = master.sides[0].outputs(&master.sides[0].family(k));
            let vb = master.sides[1].outputs(&fb);
            sx.add_column(&master.column(&va, &vb), S::zero());
            seen.insert((k, fb.clone()));
            columns.push((k, fb));
        }
    }

    let weights = sx.structural_values();
    let mut terms = Vec::new();
    for ((k, fb), w) in columns.iter().zip(weights) {
        if w.near_zero(if exact { 0.0 } else { 1e-14 }) {
            continue;
        }
        let fa = master.sides[0].family(*k);
        let groups = [(&master.sides[0], fa.as_slice()), (&master.sides[1], fb.as_slice())];
        let mut groups: Vec<GroupTables> = groups
            .iter()
            .map(|(side, fam)| GroupTables {
                parties: side.parties.clone(),
                orders: side.order_labels(),
                tables: side.tables::<S>(fam),
            })
            .collect();
        groups.sort_by_key(|g| g.parties[0]);
        terms.push(Term {
            weight: w.to_number(),
            strategies: Vec::new(),
            groups,
        });
    }
    let mut dec = Decomposition {
        class,
        scenario: s.clone(),
        partition: Some(partition.clone()),
        terms,
        residual: 0.0,
    };
    if !exact {
        renormalize_float(&mut dec);
    }
    dec.residual = dec.residual_against(b)?;
    super::accept_decomposition(b, dec, tol)
}

fn renormalize_float(dec: &mut Decomposition) {
    let total: f64 = dec.terms.iter().map(|t| t.weight.to_f64()).sum();
    for t in &mut dec.terms {
        t.weight = crate::scalar::Number::Float(t.weight.to_f64() / total);
    }
}

/// Builds the separating hyperplane from the final duals `y`.
///
/// With `y` the phase-one duals, `h(Q) = Σ_{c,e} y[c,e] Q(e) + y_sum` is the
/// column price averaged by the weights, hence nonnegative on every column
/// that avoids the zero entries. Zero entries receive a coefficient `C` large
/// enough to make every other column nonnegative too; `h(P)` does not see it.
fn non_member<S: Scalar>(
    master: &Master<'_, S>,
    b: &CorrelationBox,
    class: ClassTag,
    y: &[S],
    residual: f64,
) -> Result<MembershipResult> {
    let note = format!("no improving column; phase-one residual {residual:e}");
    if S::MODE == Mode::Float {
        return Ok(MembershipResult {
            class,
            verdict: Verdict::NonMember,
            mode: S::MODE,
            certificate: None,
            margin: residual,
            note: Some(note),
        });
    }
    let y_sum = y[master.sum_row()].clone();
    let open = |combo: usize, e: usize| Some(master.row(combo, e).map_or_else(S::zero, |r| y[r].clone()));
    let mut lowest: Option<S> = None;
    master.price(open, &y_sum, |v, _, _| {
        if lowest.as_ref().is_none_or(|l| v < *l) {
            lowest = Some(v);
        }
    });
    let penalty = match lowest {
        Some(l) if l < S::zero() => -l,
        _ => S::zero(),
    };
    let full = |combo: usize, e: usize| Some(master.row(combo, e).map_or_else(|| penalty.clone(), |r| y[r].clone()));
    let mut check: Option<S> = None;
    master.price(full, &y_sum, |v, _, _| {
        if check.as_ref().is_none_or(|l| v < *l) {
            check = Some(v);
        }
    });
    if check.is_some_and(|c| c < S::zero()) {
        return Err(crate::error::Error::Certificate("grouped hyperplane is negative on a column".into()));
    }
    let len = master.scenario.table_len();
    let mut r = vec![S::zero(); len];
    for c in 0..master.combos {
        for (e, slot) in r.iter_mut().enumerate() {
            match master.row(c, e) {
                Some(row) => slot.add_ref(&y[row]),
                None => slot.add_ref(&penalty),
            }
        }
    }
    let h = super::hyperplane_from_multipliers(b.scenario(), master.box_values, r, y_sum);
    if !(h.value_on_box.to_f64() < 0.0) {
        return Err(crate::error::Error::Certificate("grouped hyperplane does not separate the box".into()));
    }
    Ok(MembershipResult {
        class,
        verdict: Verdict::NonMember,
        mode: S::MODE,
        margin: -h.value_on_box.to_f64(),
        certificate: Some(Certificate::Hyperplane(h)),
        note: Some(note),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_sorted_and_complete() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(2), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn family_counts() {
        let s = Scenario::uniform(3, 2, 2).unwrap();
        let one = Families::new(&s, &[0], FamilyModel::Sequential).unwrap();
        assert_eq!(one.count(), Some(4));
        let two = Families::new(&s, &[1, 2], FamilyModel::Sequential).unwrap();
        // 4 first-step nodes and 8 second-step nodes, binary each
        assert_eq!(two.count(), Some(1 << 12));
        let free = Families::new(&s, &[1, 2], FamilyModel::Unconstrained).unwrap();
        assert_eq!(free.count(), Some(256));
    }

    #[test]
    fn sequential_orders_share_first_step() {
        let s = Scenario::uniform(3, 2, 2).unwrap();
        let two = Families::new(&s, &[1, 2], FamilyModel::Sequential).unwrap();
        for k in [0, 77, 1000, 4095] {
            let fam = two.family(k);
            let t = two.outputs(&fam);
            // in order (0,1) the first party's output ignores the second input
            for gx in 0..4 {
                let (x0, x1) = (gx / 2, gx % 2);
                let other = x0 * 2 + (1 - x1);
                assert_eq!(t[0][gx] / 2, t[0][other] / 2);
                let other = (1 - x0) * 2 + x1;
                assert_eq!(t[1][gx] % 2, t[1][other] % 2);
            }
        }
    }

    #[test]
    fn dynamic_program_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let s = Scenario::uniform(3, 2, 2).unwrap();
        let two = Families::new(&s, &[1, 2], FamilyModel::Sequential).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let cost: Vec<Vec<Vec<f64>>> = (0..2)
                .map(|_| (0..4).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect())
                .collect();
            let opt: Vec<Vec<Vec<Option<f64>>>> =
                cost.iter().map(|o| o.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect()).collect();
            let (v, fam) = two.minimize(&opt).unwrap();
            let eval = |f: &[usize]| -> f64 {
                let t = two.outputs(f);
                (0..2).map(|o| (0..4).map(|gx| cost[o][gx][t[o][gx]]).sum::<f64>()).sum()
            };
            assert!((eval(&fam) - v).abs() < 1e-12);
            let brute = (0..two.count().unwrap()).map(|k| eval(&two.family(k))).fold(f64::INFINITY, f64::min);
            assert!((brute - v).abs() < 1e-12);
        }
    }
}
