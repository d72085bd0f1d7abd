//! Scenarios, boxes, partitions and relabelings.
//!
//! Every table uses one layout: row-major over `(x_1, ..., x_N, a_1, ..., a_N)`
//! with `x_1` most significant. The joint input index selects a block of
//! `Π outputs` entries holding `P(a | x)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index;
use crate::scalar::{Mode, Number, Scalar, Table};
use crate::with_table;

/// Tolerance for normalization and nonnegativity of float boxes.
pub const DEFAULT_EPS: f64 = 1e-12;
/// Tolerance for membership verdicts in float mode.
pub const VERDICT_EPS: f64 = 1e-9;
/// Default hard cap on the number of table entries.
pub const DEFAULT_MAX_ENTRIES: usize = 10_000_000;

pub const BOX_SCHEMA: &str = "boxlab-box-v1";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

#[derive(Deserialize)]
struct RawScenario {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(raw: RawScenario) -> Result<Self> {
        Scenario::new(raw.inputs, raw.outputs)
    }
}

impl Scenario {
    pub fn new(inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        Self::with_cap(inputs, outputs, DEFAULT_MAX_ENTRIES)
    }

    pub fn with_cap(inputs: Vec<usize>, outputs: Vec<usize>, max_entries: usize) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Scenario("at least one party is required".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::Scenario(format!(
                "{} input alphabets but {} output alphabets",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.iter().chain(&outputs).any(|&s| s == 0) {
            return Err(Error::Scenario("alphabet sizes must be positive".into()));
        }
        let size = index::checked_product(&inputs)
            .and_then(|n| index::checked_product(&outputs).and_then(|m| n.checked_mul(m)));
        match size {
            Some(n) if n <= max_entries => Ok(Scenario { inputs, outputs }),
            _ => Err(Error::Cap(format!(
                "table for inputs {inputs:?} / outputs {outputs:?} exceeds {max_entries} entries"
            ))),
        }
    }

    /// `parties` parties, each with `inputs` settings and `outputs` outcomes.
    pub fn uniform(parties: usize, inputs: usize, outputs: usize) -> Result<Self> {
        Self::new(vec![inputs; parties], vec![outputs; parties])
    }

    pub fn parties(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Number of joint inputs.
    pub fn input_count(&self) -> usize {
        index::product(&self.inputs)
    }

    /// Number of joint outputs.
    pub fn output_count(&self) -> usize {
        index::product(&self.outputs)
    }

    pub fn table_len(&self) -> usize {
        self.input_count() * self.output_count()
    }

    pub fn index(&self, x: &[usize], a: &[usize]) -> usize {
        index::encode(&self.inputs, x) * self.output_count() + index::encode(&self.outputs, a)
    }

    pub fn input_tuple(&self, xi: usize) -> Vec<usize> {
        index::decode(&self.inputs, xi)
    }

    pub fn output_tuple(&self, ai: usize) -> Vec<usize> {
        index::decode(&self.outputs, ai)
    }

    /// Scenario restricted to `parties`, in the given order.
    pub fn restrict(&self, parties: &[usize]) -> Result<Scenario> {
        Scenario::new(
            parties.iter().map(|&p| self.inputs[p]).collect(),
            parties.iter().map(|&p| self.outputs[p]).collect(),
        )
    }

    /// Number of deterministic local strategies, `Π outputs_i^{inputs_i}`.
    pub fn local_vertex_count(&self) -> Option<usize> {
        self.inputs.iter().zip(&self.outputs).try_fold(1usize, |acc, (&m, &d)| {
            acc.checked_mul(d.checked_pow(u32::try_from(m).ok()?)?)
        })
    }

    pub fn is_binary(&self) -> bool {
        self.outputs.iter().all(|&d| d == 2)
    }
}

/// Conditional probability table `P(a_1..a_N | x_1..x_N)` in one numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationBox {
    scenario: Scenario,
    table: Table,
}

impl CorrelationBox {
    /// Checks dimensions only; use [`validate_box`] for normalization.
    pub fn new(scenario: Scenario, table: Table) -> Result<Self> {
        if table.len() != scenario.table_len() {
            return Err(Error::Dimension(format!(
                "table has {} entries, scenario needs {}",
                table.len(),
                scenario.table_len()
            )));
        }
        Ok(CorrelationBox { scenario, table })
    }

    pub fn from_fn<S: Scalar>(scenario: Scenario, mut f: impl FnMut(&[usize], &[usize]) -> S) -> Self {
        let mut values = Vec::with_capacity(scenario.table_len());
        for xi in 0..scenario.input_count() {
            let x = scenario.input_tuple(xi);
            for ai in 0..scenario.output_count() {
                values.push(f(&x, &scenario.output_tuple(ai)));
            }
        }
        CorrelationBox {
            scenario,
            table: S::into_table(values),
        }
    }

    pub fn uniform(scenario: Scenario, mode: Mode) -> Self {
        let d = scenario.output_count() as i64;
        match mode {
            Mode::Rational => {
                let p = crate::scalar::ratio(1, d);
                Self::from_fn(scenario, |_, _| p.clone())
            }
            Mode::Float => Self::from_fn(scenario, |_, _| 1.0 / d as f64),
        }
    }

    /// Product of deterministic strategies; `strategies[i][x_i]` is party i's output.
    pub fn deterministic(scenario: Scenario, strategies: &[Vec<usize>]) -> Result<Self> {
        if strategies.len() != scenario.parties() {
            return Err(Error::Dimension("one strategy per party required".into()));
        }
        for (p, s) in strategies.iter().enumerate() {
            if s.len() != scenario.inputs()[p] || s.iter().any(|&o| o >= scenario.outputs()[p]) {
                return Err(Error::Dimension(format!("strategy for party {p} out of range")));
            }
        }
        Ok(Self::from_fn(scenario, |x, a| {
            if x.iter().zip(a).enumerate().all(|(p, (&xi, &ai))| strategies[p][xi] == ai) {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        }))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn into_table(self) -> Table {
        self.table
    }

    pub fn mode(&self) -> Mode {
        self.table.mode()
    }

    pub fn prob_f64(&self, x: &[usize], a: &[usize]) -> f64 {
        self.table.get_f64(self.scenario.index(x, a))
    }

    pub fn prob(&self, x: &[usize], a: &[usize]) -> Number {
        self.table.get(self.scenario.index(x, a))
    }

    pub fn to_float(&self) -> CorrelationBox {
        CorrelationBox {
            scenario: self.scenario.clone(),
            table: self.table.to_float(),
        }
    }

    pub fn values<S: Scalar>(&self) -> Result<&[S]> {
        S::slice_of(&self.table).ok_or_else(|| {
            Error::ModeMismatch(format!("box is {} mode, expected {}", self.mode(), S::MODE))
        })
    }

    /// Largest absolute entrywise difference; `None` if scenarios differ.
    pub fn max_abs_diff(&self, other: &CorrelationBox) -> Option<f64> {
        if self.scenario != other.scenario {
            return None;
        }
        Some(
            (0..self.table.len())
                .map(|i| (self.table.get_f64(i) - other.table.get_f64(i)).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(BoxJson::from(self)).expect("box serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: BoxJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct BoxJson {
    #[serde(default = "box_schema")]
    schema: String,
    scenario: Scenario,
    mode: Mode,
    table: Vec<Number>,
}

fn box_schema() -> String {
    BOX_SCHEMA.to_string()
}

impl From<&CorrelationBox> for BoxJson {
    fn from(b: &CorrelationBox) -> Self {
        BoxJson {
            schema: BOX_SCHEMA.to_string(),
            scenario: b.scenario.clone(),
            mode: b.mode(),
            table: b.table.to_numbers(),
        }
    }
}

impl TryFrom<BoxJson> for CorrelationBox {
    type Error = Error;

    fn try_from(raw: BoxJson) -> Result<Self> {
        if raw.schema != BOX_SCHEMA {
            return Err(Error::Parse(format!("unsupported box schema {:?}", raw.schema)));
        }
        CorrelationBox::new(raw.scenario, Table::from_numbers(raw.mode, &raw.table)?)
    }
}

impl Serialize for CorrelationBox {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BoxJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CorrelationBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        BoxJson::deserialize(deserializer)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `|Σ_a P(a|x) - 1|` per joint input.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Smallest entry of the table.
    pub most_negative: f64,
    pub tolerance: f64,
    pub valid: bool,
}

/// Normalization and nonnegativity report. Rational boxes must be exact.
pub fn validate_box(b: &CorrelationBox) -> ValidationReport {
    validate_box_with(b, DEFAULT_EPS)
}

pub fn validate_box_with(b: &CorrelationBox, tol: f64) -> ValidationReport {
    fn run<S: Scalar>(scenario: &Scenario, t: &[S], tol: f64) -> ValidationReport {
        let d = scenario.output_count();
        let mut residuals = Vec::with_capacity(scenario.input_count());
        let mut exact_ok = true;
        for row in t.chunks(d) {
            let mut s = S::zero();
            for v in row {
                s.add_ref(v);
            }
            let r = s - S::one();
            exact_ok &= r.near_zero(tol);
            residuals.push(r.to_f64().abs());
        }
        let min = t.iter().fold(None::<&S>, |m, v| match m {
            Some(m) if m <= v => Some(m),
            _ => Some(v),
        });
        let nonneg = min.is_none_or(|m| !m.is_negative_beyond(tol));
        let max_residual = residuals.iter().copied().fold(0.0, f64::max);
        ValidationReport {
            max_residual,
            most_negative: min.map_or(0.0, |m| m.to_f64()),
            residuals,
            tolerance: if S::MODE == Mode::Rational { 0.0 } else { tol },
            valid: exact_ok && nonneg,
        }
    }
    with_table!(&b.table, t => run(&b.scenario, t, tol))
}

pub(crate) fn ensure_valid(b: &CorrelationBox) -> Result<()> {
    let report = validate_box(b);
    if report.valid {
        Ok(())
    } else {
        Err(Error::InvalidBox(format!(
            "normalization residual {:e}, most negative entry {:e}",
            report.max_residual, report.most_negative
        )))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoSignallingReport {
    /// Largest change of any subset marginal under a change of the complementary inputs.
    pub max_discrepancy: f64,
    /// Subset attaining the maximum (empty when the discrepancy is zero).
    pub worst_parties: Vec<usize>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks every marginal on every nonempty proper subset of parties.
pub fn is_no_signalling(b: &CorrelationBox, tol: f64) -> NoSignallingReport {
    fn run<S: Scalar>(scenario: &Scenario, t: &[S], tol: f64) -> NoSignallingReport {
        let n = scenario.parties();
        let mut worst = (S::zero(), Vec::new());
        for mask in 1u64..(1u64 << n).saturating_sub(1) {
            let keep: Vec<usize> = (0..n).filter(|p| mask >> p & 1 == 1).collect();
            let d = max_marginal_discrepancy(scenario, t, &keep);
            if d > worst.0 {
                worst = (d, keep);
            }
        }
        let passed = worst.0.near_zero(tol);
        NoSignallingReport {
            max_discrepancy: worst.0.to_f64(),
            worst_parties: worst.1,
            tolerance: if S::MODE == Mode::Rational { 0.0 } else { tol },
            passed,
        }
    }
    with_table!(&b.table, t => run(&b.scenario, t, tol))
}

pub(crate) fn ensure_no_signalling(b: &CorrelationBox, tol: f64) -> Result<()> {
    let report = is_no_signalling(b, tol);
    if report.passed {
        Ok(())
    } else {
        Err(Error::Signalling {
            discrepancy: report.max_discrepancy,
            parties: report.worst_parties,
            tolerance: tol,
        })
    }
}

/// Marginal on `keep` at every joint input, indexed `[x_full][a_keep]`.
fn marginal_at_all_inputs<S: Scalar>(scenario: &Scenario, t: &[S], keep: &[usize]) -> Vec<S> {
    let keep_outputs: Vec<usize> = keep.iter().map(|&p| scenario.outputs()[p]).collect();
    let dk = index::product(&keep_outputs);
    let d = scenario.output_count();
    let mut out = vec![S::zero(); scenario.input_count() * dk];
    let mut a = vec![0; scenario.parties()];
    let mut ak = vec![0; keep.len()];
    for ai in 0..d {
        index::decode_into(scenario.outputs(), ai, &mut a);
        for (slot, &p) in ak.iter_mut().zip(keep) {
            *slot = a[p];
        }
        let ki = index::encode(&keep_outputs, &ak);
        for xi in 0..scenario.input_count() {
            out[xi * dk + ki].add_ref(&t[xi * d + ai]);
        }
    }
    out
}

pub(crate) fn max_marginal_discrepancy<S: Scalar>(scenario: &Scenario, t: &[S], keep: &[usize]) -> S {
    let dk: usize = keep.iter().map(|&p| scenario.outputs()[p]).product();
    let m = marginal_at_all_inputs(scenario, t, keep);
    let mut worst = S::zero();
    let mut x = vec![0; scenario.parties()];
    for xi in 0..scenario.input_count() {
        index::decode_into(scenario.inputs(), xi, &mut x);
        // reference: same kept inputs, all other inputs zero
        for (p, slot) in x.iter_mut().enumerate() {
            if !keep.contains(&p) {
                *slot = 0;
            }
        }
        let ri = index::encode(scenario.inputs(), &x);
        if ri == xi {
            continue;
        }
        for k in 0..dk {
            let diff = (m[xi * dk + k].clone() - m[ri * dk + k].clone()).abs_val();
            if diff > worst {
                worst = diff;
            }
        }
    }
    worst
}

/// Marginal box on `keep` (party indices, any order). Requires no-signalling.
pub fn marginal(b: &CorrelationBox, keep: &[usize]) -> Result<CorrelationBox> {
    marginal_with_tolerance(b, keep, DEFAULT_EPS)
}

pub fn marginal_with_tolerance(b: &CorrelationBox, keep: &[usize], tol: f64) -> Result<CorrelationBox> {
    let n = b.scenario.parties();
    let distinct: BTreeSet<usize> = keep.iter().copied().collect();
    if keep.is_empty() || distinct.len() != keep.len() || keep.iter().any(|&p| p >= n) {
        return Err(Error::Partition(format!("invalid party set {keep:?} for {n} parties")));
    }
    ensure_no_signalling(b, tol)?;
    let scenario = b.scenario.restrict(keep)?;
    fn run<S: Scalar>(src: &Scenario, t: &[S], keep: &[usize], dst: &Scenario) -> Table {
        let dk = dst.output_count();
        let m = marginal_at_all_inputs(src, t, keep);
        let mut out = Vec::with_capacity(dst.table_len());
        let mut x = vec![0; src.parties()];
        for xk in 0..dst.input_count() {
            let sub = dst.input_tuple(xk);
            x.iter_mut().for_each(|v| *v = 0);
            for (&p, &v) in keep.iter().zip(&sub) {
                x[p] = v;
            }
            let xi = index::encode(src.inputs(), &x);
            out.extend_from_slice(&m[xi * dk..(xi + 1) * dk]);
        }
        S::into_table(out)
    }
    let table = with_table!(&b.table, t => run(&b.scenario, t, keep, &scenario));
    CorrelationBox::new(scenario, table)
}

/// Convex combination. Weights must share the boxes' numeric mode.
pub fn mix(boxes: &[CorrelationBox], weights: &[Number]) -> Result<CorrelationBox> {
    let first = boxes
        .first()
        .ok_or_else(|| Error::Weights("nothing to mix".into()))?;
    if boxes.len() != weights.len() {
        return Err(Error::Weights(format!(
            "{} boxes but {} weights",
            boxes.len(),
            weights.len()
        )));
    }
    for b in boxes {
        if b.scenario != first.scenario {
            return Err(Error::Dimension("mixed boxes must share a scenario".into()));
        }
        if b.mode() != first.mode() {
            return Err(Error::ModeMismatch("mixed boxes must share a numeric mode".into()));
        }
    }
    if let Some(w) = weights.iter().find(|w| w.mode() != first.mode()) {
        return Err(Error::ModeMismatch(format!("weight {w} does not match {} boxes", first.mode())));
    }
    fn run<S: Scalar>(boxes: &[CorrelationBox], weights: &[S]) -> Result<Table> {
        let mut total = S::zero();
        for w in weights {
            if w.is_negative_beyond(DEFAULT_EPS) {
                return Err(Error::Weights(format!("negative weight {w:?}")));
            }
            total.add_ref(w);
        }
        if !(total - S::one()).near_zero(DEFAULT_EPS) {
            return Err(Error::Weights("weights must sum to 1".into()));
        }
        let len = boxes[0].table.len();
        let mut out = vec![S::zero(); len];
        for (b, w) in boxes.iter().zip(weights) {
            let t = b.values::<S>()?;
            for (o, v) in out.iter_mut().zip(t) {
                o.add_ref(&w.mul_ref(v));
            }
        }
        Ok(S::into_table(out))
    }
    let table = match first.mode() {
        Mode::Rational => {
            let w: Vec<BigRational> = weights.iter().filter_map(|w| w.as_rational().cloned()).collect();
            run(boxes, &w)?
        }
        Mode::Float => {
            let w: Vec<f64> = weights.iter().map(Number::to_f64).collect();
            run(boxes, &w)?
        }
    };
    CorrelationBox::new(first.scenario.clone(), table)
}

/// Independent boxes side by side; parties of `a` come first.
pub fn tensor(a: &CorrelationBox, b: &CorrelationBox) -> Result<CorrelationBox> {
    if a.mode() != b.mode() {
        return Err(Error::ModeMismatch("tensor factors must share a numeric mode".into()));
    }
    let sa = &a.scenario;
    let sb = &b.scenario;
    let scenario = Scenario::new(
        [sa.inputs(), sb.inputs()].concat(),
        [sa.outputs(), sb.outputs()].concat(),
    )?;
    fn run<S: Scalar>(sa: &Scenario, ta: &[S], sb: &Scenario, tb: &[S], dst: &Scenario) -> Table {
        let (da, db) = (sa.output_count(), sb.output_count());
        let mut out = Vec::with_capacity(dst.table_len());
        for xa in 0..sa.input_count() {
            for xb in 0..sb.input_count() {
                for aa in 0..da {
                    let pa = &ta[xa * da + aa];
                    for ab in 0..db {
                        out.push(pa.mul_ref(&tb[xb * db + ab]));
                    }
                }
            }
        }
        S::into_table(out)
    }
    let table = match (&a.table, &b.table) {
        (Table::Rational(ta), Table::Rational(tb)) => run(sa, ta, sb, tb, &scenario),
        (Table::Float(ta), Table::Float(tb)) => run(sa, ta, sb, tb, &scenario),
        _ => unreachable!("modes checked above"),
    };
    CorrelationBox::new(scenario, table)
}

/// Disjoint two-sided split of the parties.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    groups: [Vec<usize>; 2],
}

impl Partition {
    /// Zero-based party indices; each side is stored sorted.
    pub fn new(mut first: Vec<usize>, mut second: Vec<usize>) -> Result<Self> {
        first.sort_unstable();
        second.sort_unstable();
        if first.is_empty() || second.is_empty() {
            return Err(Error::Partition("both sides must be nonempty".into()));
        }
        let all: Vec<usize> = first.iter().chain(&second).copied().collect();
        let distinct: BTreeSet<usize> = all.iter().copied().collect();
        if distinct.len() != all.len() {
            return Err(Error::Partition(format!("sides {first:?} and {second:?} overlap")));
        }
        if distinct.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::Partition(format!(
                "sides {first:?} and {second:?} do not cover parties 0..{}",
                all.len()
            )));
        }
        Ok(Partition { groups: [first, second] })
    }

    /// The tripartite split `A_1 | A_2 A_3`.
    pub fn singleton_first() -> Self {
        Partition::new(vec![0], vec![1, 2]).expect("static partition")
    }

    pub fn first(&self) -> &[usize] {
        &self.groups[0]
    }

    pub fn second(&self) -> &[usize] {
        &self.groups[1]
    }

    pub fn sides(&self) -> [&[usize]; 2] {
        [&self.groups[0], &self.groups[1]]
    }

    pub fn parties(&self) -> usize {
        self.groups[0].len() + self.groups[1].len()
    }

    /// `(singleton party, other side)` when one side has exactly one party.
    pub fn singleton_split(&self) -> Option<(usize, &[usize])> {
        if self.groups[0].len() == 1 {
            Some((self.groups[0][0], &self.groups[1]))
        } else if self.groups[1].len() == 1 {
            Some((self.groups[1][0], &self.groups[0]))
        } else {
            None
        }
    }

    pub fn check_scenario(&self, scenario: &Scenario) -> Result<()> {
        if self.parties() != scenario.parties() {
            return Err(Error::Partition(format!(
                "partition covers {} parties, box has {}",
                self.parties(),
                scenario.parties()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;

    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        match <[Vec<usize>; 2]>::try_from(v) {
            Ok([a, b]) => Partition::new(a, b),
            Err(v) => Err(Error::Partition(format!("expected two sides, got {}", v.len()))),
        }
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.groups.into()
    }
}

/// One-based text form, e.g. `"1|2,3"`.
impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("partition {s:?} lacks '|'")))?;
        let side = |t: &str| -> Result<Vec<usize>> {
            t.split(',')
                .map(|p| {
                    let v: usize = p
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad party {p:?} in {s:?}")))?;
                    v.checked_sub(1)
                        .ok_or_else(|| Error::Parse(format!("parties are numbered from 1 in {s:?}")))
                })
                .collect()
        };
        Partition::new(side(a)?, side(b)?)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |g: &[usize]| g.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", side(&self.groups[0]), side(&self.groups[1]))
    }
}

/// Local relabeling of inputs and outputs, optionally followed by a party permutation.
///
/// Party `p` maps input `x` to `inputs[p][x]` and, under input `x`, output `a`
/// to `outputs[p][x][a]` (indexed by the original input). With `parties`
/// set, original party `p` ends up at position `parties[p]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    pub inputs: Vec<Vec<usize>>,
    pub outputs: Vec<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parties: Option<Vec<usize>>,
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n
        && p.iter().all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
}

fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

impl Relabeling {
    pub fn identity(scenario: &Scenario) -> Self {
        Relabeling {
            inputs: scenario.inputs().iter().map(|&m| (0..m).collect()).collect(),
            outputs: scenario
                .inputs()
                .iter()
                .zip(scenario.outputs())
                .map(|(&m, &d)| vec![(0..d).collect(); m])
                .collect(),
            parties: None,
        }
    }

    /// Swap outputs 0 and 1 of `party` when its input is `input` (binary outputs).
    pub fn flip_output(scenario: &Scenario, party: usize, input: usize) -> Result<Self> {
        let mut r = Self::identity(scenario);
        let slot = r
            .outputs
            .get_mut(party)
            .and_then(|o| o.get_mut(input))
            .ok_or_else(|| Error::Relabeling(format!("no input {input} for party {party}")))?;
        if slot.len() != 2 {
            return Err(Error::Relabeling("output flip needs a binary alphabet".into()));
        }
        *slot = vec![1, 0];
        Ok(r)
    }

    pub fn with_party_permutation(mut self, parties: Vec<usize>) -> Self {
        self.parties = Some(parties);
        self
    }

    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        let n = scenario.parties();
        if self.inputs.len() != n || self.outputs.len() != n {
            return Err(Error::Relabeling(format!("expected maps for {n} parties")));
        }
        for p in 0..n {
            let (m, d) = (scenario.inputs()[p], scenario.outputs()[p]);
            if !is_permutation(&self.inputs[p], m) {
                return Err(Error::Relabeling(format!("input map of party {p} is not a bijection on {m} symbols")));
            }
            if self.outputs[p].len() != m || self.outputs[p].iter().any(|o| !is_permutation(o, d)) {
                return Err(Error::Relabeling(format!("output maps of party {p} are not bijections on {d} symbols")));
            }
        }
        if let Some(pp) = &self.parties {
            if !is_permutation(pp, n) {
                return Err(Error::Relabeling("party map is not a permutation".into()));
            }
        }
        Ok(())
    }

    /// Scenario of the relabeled box.
    pub fn target_scenario(&self, scenario: &Scenario) -> Result<Scenario> {
        match &self.parties {
            None => Ok(scenario.clone()),
            Some(pp) => {
                let inv = invert_permutation(pp);
                scenario.restrict(&inv)
            }
        }
    }

    pub fn inverse(&self) -> Self {
        let n = self.inputs.len();
        let local_inputs: Vec<Vec<usize>> = self.inputs.iter().map(|p| invert_permutation(p)).collect();
        let local_outputs: Vec<Vec<Vec<usize>>> = (0..n)
            .map(|p| {
                local_inputs[p]
                    .iter()
                    .map(|&orig_x| invert_permutation(&self.outputs[p][orig_x]))
                    .collect()
            })
            .collect();
        match &self.parties {
            None => Relabeling {
                inputs: local_inputs,
                outputs: local_outputs,
                parties: None,
            },
            Some(pp) => {
                let inv = invert_permutation(pp);
                Relabeling {
                    inputs: inv.iter().map(|&p| local_inputs[p].clone()).collect(),
                    outputs: inv.iter().map(|&p| local_outputs[p].clone()).collect(),
                    parties: Some(inv),
                }
            }
        }
    }
}

pub fn relabel(b: &CorrelationBox, r: &Relabeling) -> Result<CorrelationBox> {
    let src = &b.scenario;
    r.check(src)?;
    let dst = r.target_scenario(src)?;
    let n = src.parties();
    let position: Vec<usize> = r.parties.clone().unwrap_or_else(|| (0..n).collect());
    fn run<S: Scalar>(src: &Scenario, dst: &Scenario, t: &[S], r: &Relabeling, position: &[usize]) -> Table {
        let mut out = vec![S::zero(); t.len()];
        let n = src.parties();
        let (mut x2, mut a2) = (vec![0; n], vec![0; n]);
        for xi in 0..src.input_count() {
            let x = src.input_tuple(xi);
            for ai in 0..src.output_count() {
                let a = src.output_tuple(ai);
                for p in 0..n {
                    x2[position[p]] = r.inputs[p][x[p]];
                    a2[position[p]] = r.outputs[p][x[p]][a[p]];
                }
                out[dst.index(&x2, &a2)] = t[xi * src.output_count() + ai].clone();
            }
        }
        S::into_table(out)
    }
    let table = with_table!(&b.table, t => run(src, &dst, t, r, &position));
    CorrelationBox::new(dst, table)
}
