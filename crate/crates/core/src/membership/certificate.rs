use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    is_no_signalling, max_marginal_discrepancy, validate_box_with, CorrelationBox, Partition, Scenario,
};
use crate::scalar::{Mode, Number, Scalar, Table};
use crate::with_table;

pub const CERT_SCHEMA: &str = "boxlab-cert-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassTag {
    Local,
    Bl,
    Nsbl,
    Tobl,
    #[serde(rename = "tobl-general")]
    GroupedTobl,
    #[serde(rename = "bl-general")]
    GroupedBl,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassTag::Local => "local",
            ClassTag::Bl => "bl",
            ClassTag::Nsbl => "nsbl",
            ClassTag::Tobl => "tobl",
            ClassTag::GroupedTobl => "tobl-general",
            ClassTag::GroupedBl => "bl-general",
        })
    }
}

impl FromStr for ClassTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "local" => ClassTag::Local,
            "bl" => ClassTag::Bl,
            "nsbl" => ClassTag::Nsbl,
            "tobl" => ClassTag::Tobl,
            "tobl-general" => ClassTag::GroupedTobl,
            "bl-general" => ClassTag::GroupedBl,
            other => return Err(Error::Parse(format!("unknown class {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Member,
    NonMember,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Member => "member",
            Verdict::NonMember => "non-member",
            Verdict::Undecided => "undecided",
        })
    }
}

/// Deterministic response of one party: `outputs[x]` is the output on input `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub party: usize,
    pub outputs: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn output(&self, input: usize) -> usize {
        self.outputs[input]
    }

    /// All `outputs^inputs` strategies of a party, in mixed-radix order.
    pub fn all(party: usize, inputs: usize, outputs: usize) -> impl Iterator<Item = DeterministicStrategy> {
        let count = outputs.pow(inputs as u32);
        (0..count).map(move |mut k| {
            let mut map = vec![0; inputs];
            for slot in map.iter_mut().rev() {
                *slot = k % outputs;
                k /= outputs;
            }
            DeterministicStrategy { party, outputs: map }
        })
    }
}

/// Conditional tables of one group of parties inside a term.
///
/// `tables[k]` is indexed like a box over `parties` (in increasing order).
/// `orders[k]` is the time order the table respects, or empty when none.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTables {
    pub parties: Vec<usize>,
    pub orders: Vec<Vec<usize>>,
    pub tables: Vec<Table>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: Number,
    pub strategies: Vec<DeterministicStrategy>,
    pub groups: Vec<GroupTables>,
}

/// `P = Σ_λ w_λ · Π components`, required for every choice of one table per group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub class: ClassTag,
    pub scenario: Scenario,
    pub partition: Option<Partition>,
    pub terms: Vec<Term>,
    /// Largest reconstruction error against the certified box.
    pub residual: f64,
}

/// `h(Q) = coefficients·Q + offset`: nonnegative on the class, negative on the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub scenario: Scenario,
    pub coefficients: Table,
    pub offset: Number,
    pub value_on_box: Number,
}

impl Hyperplane {
    pub fn evaluate(&self, b: &CorrelationBox) -> Result<Number> {
        fn run<S: Scalar>(h: &Hyperplane, q: &[S]) -> Result<Number> {
            let c = S::slice_of(&h.coefficients)
                .ok_or_else(|| Error::ModeMismatch("hyperplane and box modes differ".into()))?;
            let mut v = S::from_number(&h.offset)?;
            for (ci, qi) in c.iter().zip(q) {
                v.add_ref(&ci.mul_ref(qi));
            }
            Ok(v.to_number())
        }
        if b.scenario() != &self.scenario {
            return Err(Error::Dimension("hyperplane and box scenarios differ".into()));
        }
        with_table!(b.table(), q => run(self, q))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Decomposition(Decomposition),
    /// Independent-weights TOBL: one decomposition per time order.
    PerDirection { decompositions: Vec<Decomposition> },
    Hyperplane(Hyperplane),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub class: ClassTag,
    pub verdict: Verdict,
    pub mode: Mode,
    pub certificate: Option<Certificate>,
    /// Member: reconstruction residual. Exact non-member: `-h(P)` for the
    /// normalized hyperplane. Float non-member: phase-one residual.
    pub margin: f64,
    pub note: Option<String>,
}

impl MembershipResult {
    pub fn is_member(&self) -> bool {
        self.verdict == Verdict::Member
    }

    pub fn decomposition(&self) -> Option<&Decomposition> {
        match &self.certificate {
            Some(Certificate::Decomposition(d)) => Some(d),
            _ => None,
        }
    }

    pub fn hyperplane(&self) -> Option<&Hyperplane> {
        match &self.certificate {
            Some(Certificate::Hyperplane(h)) => Some(h),
            _ => None,
        }
    }

    pub(crate) fn undecided(class: ClassTag, mode: Mode, note: impl Into<String>) -> Self {
        MembershipResult {
            class,
            verdict: Verdict::Undecided,
            mode,
            certificate: None,
            margin: f64::NAN,
            note: Some(note.into()),
        }
    }

    /// Certificate document with a schema header.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serializes");
        v["schema"] = CERT_SCHEMA.into();
        v
    }
}

impl Decomposition {
    pub fn mode(&self) -> Mode {
        self.terms.first().map_or(Mode::Rational, |t| t.weight.mode())
    }

    /// Number of table combinations (product over groups of the tables per group).
    pub fn combinations(&self) -> usize {
        self.terms
            .first()
            .map_or(1, |t| t.groups.iter().map(|g| g.tables.len()).product())
    }

    /// One box per choice of table in each group.
    pub fn reconstruct(&self) -> Result<Vec<CorrelationBox>> {
        match self.mode() {
            Mode::Rational => self.reconstruct_as::<num_rational::BigRational>(),
            Mode::Float => self.reconstruct_as::<f64>(),
        }
    }

    fn reconstruct_as<S: Scalar>(&self) -> Result<Vec<CorrelationBox>> {
        let s = &self.scenario;
        let shape: Vec<usize> = self
            .terms
            .first()
            .map(|t| t.groups.iter().map(|g| g.tables.len()).collect())
            .unwrap_or_default();
        for t in &self.terms {
            if t.groups.len() != shape.len() || t.groups.iter().zip(&shape).any(|(g, &k)| g.tables.len() != k) {
                return Err(Error::Certificate("terms disagree on table layout".into()));
            }
        }
        let mut views = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let w = S::from_number(&t.weight)?;
            let mut groups = Vec::new();
            for g in &t.groups {
                let gs = s.restrict(&g.parties)?;
                let tabs: Vec<&[S]> = g
                    .tables
                    .iter()
                    .map(|tab| {
                        S::slice_of(tab)
                            .filter(|v| v.len() == gs.table_len())
                            .ok_or_else(|| Error::Certificate("group table has wrong mode or size".into()))
                    })
                    .collect::<Result<_>>()?;
                groups.push((g.parties.clone(), gs, tabs));
            }
            views.push((w, groups));
        }
        let mut out = Vec::new();
        let combos: usize = shape.iter().product();
        let mut choice = vec![0; shape.len()];
        for ci in 0..combos {
            let mut rest = ci;
            for (slot, &k) in choice.iter_mut().zip(&shape).rev() {
                *slot = rest % k;
                rest /= k;
            }
            let table = (0..s.table_len())
                .map(|e| {
                    let (x, a) = (s.input_tuple(e / s.output_count()), s.output_tuple(e % s.output_count()));
                    let mut p = S::zero();
                    'terms: for ((w, groups), term) in views.iter().zip(&self.terms) {
                        for st in &term.strategies {
                            if st.outputs.get(x[st.party]) != Some(&a[st.party]) {
                                continue 'terms;
                            }
                        }
                        let mut v = w.clone();
                        for ((parties, gs, tabs), &c) in groups.iter().zip(&choice) {
                            let xg: Vec<usize> = parties.iter().map(|&q| x[q]).collect();
                            let ag: Vec<usize> = parties.iter().map(|&q| a[q]).collect();
                            v = v.mul_ref(&tabs[c][gs.index(&xg, &ag)]);
                        }
                        p.add_ref(&v);
                    }
                    p
                })
                .collect();
            out.push(CorrelationBox::new(s.clone(), S::into_table(table))?);
        }
        Ok(out)
    }

    /// Largest entrywise gap between any reconstruction and `b`.
    pub fn residual_against(&self, b: &CorrelationBox) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for r in self.reconstruct()? {
            let d = r
                .max_abs_diff(b)
                .ok_or_else(|| Error::Certificate("certificate scenario differs from the box".into()))?;
            if d > 0.0 || r.table() == b.table() {
                worst = worst.max(d);
            } else {
                // exact tables that differ below f64 resolution
                worst = worst.max(f64::MIN_POSITIVE);
            }
        }
        Ok(worst)
    }

    /// Checks weights, table normalization and the per-order constraints.
    pub fn check_components(&self, tol: f64) -> Result<()> {
        let mut total = 0.0;
        let mut exact_total = num_rational::BigRational::zero();
        for (i, t) in self.terms.iter().enumerate() {
            match &t.weight {
                Number::Rational(r) => {
                    if *r < num_rational::BigRational::zero() {
                        return Err(Error::Certificate(format!("term {i} has negative weight")));
                    }
                    exact_total += r;
                }
                Number::Float(v) => {
                    if *v < -tol {
                        return Err(Error::Certificate(format!("term {i} has negative weight")));
                    }
                }
            }
            total += t.weight.to_f64();
            for st in &t.strategies {
                let s = &self.scenario;
                if st.party >= s.parties()
                    || st.outputs.len() != s.inputs()[st.party]
                    || st.outputs.iter().any(|&o| o >= s.outputs()[st.party])
                {
                    return Err(Error::Certificate(format!("term {i} has an out-of-range strategy")));
                }
            }
            for g in &t.groups {
                let gs = self.scenario.restrict(&g.parties)?;
                if g.orders.len() != g.tables.len() {
                    return Err(Error::Certificate("one order label per table required".into()));
                }
                for (order, tab) in g.orders.iter().zip(&g.tables) {
                    let gb = CorrelationBox::new(gs.clone(), tab.clone())?;
                    if !validate_box_with(&gb, tol).valid {
                        return Err(Error::Certificate(format!("term {i} has an unnormalized table")));
                    }
                    let needs_ns = matches!(self.class, ClassTag::Nsbl);
                    if needs_ns && !is_no_signalling(&gb, tol).passed {
                        return Err(Error::Certificate(format!("term {i} has a signalling table")));
                    }
                    if order_violation(&gb, &g.parties, order)? > tol {
                        return Err(Error::Certificate(format!(
                            "term {i} table violates its time order {order:?}"
                        )));
                    }
                }
            }
        }
        let sum_ok = match self.mode() {
            Mode::Rational => self.terms.is_empty() || exact_total == num_traits::One::one(),
            Mode::Float => (total - 1.0).abs() <= tol.max(1e-9),
        };
        if !sum_ok {
            return Err(Error::Certificate(format!("weights sum to {total}")));
        }
        Ok(())
    }
}

/// Largest dependence of a prefix marginal on later inputs, for a table over
/// `parties` that should respect `order` (global party indices).
pub(crate) fn order_violation(gb: &CorrelationBox, parties: &[usize], order: &[usize]) -> Result<f64> {
    if order.is_empty() {
        return Ok(0.0);
    }
    let local: Vec<usize> = order
        .iter()
        .map(|q| {
            parties
                .iter()
                .position(|p| p == q)
                .ok_or_else(|| Error::Certificate(format!("order names party {q} outside the group")))
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..local.len() {
        let keep = &local[..k];
        let d = with_table!(gb.table(), t => max_marginal_discrepancy(gb.scenario(), t, keep).to_f64());
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Signalling direction of a two-party table, named by its global parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    None,
    /// First party of the group signals to the second.
    Forward,
    Backward,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermAudit {
    pub term: usize,
    pub weight: Number,
    pub parties: Vec<usize>,
    pub direction: Direction,
    pub forward_discrepancy: f64,
    pub backward_discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignallingAudit {
    pub terms: Vec<TermAudit>,
    pub forward_terms: usize,
    pub backward_terms: usize,
    pub both_terms: usize,
    /// Signalling occurs in both directions across the decomposition, either
    /// within one term or across terms of opposite directions.
    pub two_way_present: bool,
    /// The reconstructed box has no time-ordered decomposition at all.
    pub requires_two_way_terms: Option<bool>,
}
