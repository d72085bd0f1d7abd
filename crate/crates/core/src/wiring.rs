//! Wirings and classical communication prior to the inputs.
//!
//! A [`SequentialWiring`] merges a group of parties into one effective party:
//! for every effective input a plan tree says which group member to query
//! next and with which input, depending on the outputs seen so far, and the
//! leaves name the effective output. A [`Protocol`] runs broadcast steps
//! (one party measures in advance and announces the outcome, the rest relabel
//! accordingly), mixes the branches and then applies its wirings.
//!
//! Wired entries are obtained by summing the joint probabilities over every
//! internal assignment consistent with the plan. Signalling boxes are refused.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ensure_no_signalling, ensure_valid, mix, relabel, CorrelationBox, Relabeling, Scenario, DEFAULT_EPS};
use crate::scalar::{Mode, Number, Scalar, Table};

pub const PROTOCOL_SCHEMA: &str = "boxlab-protocol-v1";

/// Default bound on the number of wirings an enumeration may describe.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanNode {
    /// Query `party` (a global index) with `input`; `branches[a]` continues after output `a`.
    Measure { party: usize, input: usize, branches: Vec<PlanNode> },
    Output(usize),
}

/// One complete run through a plan: the group inputs and outputs it fixes
/// and the effective output it reports. Indices follow the group order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanPath {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub result: usize,
}

impl PlanNode {
    /// Every root-to-leaf path, checking that each group member is queried
    /// exactly once along it.
    pub fn paths(&self, scenario: &Scenario, group: &[usize], effective_outputs: usize) -> Result<Vec<PlanPath>> {
        let mut out = Vec::new();
        let k = group.len();
        let mut inputs = vec![usize::MAX; k];
        let mut outputs = vec![usize::MAX; k];
        self.walk(scenario, group, effective_outputs, &mut inputs, &mut outputs, &mut out)?;
        Ok(out)
    }

    fn walk(
        &self,
        s: &Scenario,
        group: &[usize],
        eff_out: usize,
        inputs: &mut [usize],
        outputs: &mut [usize],
        out: &mut Vec<PlanPath>,
    ) -> Result<()> {
        match self {
            PlanNode::Output(v) => {
                if *v >= eff_out {
                    return Err(Error::Wiring(format!("effective output {v} out of range {eff_out}")));
                }
                if let Some(j) = inputs.iter().position(|&x| x == usize::MAX) {
                    return Err(Error::Wiring(format!("party {} is never queried on some branch", group[j])));
                }
                out.push(PlanPath {
                    inputs: inputs.to_vec(),
                    outputs: outputs.to_vec(),
                    result: *v,
                });
                Ok(())
            }
            PlanNode::Measure { party, input, branches } => {
                let j = group
                    .iter()
                    .position(|p| p == party)
                    .ok_or_else(|| Error::Wiring(format!("party {party} is not in the group {group:?}")))?;
                if inputs[j] != usize::MAX {
                    return Err(Error::Wiring(format!("party {party} is queried twice on one branch")));
                }
                if *input >= s.inputs()[*party] {
                    return Err(Error::Wiring(format!("input {input} out of range for party {party}")));
                }
                if branches.len() != s.outputs()[*party] {
                    return Err(Error::Wiring(format!(
                        "party {party} has {} outputs but the plan lists {} branches",
                        s.outputs()[*party],
                        branches.len()
                    )));
                }
                inputs[j] = *input;
                for (a, br) in branches.iter().enumerate() {
                    outputs[j] = a;
                    br.walk(s, group, eff_out, inputs, outputs, out)?;
                }
                inputs[j] = usize::MAX;
                outputs[j] = usize::MAX;
                Ok(())
            }
        }
    }
}

/// Adaptive, deterministic processing of a group into one effective party.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SequentialWiring {
    /// Global party indices, kept sorted.
    pub group: Vec<usize>,
    pub effective_outputs: usize,
    /// One plan per effective input.
    pub plans: Vec<PlanNode>,
}

impl SequentialWiring {
    pub fn new(group: Vec<usize>, effective_outputs: usize, plans: Vec<PlanNode>) -> Result<Self> {
        let mut group = group;
        group.sort_unstable();
        let w = SequentialWiring {
            group,
            effective_outputs,
            plans,
        };
        w.check_shape()?;
        Ok(w)
    }

    pub fn effective_inputs(&self) -> usize {
        self.plans.len()
    }

    fn check_shape(&self) -> Result<()> {
        let distinct: BTreeSet<usize> = self.group.iter().copied().collect();
        if self.group.is_empty() || distinct.len() != self.group.len() {
            return Err(Error::Wiring(format!("invalid group {:?}", self.group)));
        }
        if self.plans.is_empty() || self.effective_outputs == 0 {
            return Err(Error::Wiring("effective alphabets must be nonempty".into()));
        }
        Ok(())
    }

    /// Validates the plans against `s` and returns their paths.
    pub fn check(&self, s: &Scenario) -> Result<Vec<Vec<PlanPath>>> {
        self.check_shape()?;
        if let Some(&p) = self.group.iter().find(|&&p| p >= s.parties()) {
            return Err(Error::Wiring(format!("party {p} does not exist")));
        }
        self.plans
            .iter()
            .map(|p| p.paths(s, &self.group, self.effective_outputs))
            .collect()
    }

    /// Scenario after the group is replaced by the effective party, which
    /// takes the position of the group's lowest index.
    pub fn target_scenario(&self, s: &Scenario) -> Result<Scenario> {
        let (inputs, outputs) = self.target_parties(s).iter().fold((Vec::new(), Vec::new()), |(mut i, mut o), slot| {
            match slot {
                Slot::Kept(p) => {
                    i.push(s.inputs()[*p]);
                    o.push(s.outputs()[*p]);
                }
                Slot::Effective => {
                    i.push(self.effective_inputs());
                    o.push(self.effective_outputs);
                }
            }
            (i, o)
        });
        Scenario::new(inputs, outputs)
    }

    fn target_parties(&self, s: &Scenario) -> Vec<Slot> {
        let first = self.group[0];
        (0..s.parties())
            .filter_map(|p| {
                if p == first {
                    Some(Slot::Effective)
                } else if self.group.contains(&p) {
                    None
                } else {
                    Some(Slot::Kept(p))
                }
            })
            .collect()
    }
}

enum Slot {
    Kept(usize),
    Effective,
}

/// Replaces the wiring's group by its effective party.
pub fn apply_sequential_wiring(b: &CorrelationBox, w: &SequentialWiring) -> Result<CorrelationBox> {
    apply_sequential_wiring_with(b, w, DEFAULT_EPS)
}

pub fn apply_sequential_wiring_with(b: &CorrelationBox, w: &SequentialWiring, tol: f64) -> Result<CorrelationBox> {
    ensure_valid(b)?;
    ensure_no_signalling(b, tol)?;
    let src = b.scenario();
    let paths = w.check(src)?;
    let dst = w.target_scenario(src)?;
    let slots = w.target_parties(src);
    fn run<S: Scalar>(
        src: &Scenario,
        dst: &Scenario,
        t: &[S],
        group: &[usize],
        slots: &[Slot],
        paths: &[Vec<PlanPath>],
    ) -> Table {
        let n = src.parties();
        let mut out = Vec::with_capacity(dst.table_len());
        let (mut x, mut a) = (vec![0; n], vec![0; n]);
        for xi in 0..dst.input_count() {
            let xt = dst.input_tuple(xi);
            let mut eff_in = 0;
            for (slot, &v) in slots.iter().zip(&xt) {
                match slot {
                    Slot::Kept(p) => x[*p] = v,
                    Slot::Effective => eff_in = v,
                }
            }
            for ai in 0..dst.output_count() {
                let at = dst.output_tuple(ai);
                let mut eff_out = 0;
                for (slot, &v) in slots.iter().zip(&at) {
                    match slot {
                        Slot::Kept(p) => a[*p] = v,
                        Slot::Effective => eff_out = v,
                    }
                }
                let mut total = S::zero();
                for path in paths[eff_in].iter().filter(|p| p.result == eff_out) {
                    for (j, &q) in group.iter().enumerate() {
                        x[q] = path.inputs[j];
                        a[q] = path.outputs[j];
                    }
                    total.add_ref(&t[src.index(&x, &a)]);
                }
                out.push(total);
            }
        }
        S::into_table(out)
    }
    let table = match b.table() {
        Table::Rational(t) => run(src, &dst, t, &w.group, &slots, &paths),
        Table::Float(t) => run(src, &dst, t, &w.group, &slots, &paths),
    };
    CorrelationBox::new(dst, table)
}

/// Conditions on `party` having produced `outcome` under `input`.
/// Returns the box of the remaining parties and the branch probability.
pub fn postselect(b: &CorrelationBox, party: usize, input: usize, outcome: usize) -> Result<(CorrelationBox, Number)> {
    postselect_with(b, party, input, outcome, DEFAULT_EPS)
}

pub fn postselect_with(
    b: &CorrelationBox,
    party: usize,
    input: usize,
    outcome: usize,
    tol: f64,
) -> Result<(CorrelationBox, Number)> {
    ensure_valid(b)?;
    let src = b.scenario();
    let n = src.parties();
    if n < 2 {
        return Err(Error::Protocol("postselection needs at least two parties".into()));
    }
    if party >= n || input >= src.inputs()[party] || outcome >= src.outputs()[party] {
        return Err(Error::Protocol(format!(
            "party {party} with input {input} and outcome {outcome} is out of range"
        )));
    }
    ensure_no_signalling(b, tol)?;
    let rest: Vec<usize> = (0..n).filter(|&p| p != party).collect();
    let dst = src.restrict(&rest)?;
    fn run<S: Scalar>(
        src: &Scenario,
        dst: &Scenario,
        t: &[S],
        rest: &[usize],
        party: usize,
        input: usize,
        outcome: usize,
        tol: f64,
    ) -> Result<(Table, Number)> {
        let n = src.parties();
        let (mut x, mut a) = (vec![0; n], vec![0; n]);
        x[party] = input;
        a[party] = outcome;
        // branch probability at all-zero inputs of the others
        let mut prob = S::zero();
        for ai in 0..dst.output_count() {
            for (&q, &v) in rest.iter().zip(&dst.output_tuple(ai)) {
                a[q] = v;
            }
            prob.add_ref(&t[src.index(&x, &a)]);
        }
        let zero_tol = if S::MODE == Mode::Rational { 0.0 } else { tol };
        if prob.near_zero(zero_tol) || prob < S::zero() {
            return Err(Error::ZeroProbability(format!(
                "party {party} never reports {outcome} on input {input}"
            )));
        }
        let mut out = Vec::with_capacity(dst.table_len());
        for xi in 0..dst.input_count() {
            for (&q, &v) in rest.iter().zip(&dst.input_tuple(xi)) {
                x[q] = v;
            }
            for ai in 0..dst.output_count() {
                for (&q, &v) in rest.iter().zip(&dst.output_tuple(ai)) {
                    a[q] = v;
                }
                out.push(t[src.index(&x, &a)].div_ref(&prob));
            }
        }
        Ok((S::into_table(out), prob.to_number()))
    }
    let (table, prob) = match b.table() {
        Table::Rational(t) => run(src, &dst, t, &rest, party, input, outcome, tol)?,
        Table::Float(t) => run(src, &dst, t, &rest, party, input, outcome, tol)?,
    };
    Ok((CorrelationBox::new(dst, table)?, prob))
}

/// Preparation-phase step. Party indices refer to the box as it stands when
/// the step runs; a broadcast removes its party.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    /// `party` measures `input` and announces the outcome; `handlers[a]` is
    /// the relabeling the remaining parties apply after outcome `a`.
    Broadcast {
        party: usize,
        input: usize,
        handlers: Vec<Option<Relabeling>>,
    },
    Relabel { relabeling: Relabeling },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    #[serde(default)]
    pub steps: Vec<Step>,
    /// Applied in order after the preparation phase.
    #[serde(default)]
    pub wirings: Vec<SequentialWiring>,
}

#[derive(Serialize, Deserialize)]
struct ProtocolJson {
    schema: String,
    #[serde(flatten)]
    protocol: Protocol,
}

impl Protocol {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ProtocolJson {
            schema: PROTOCOL_SCHEMA.into(),
            protocol: self.clone(),
        })
        .expect("protocol serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: ProtocolJson = serde_json::from_str(s)?;
        if raw.schema != PROTOCOL_SCHEMA {
            return Err(Error::Parse(format!("unsupported protocol schema {:?}", raw.schema)));
        }
        Ok(raw.protocol)
    }

    /// True when no step depends on an announced outcome.
    pub fn is_outcome_independent(&self) -> bool {
        self.steps.iter().all(|s| matches!(s, Step::Relabel { .. }))
    }
}

/// Runs the preparation steps branch by branch, mixes the surviving branches
/// by their probabilities and applies the wirings.
pub fn run_protocol(b: &CorrelationBox, p: &Protocol) -> Result<CorrelationBox> {
    run_protocol_with(b, p, DEFAULT_EPS)
}

pub fn run_protocol_with(b: &CorrelationBox, p: &Protocol, tol: f64) -> Result<CorrelationBox> {
    ensure_valid(b)?;
    let mode = b.mode();
    let mut branches: Vec<(Number, CorrelationBox)> = vec![(one(mode), b.clone())];
    for (k, step) in p.steps.iter().enumerate() {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for (w, current) in branches {
            match step {
                Step::Relabel { relabeling } => next.push((w, relabel(&current, relabeling)?)),
                Step::Broadcast { party, input, handlers } => {
                    let s = current.scenario();
                    if *party >= s.parties() || *input >= s.inputs()[*party] {
                        return Err(Error::Protocol(format!("step {k}: party {party} or input {input} out of range")));
                    }
                    if handlers.len() != s.outputs()[*party] {
                        return Err(Error::Protocol(format!(
                            "step {k}: {} handlers for {} outcomes",
                            handlers.len(),
                            s.outputs()[*party]
                        )));
                    }
                    for (outcome, handler) in handlers.iter().enumerate() {
                        let (post, prob) = match postselect_with(&current, *party, *input, outcome, tol) {
                            Ok(r) => r,
                            Err(Error::ZeroProbability(msg)) => {
                                log::info!("step {k}: dropping branch with outcome {outcome}: {msg}");
                                continue;
                            }
                            Err(e) => return Err(e),
                        };
                        let post = match handler {
                            Some(r) => relabel(&post, r)?,
                            None => post,
                        };
                        next.push((times(&w, &prob)?, post));
                    }
                }
            }
        }
        if next.is_empty() {
            return Err(Error::ZeroProbability(format!("step {k} leaves no branch")));
        }
        branches = next;
    }
    let (weights, boxes): (Vec<Number>, Vec<CorrelationBox>) = branches.into_iter().unzip();
    let mut out = if boxes.len() == 1 {
        boxes.into_iter().next().expect("one branch")
    } else {
        // float branch weights carry rounding; renormalize before mixing
        let weights = match mode {
            Mode::Float => {
                let total: f64 = weights.iter().map(Number::to_f64).sum();
                weights.iter().map(|w| Number::Float(w.to_f64() / total)).collect()
            }
            Mode::Rational => weights,
        };
        mix(&boxes, &weights)?
    };
    for w in &p.wirings {
        out = apply_sequential_wiring_with(&out, w, tol)?;
    }
    Ok(out)
}

fn one(mode: Mode) -> Number {
    match mode {
        Mode::Rational => Number::Rational(BigRational::from_integer(1.into())),
        Mode::Float => Number::Float(1.0),
    }
}

fn times(a: &Number, b: &Number) -> Result<Number> {
    match (a, b) {
        (Number::Rational(x), Number::Rational(y)) => Ok(Number::Rational(x * y)),
        (Number::Float(x), Number::Float(y)) => Ok(Number::Float(x * y)),
        _ => Err(Error::ModeMismatch("branch weights of different modes".into())),
    }
}

/// Indexed, restartable enumeration of every deterministic adaptive wiring
/// of `group`, as a product over effective inputs of per-input plans.
///
/// A plan for the remaining members `R` picks a member `p ∈ R` and an input,
/// then one plan for `R \ {p}` per output of `p`; with nobody left it picks
/// an effective output. Distinct indices give distinct plan trees.
#[derive(Clone, Debug)]
pub struct WiringEnumeration {
    scenario: Scenario,
    group: Vec<usize>,
    effective_inputs: usize,
    effective_outputs: usize,
    per_input: u128,
}

impl WiringEnumeration {
    pub fn new(scenario: &Scenario, group: &[usize], effective_inputs: usize, effective_outputs: usize) -> Result<Self> {
        Self::with_cap(scenario, group, effective_inputs, effective_outputs, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(
        scenario: &Scenario,
        group: &[usize],
        effective_inputs: usize,
        effective_outputs: usize,
        cap: u128,
    ) -> Result<Self> {
        let mut group = group.to_vec();
        group.sort_unstable();
        group.dedup();
        if group.is_empty() || group.iter().any(|&p| p >= scenario.parties()) {
            return Err(Error::Wiring(format!("invalid group {group:?}")));
        }
        if group.len() > 3 {
            return Err(Error::Cap("wiring enumeration supports groups of at most 3 parties".into()));
        }
        if effective_inputs == 0 || effective_outputs == 0 {
            return Err(Error::Wiring("effective alphabets must be nonempty".into()));
        }
        let e = WiringEnumeration {
            scenario: scenario.clone(),
            group,
            effective_inputs,
            effective_outputs,
            per_input: 0,
        };
        let per_input = e
            .plan_count(&e.group)
            .ok_or_else(|| Error::Cap("plan count overflows".into()))?;
        let total = (0..effective_inputs).try_fold(1u128, |acc, _| acc.checked_mul(per_input));
        match total {
            Some(t) if t <= cap => Ok(WiringEnumeration { per_input, ..e }),
            _ => Err(Error::Cap(format!("more than {cap} wirings"))),
        }
    }

    fn plan_count(&self, rest: &[usize]) -> Option<u128> {
        if rest.is_empty() {
            return Some(self.effective_outputs as u128);
        }
        let mut total = 0u128;
        for (i, &p) in rest.iter().enumerate() {
            let sub: Vec<usize> = rest.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &q)| q).collect();
            let c = self.plan_count(&sub)?;
            let mut block = 1u128;
            for _ in 0..self.scenario.outputs()[p] {
                block = block.checked_mul(c)?;
            }
            total = total.checked_add(block.checked_mul(self.scenario.inputs()[p] as u128)?)?;
        }
        Some(total)
    }

    pub fn plans_per_input(&self) -> u128 {
        self.per_input
    }

    pub fn len(&self) -> u128 {
        self.per_input.pow(self.effective_inputs as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self) -> &[usize] {
        &self.group
    }

    /// The `k`-th plan for a single effective input.
    pub fn plan(&self, k: u128) -> PlanNode {
        assert!(k < self.per_input, "plan index out of range");
        self.decode_plan(&self.group, k)
    }

    fn decode_plan(&self, rest: &[usize], mut k: u128) -> PlanNode {
        if rest.is_empty() {
            return PlanNode::Output(k as usize);
        }
        for (i, &p) in rest.iter().enumerate() {
            let sub: Vec<usize> = rest.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &q)| q).collect();
            let c = self.plan_count(&sub).expect("bounded at construction");
            let d = self.scenario.outputs()[p];
            let block = c.pow(d as u32);
            let size = block * self.scenario.inputs()[p] as u128;
            if k >= size {
                k -= size;
                continue;
            }
            let input = (k / block) as usize;
            let mut r = k % block;
            let mut branches = Vec::with_capacity(d);
            for _ in 0..d {
                branches.push(self.decode_plan(&sub, r % c));
                r /= c;
            }
            return PlanNode::Measure { party: p, input, branches };
        }
        unreachable!("index below the plan count")
    }

    /// Wiring number `i`; the plan of effective input 0 varies slowest.
    pub fn get(&self, i: u128) -> SequentialWiring {
        assert!(i < self.len(), "wiring index out of range");
        let mut digits = vec![0u128; self.effective_inputs];
        let mut r = i;
        for d in digits.iter_mut().rev() {
            *d = r % self.per_input;
            r /= self.per_input;
        }
        SequentialWiring {
            group: self.group.clone(),
            effective_outputs: self.effective_outputs,
            plans: digits.into_iter().map(|k| self.plan(k)).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = SequentialWiring> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Wirings with indices `worker, worker + workers, ...`.
    pub fn stride(&self, worker: u128, workers: u128) -> impl Iterator<Item = SequentialWiring> + '_ {
        (worker..self.len()).step_by(workers.max(1) as usize).map(move |i| self.get(i))
    }
}

/// Effective party 2 of a 3-party box: `A_2` gets the effective input, `A_3`
/// gets `A_2`'s output as input, and `A_3`'s output is reported.
pub fn fig1b_wiring() -> SequentialWiring {
    let relay = |x2: usize| PlanNode::Measure {
        party: 1,
        input: x2,
        branches: (0..2)
            .map(|a2| PlanNode::Measure {
                party: 2,
                input: a2,
                branches: vec![PlanNode::Output(0), PlanNode::Output(1)],
            })
            .collect(),
    };
    SequentialWiring {
        group: vec![1, 2],
        effective_outputs: 2,
        plans: vec![relay(0), relay(1)],
    }
}

/// `A_2` measures its second setting in advance. On outcome `+1` nothing
/// changes; on `-1`, `A_1` flips its outcome for its second setting. The
/// result violates the CHSH variant with the minus sign on `(1,1)`; a final
/// flip of `A_1`'s outcome on its second setting moves it to `(1,0)`, the
/// sign pattern of [`crate::bell::chsh`].
pub fn paper_broadcast_protocol() -> Protocol {
    let bip = Scenario::uniform(2, 2, 2).expect("binary pair");
    let flip = |input| Relabeling::flip_output(&bip, 0, input).expect("binary alphabet");
    Protocol {
        steps: vec![
            Step::Broadcast {
                party: 1,
                input: 1,
                handlers: vec![None, Some(flip(1))],
            },
            Step::Relabel { relabeling: flip(1) },
        ],
        wirings: Vec::new(),
    }
}
