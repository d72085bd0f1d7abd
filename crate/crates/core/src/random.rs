//! Seeded generators for boxes, relabelings, protocols and small linear
//! programs. Every generator takes the RNG explicitly, so a seed fixes the output.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bell::{max_over_set_with, BellFunctional, SetClass, SetOptions};
use crate::catalog::{pr_box, svetlichny_box};
use crate::error::Result;
use crate::lp::LinearProgram;
use crate::membership::{check_tobl, Verdict};
use crate::model::{mix, relabel, tensor, CorrelationBox, Partition, Relabeling, Scenario};
use crate::scalar::Number;
use crate::wiring::{Protocol, Step, WiringEnumeration};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `k` positive rational weights summing to one, with denominators up to `k * grain`.
pub fn rational_weights<R: Rng>(rng: &mut R, k: usize, grain: u32) -> Vec<BigRational> {
    let parts: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=grain)).collect();
    let total: u32 = parts.iter().sum();
    parts
        .iter()
        .map(|&p| BigRational::new(BigInt::from(p), BigInt::from(total)))
        .collect()
}

fn mix_rational(boxes: &[CorrelationBox], weights: Vec<BigRational>) -> Result<CorrelationBox> {
    let w: Vec<Number> = weights.into_iter().map(Number::Rational).collect();
    mix(boxes, &w)
}

pub fn random_deterministic<R: Rng>(rng: &mut R, s: &Scenario) -> CorrelationBox {
    let strategies: Vec<Vec<usize>> = (0..s.parties())
        .map(|p| (0..s.inputs()[p]).map(|_| rng.gen_range(0..s.outputs()[p])).collect())
        .collect();
    CorrelationBox::deterministic(s.clone(), &strategies).expect("strategies in range")
}

/// Rational mixture of `terms` random deterministic boxes.
pub fn random_local_box<R: Rng>(rng: &mut R, s: &Scenario, terms: usize) -> Result<CorrelationBox> {
    let boxes: Vec<CorrelationBox> = (0..terms.max(1)).map(|_| random_deterministic(rng, s)).collect();
    let w = rational_weights(rng, boxes.len(), 6);
    mix_rational(&boxes, w)
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Random local relabeling; with `parties`, also a random party order
/// among parties of equal alphabets.
pub fn random_relabeling<R: Rng>(rng: &mut R, s: &Scenario, parties: bool) -> Relabeling {
    let n = s.parties();
    let inputs: Vec<Vec<usize>> = (0..n).map(|p| random_permutation(rng, s.inputs()[p])).collect();
    let outputs: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|p| (0..s.inputs()[p]).map(|_| random_permutation(rng, s.outputs()[p])).collect())
        .collect();
    let r = Relabeling {
        inputs,
        outputs,
        parties: None,
    };
    let uniform = (1..n).all(|p| s.inputs()[p] == s.inputs()[0] && s.outputs()[p] == s.outputs()[0]);
    if parties && uniform {
        r.with_party_permutation(random_permutation(rng, n))
    } else {
        r
    }
}

/// One extremal no-signalling box on `parties` binary parties: a
/// deterministic box, a two-party nonlocal box with the rest deterministic,
/// or (for three parties) the three-way parity box, randomly relabeled.
pub fn random_extremal_ns_box<R: Rng>(rng: &mut R, parties: usize) -> Result<CorrelationBox> {
    let s = Scenario::uniform(parties, 2, 2)?;
    let kind = rng.gen_range(0..if parties == 3 { 3 } else { 2 });
    let b = match kind {
        0 => random_deterministic(rng, &s),
        1 if parties >= 2 => {
            let mut b = pr_box();
            if parties > 2 {
                let rest = Scenario::uniform(parties - 2, 2, 2)?;
                b = tensor(&b, &random_deterministic(rng, &rest))?;
            }
            b
        }
        _ => svetlichny_box(),
    };
    relabel(&b, &random_relabeling(rng, &s, true))
}

/// Rational mixture of one to three random extremal no-signalling boxes.
pub fn random_ns_box<R: Rng>(rng: &mut R, parties: usize) -> Result<CorrelationBox> {
    let k = rng.gen_range(1..=3);
    let boxes = (0..k).map(|_| random_extremal_ns_box(rng, parties)).collect::<Result<Vec<_>>>()?;
    let w = rational_weights(rng, k, 6);
    mix_rational(&boxes, w)
}

/// A random protocol on a three-party binary box that ends with two parties:
/// either a broadcast by one party with random handlers, or a random wiring
/// of two parties, each optionally preceded by a relabeling.
pub fn random_protocol<R: Rng>(rng: &mut R) -> Result<Protocol> {
    let s3 = Scenario::uniform(3, 2, 2)?;
    let s2 = Scenario::uniform(2, 2, 2)?;
    let mut steps = Vec::new();
    if rng.gen_bool(0.3) {
        steps.push(Step::Relabel {
            relabeling: random_relabeling(rng, &s3, true),
        });
    }
    let mut wirings = Vec::new();
    if rng.gen_bool(0.5) {
        let handlers = (0..2)
            .map(|_| rng.gen_bool(0.6).then(|| random_relabeling(rng, &s2, true)))
            .collect();
        steps.push(Step::Broadcast {
            party: rng.gen_range(0..3),
            input: rng.gen_range(0..2),
            handlers,
        });
        if rng.gen_bool(0.5) {
            // rewire one remaining party on its own
            let e = WiringEnumeration::new(&s2, &[rng.gen_range(0..2)], 2, 2)?;
            wirings.push(e.get(rng.gen_range(0..e.len())));
        }
    } else {
        let mut pair = random_permutation(rng, 3);
        pair.truncate(2);
        let e = WiringEnumeration::new(&s3, &pair, 2, 2)?;
        wirings.push(e.get(rng.gen_range(0..e.len())));
    }
    Ok(Protocol { steps, wirings })
}

/// Small program with integer data: up to `max_vars` variables, a few
/// equalities and inequalities, and an objective.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize) -> LinearProgram<BigRational> {
    let n = rng.gen_range(1..=max_vars.max(1));
    let int = |rng: &mut R, lo: i64, hi: i64| BigRational::from_integer(rng.gen_range(lo..=hi).into());
    let mut lp = LinearProgram::new(n);
    let row = |rng: &mut R| -> Vec<(usize, BigRational)> {
        let mut r = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                r.push((j, BigRational::from_integer(rng.gen_range(-3i64..=3).into())));
            }
        }
        r
    };
    for _ in 0..rng.gen_range(0..=2) {
        let r = row(rng);
        let b = int(rng, -2, 4);
        lp.add_equality(r, b);
    }
    for _ in 0..rng.gen_range(0..=4) {
        let r = row(rng);
        let b = int(rng, -4, 2);
        lp.add_inequality(r, b);
    }
    if rng.gen_bool(0.8) {
        // keeps most instances bounded
        let cap = int(rng, 1, 5);
        lp.add_upper_inequality((0..n).map(|j| (j, BigRational::from_integer(1.into()))).collect(), cap);
    }
    let c = (0..n).map(|_| int(rng, -3, 3)).collect();
    lp.set_objective(c);
    lp
}

/// Random integer functional with entries in `-2..=2`.
pub fn random_functional<R: Rng>(rng: &mut R, s: &Scenario) -> BellFunctional {
    BellFunctional::from_fn("random", s.clone(), |_, _| BigRational::from_integer(rng.gen_range(-2i64..=2).into()))
}

/// No-signalling three-party boxes certified time-ordered bilocal across
/// `1|2,3`: maximizers of random functionals over that set, mixed with
/// random local and no-signalling bilocal boxes. Each box is re-checked.
pub fn tobl_corpus(seed: u64, count: usize) -> Result<Vec<CorrelationBox>> {
    let mut rng = seeded(seed);
    let s = Scenario::uniform(3, 2, 2)?;
    let cut = Partition::singleton_first();
    let opts = SetOptions {
        no_signalling: true,
        ..SetOptions::default()
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let f = random_functional(&mut rng, &s);
        let vertex = max_over_set_with(&f, SetClass::Tobl, Some(&cut), &opts)?.maximizer;
        let b = match rng.gen_range(0..3) {
            0 => vertex,
            1 => {
                let other = random_local_box(&mut rng, &s, 2)?;
                mix_rational(&[vertex, other], rational_weights(&mut rng, 2, 4))?
            }
            _ => {
                let pair = random_ns_box(&mut rng, 2)?;
                let single = random_local_box(&mut rng, &Scenario::uniform(1, 2, 2)?, 1)?;
                let nsbl = tensor(&single, &pair)?;
                mix_rational(&[vertex, nsbl], rational_weights(&mut rng, 2, 4))?
            }
        };
        if check_tobl(&b, &cut)?.verdict == Verdict::Member && !out.contains(&b) {
            out.push(b);
        }
    }
    Ok(out)
}
