//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! `cargo test -p boxlab-core --test acceptance -- [--seed N] [name filters]`

use std::collections::HashMap;
use std::time::{Duration, Instant};

use boxlab::bell::{chsh, chsh_family_max, evaluate, evaluate_exact, gyni, max_over_set, SetClass};
use boxlab::lp::{maximize, solve_feasibility, to_float, LinearProgram, LpStatus, SolverOptions};
use boxlab::membership::{
    check_bl, check_local, check_local_with, check_nsbl, check_tobl, check_tobl_general, MembershipOptions,
    MembershipResult, Verdict,
};
use boxlab::model::{validate_box, Scenario};
use boxlab::quantum::{paper_ghz_box, rationalize, RATIONALIZE_TOL};
use boxlab::random::{random_local_box, random_lp, random_ns_box, random_protocol, seeded};
use boxlab::reproduce::reproduce;
use boxlab::scalar::parse_rational;
use boxlab::wiring::{apply_sequential_wiring, fig1b_wiring, paper_broadcast_protocol, run_protocol, SequentialWiring, WiringEnumeration};
use boxlab::{CorrelationBox, Mode, Number, Partition, Table};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::Value;

const TOL: f64 = 1e-9;
const CORPUS: &str = include_str!("data/tobl_corpus.json");
const GOLDEN: &str = include_str!("data/gyni_tobl_max.json");

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cut() -> Partition {
    Partition::singleton_first()
}

fn corpus() -> Vec<CorrelationBox> {
    let v: Value = serde_json::from_str(CORPUS).expect("corpus parses");
    assert_eq!(v["schema"], "boxlab-corpus-v1");
    serde_json::from_value(v["boxes"].clone()).expect("corpus boxes parse")
}

/// `E00 + E01 - E10 + E11` written out from the probabilities.
fn chsh_by_hand(p: impl Fn(usize, usize, usize, usize) -> f64) -> f64 {
    let corr = |x: usize, y: usize| -> f64 {
        let mut e = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                e += if a == b { 1.0 } else { -1.0 } * p(a, b, x, y);
            }
        }
        e
    };
    corr(0, 0) + corr(0, 1) - corr(1, 0) + corr(1, 1)
}

/// Relay wiring as a direct sum: `P(a1,a3|x1,x2) = Σ_{a2} P(a1,a2,a3|x1,x2,a2)`.
fn relay_chsh_by_hand(g: &CorrelationBox) -> f64 {
    chsh_by_hand(|a1, a3, x1, x2| (0..2).map(|a2| g.prob_f64(&[x1, x2, a2], &[a1, a2, a3])).sum())
}

fn c01_relay_wiring() -> Outcome {
    let start = Instant::now();
    let g = paper_ghz_box();
    let wired = apply_sequential_wiring(&g, &fig1b_wiring()).map_err(|e| e.to_string())?;
    let v = evaluate(&chsh(), &wired).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected = 3.0 / 2f64.sqrt();
    let by_hand = relay_chsh_by_hand(&g);
    ensure((v - expected).abs() <= TOL, || format!("chsh {v}, expected {expected}"))?;
    ensure((by_hand - expected).abs() <= TOL, || format!("direct sum gives {by_hand}"))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("chsh = {v:.12} (direct sum {by_hand:.12}), {elapsed:.2?}"))
}

fn c02_broadcast() -> Outcome {
    let g = paper_ghz_box();
    let out = run_protocol(&g, &paper_broadcast_protocol()).map_err(|e| e.to_string())?;
    let v = evaluate(&chsh(), &out).map_err(|e| e.to_string())?;
    // A2 measures x=1 and announces a2; A1 flips its x=1 outcome when a2 = 0
    let by_hand = chsh_by_hand(|b1, a3, x1, x3| {
        (0..2)
            .map(|a2| {
                let a1 = b1 ^ usize::from(x1 == 1 && a2 == 0);
                g.prob_f64(&[x1, 1, x3], &[a1, a2, a3])
            })
            .sum()
    });
    let expected = 2.0 * 2f64.sqrt();
    ensure((v - expected).abs() <= TOL, || format!("chsh {v}, expected {expected}"))?;
    ensure((by_hand - expected).abs() <= TOL, || format!("hand-built protocol gives {by_hand}"))?;
    Ok(format!("chsh = {v:.12} (by hand {by_hand:.12})"))
}

/// `Σ_λ w_λ D_λ(a1|x1) T_λ(a2 a3|x2 x3)` straight from the certificate fields.
fn rebuild_bl(g: &CorrelationBox, r: &MembershipResult) -> Result<f64, String> {
    let dec = r.decomposition().ok_or("member without decomposition")?;
    let s = g.scenario();
    let pair = s.restrict(&[1, 2]).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for xi in 0..s.input_count() {
        let x = s.input_tuple(xi);
        for ai in 0..s.output_count() {
            let a = s.output_tuple(ai);
            let mut total = 0.0;
            for t in &dec.terms {
                let d = t.strategies.iter().find(|d| d.party == 0).ok_or("term without a strategy for party 1")?;
                if d.outputs[x[0]] != a[0] {
                    continue;
                }
                let grp = t.groups.first().ok_or("term without a group table")?;
                total += t.weight.to_f64() * grp.tables[0].get_f64(pair.index(&x[1..], &a[1..]));
            }
            worst = worst.max((total - g.prob_f64(&x, &a)).abs());
        }
    }
    Ok(worst)
}

fn c03_bl_membership() -> Outcome {
    let start = Instant::now();
    let g = paper_ghz_box();
    let r = check_bl(&g, &cut()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Member, || format!("verdict {}", r.verdict))?;
    let residual = rebuild_bl(&g, &r)?;
    ensure(residual <= TOL, || format!("reconstruction residual {residual:e}"))?;
    let rat = rationalize(&g, RATIONALIZE_TOL).map_err(|e| e.to_string())?;
    let exact = check_bl(&rat.boxed, &cut()).map_err(|e| e.to_string())?;
    ensure(exact.verdict == Verdict::Member, || format!("exact verdict {}", exact.verdict))?;
    let exact_residual = rebuild_bl(&rat.boxed, &exact)?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "member, float residual {residual:.1e}, rationalized box (rounding {:.1e}) member with residual {exact_residual:.1e}, {elapsed:.2?}",
        rat.residual
    ))
}

fn c04_inconsistency_witness() -> Outcome {
    let g = paper_ghz_box();
    ensure(check_bl(&g, &cut()).map_err(|e| e.to_string())?.is_member(), || "GHZ box not BL".into())?;
    let wired = apply_sequential_wiring(&g, &fig1b_wiring()).map_err(|e| e.to_string())?;
    let local = check_local(&wired).map_err(|e| e.to_string())?;
    ensure(local.verdict == Verdict::NonMember, || format!("wired box verdict {}", local.verdict))?;
    // exact route on the rationalized box, with a separating hyperplane
    let rat = rationalize(&g, RATIONALIZE_TOL).map_err(|e| e.to_string())?.boxed;
    ensure(check_bl(&rat, &cut()).map_err(|e| e.to_string())?.is_member(), || "rationalized box not BL".into())?;
    let wired_exact = apply_sequential_wiring(&rat, &fig1b_wiring()).map_err(|e| e.to_string())?;
    let exact = check_local(&wired_exact).map_err(|e| e.to_string())?;
    ensure(exact.verdict == Verdict::NonMember, || format!("exact wired verdict {}", exact.verdict))?;
    let h = exact.hyperplane().ok_or("non-member without a separating hyperplane")?;
    let hv = h.evaluate(&wired_exact).map_err(|e| e.to_string())?.to_f64();
    ensure(hv < 0.0, || format!("hyperplane value {hv} on the wired box"))?;
    // a CHSH value above 2 excludes a local model
    let family = chsh_family_max(&wired).map_err(|e| e.to_string())?;
    ensure(family > 2.0 + TOL, || format!("largest CHSH value {family}"))?;
    Ok(format!("BL member; wired box non-local (exact hyperplane {hv:.4}, CHSH {family:.6})"))
}

fn c05_nsbl_gyni() -> Outcome {
    let start = Instant::now();
    let m = max_over_set(&gyni(), SetClass::Nsbl, Some(&cut())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let one = Number::Rational(BigRational::one());
    ensure(m.value == one, || format!("maximum {}", m.value))?;
    ensure(m.dual_bound == one, || format!("dual bound {}", m.dual_bound))?;
    let attained = evaluate_exact(&gyni(), &m.maximizer).map_err(|e| e.to_string())?;
    ensure(attained.is_one(), || format!("maximizer evaluates to {attained}"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("maximum = dual bound = 1, {elapsed:.2?}"))
}

fn c06_tobl_gyni() -> Outcome {
    let golden: Value = serde_json::from_str(GOLDEN).map_err(|e| e.to_string())?;
    let pinned = parse_rational(golden["value"].as_str().ok_or("golden value missing")?).map_err(|e| e.to_string())?;
    let pinned_box: CorrelationBox = serde_json::from_value(golden["maximizer"].clone()).map_err(|e| e.to_string())?;
    let m = max_over_set(&gyni(), SetClass::Tobl, Some(&cut())).map_err(|e| e.to_string())?;
    ensure(m.value == Number::Rational(pinned.clone()), || format!("maximum {} against pinned {pinned}", m.value))?;
    ensure(m.dual_bound == m.value, || format!("dual bound {}", m.dual_bound))?;
    ensure(m.value.to_f64() > 1.0 + TOL, || format!("maximum {} not above 1", m.value))?;
    for (name, b) in [("maximizer", &m.maximizer), ("pinned maximizer", &pinned_box)] {
        let v = evaluate_exact(&gyni(), b).map_err(|e| e.to_string())?;
        ensure(v == pinned, || format!("{name} evaluates to {v}"))?;
        let tobl = check_tobl(b, &cut()).map_err(|e| e.to_string())?;
        ensure(tobl.verdict == Verdict::Member, || format!("{name} TOBL verdict {}", tobl.verdict))?;
        let nsbl = check_nsbl(b, &cut()).map_err(|e| e.to_string())?;
        ensure(nsbl.verdict == Verdict::NonMember, || format!("{name} NSBL verdict {}", nsbl.verdict))?;
    }
    Ok(format!("maximum = {} (pinned {pinned}); maximizer TOBL member, NSBL non-member", m.value))
}

/// Distinct values of `P(a1, a|x1)` over the plans of one effective input.
fn plan_blocks(b: &CorrelationBox, e: &WiringEnumeration) -> Result<(Vec<Vec<Number>>, Vec<usize>), String> {
    let mut blocks: Vec<Vec<Number>> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut of_plan = Vec::new();
    for k in 0..e.plans_per_input() {
        let plan = e.plan(k);
        let w = SequentialWiring::new(e.group().to_vec(), 2, vec![plan.clone(), plan]).map_err(|e| e.to_string())?;
        let out = apply_sequential_wiring(b, &w).map_err(|e| e.to_string())?;
        let t = out.table().to_numbers();
        // rows (x1, x=0) only; the rows for x=1 repeat them
        let block: Vec<Number> = (0..2).flat_map(|x1| t[x1 * 8..x1 * 8 + 4].to_vec()).collect();
        let key = serde_json::to_string(&block).expect("numbers serialize");
        let id = *seen.entry(key).or_insert_with(|| {
            blocks.push(block);
            blocks.len() - 1
        });
        of_plan.push(id);
    }
    Ok((blocks, of_plan))
}

fn assemble(mode: Mode, b0: &[Number], b1: &[Number]) -> Result<CorrelationBox, String> {
    // scenario (x1, x) with x1 most significant
    let mut values = Vec::with_capacity(16);
    for x1 in 0..2 {
        values.extend_from_slice(&b0[x1 * 4..x1 * 4 + 4]);
        values.extend_from_slice(&b1[x1 * 4..x1 * 4 + 4]);
    }
    let s = Scenario::uniform(2, 2, 2).map_err(|e| e.to_string())?;
    CorrelationBox::new(s, Table::from_numbers(mode, &values).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn c07_tobl_closure() -> Outcome {
    let start = Instant::now();
    let boxes = corpus();
    ensure(boxes.len() == 50, || format!("corpus has {} boxes", boxes.len()))?;
    let s3 = Scenario::uniform(3, 2, 2).map_err(|e| e.to_string())?;
    let e = WiringEnumeration::new(&s3, &[1, 2], 2, 2).map_err(|e| e.to_string())?;
    ensure(e.len() == 65536, || format!("{} wirings", e.len()))?;
    let float = MembershipOptions::default();
    let (mut checks, mut fallbacks) = (0usize, 0usize);
    for (bi, b) in boxes.iter().enumerate() {
        ensure(check_tobl(b, &cut()).map_err(|e| e.to_string())?.is_member(), || format!("corpus box {bi} not TOBL"))?;
        let (blocks, of_plan) = plan_blocks(b, &e)?;
        // the block shortcut must agree with the full wiring on sampled indices
        for i in (0..e.len()).step_by(4099) {
            let full = apply_sequential_wiring(b, &e.get(i)).map_err(|e| e.to_string())?;
            let (k0, k1) = ((i / e.plans_per_input()) as usize, (i % e.plans_per_input()) as usize);
            let built = assemble(b.mode(), &blocks[of_plan[k0]], &blocks[of_plan[k1]])?;
            ensure(full == built, || format!("box {bi}: wiring {i} disagrees with its blocks"))?;
        }
        for (i0, b0) in blocks.iter().enumerate() {
            for (i1, b1) in blocks.iter().enumerate() {
                let wired = assemble(b.mode(), b0, b1)?;
                let quick = check_local_with(&wired.to_float(), &float).map_err(|e| e.to_string())?;
                let family = chsh_family_max(&wired).map_err(|e| e.to_string())?;
                checks += 1;
                let verdict = if quick.verdict == Verdict::Member && family <= 2.0 + TOL {
                    Verdict::Member
                } else {
                    fallbacks += 1;
                    check_local(&wired).map_err(|e| e.to_string())?.verdict
                };
                ensure(verdict == Verdict::Member, || {
                    format!("box {bi}, blocks ({i0},{i1}): wired box {verdict}, CHSH {family}")
                })?;
                ensure(family <= 2.0 + TOL, || format!("box {bi}, blocks ({i0},{i1}): CHSH {family}"))?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "65536 wirings x 50 boxes local ({checks} distinct wired boxes checked, {fallbacks} exact re-checks), {elapsed:.1?}"
    ))
}

fn c08_local_closure(seed: u64) -> Outcome {
    let mut rng = seeded(seed ^ 0x08);
    let s3 = Scenario::uniform(3, 2, 2).map_err(|e| e.to_string())?;
    for i in 0..1000 {
        let b = random_local_box(&mut rng, &s3, 1 + i % 4).map_err(|e| e.to_string())?;
        let p = random_protocol(&mut rng).map_err(|e| e.to_string())?;
        let out = run_protocol(&b, &p).map_err(|e| e.to_string())?;
        let r = check_local(&out).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Member, || format!("protocol {i}: output {}", r.verdict))?;
        if out.scenario() == &Scenario::uniform(2, 2, 2).map_err(|e| e.to_string())? {
            let family = chsh_family_max(&out).map_err(|e| e.to_string())?;
            ensure(family <= 2.0 + TOL, || format!("protocol {i}: CHSH {family}"))?;
        }
    }
    Ok(format!("1000 protocols (seed {seed}) keep local boxes local"))
}

fn c09_inclusion_chain(seed: u64) -> Outcome {
    let mut rng = seeded(seed ^ 0x09);
    let mut counts = [0usize; 4];
    for i in 0..200 {
        let b = random_ns_box(&mut rng, 3).map_err(|e| e.to_string())?;
        let verdicts = [
            check_local(&b).map_err(|e| e.to_string())?.verdict,
            check_nsbl(&b, &cut()).map_err(|e| e.to_string())?.verdict,
            check_tobl(&b, &cut()).map_err(|e| e.to_string())?.verdict,
            check_bl(&b, &cut()).map_err(|e| e.to_string())?.verdict,
        ];
        ensure(!verdicts.contains(&Verdict::Undecided), || format!("box {i}: undecided verdict"))?;
        for (c, v) in counts.iter_mut().zip(verdicts) {
            *c += usize::from(v == Verdict::Member);
        }
        let member = verdicts.map(|v| v == Verdict::Member);
        ensure(member.windows(2).all(|w| !w[0] || w[1]), || format!("box {i}: chain broken {verdicts:?}"))?;
    }
    Ok(format!(
        "200 boxes (seed {seed}); members local {}, nsbl {}, tobl {}, bl {}",
        counts[0], counts[1], counts[2], counts[3]
    ))
}

/// Recheck of one exact result by substitution, then comparison with the float solve.
fn recheck_lp(lp: &LinearProgram<BigRational>) -> Result<LpStatus, String> {
    let opts = SolverOptions::default();
    let exact = maximize(lp, &opts).map_err(|e| e.to_string())?;
    match exact.status {
        LpStatus::Optimal => {
            let x = exact.primal.as_ref().ok_or("optimal without a point")?;
            ensure(lp.max_violation(x).is_zero(), || "optimal point violates a constraint".into())?;
            let z = exact.objective.clone().ok_or("optimal without a value")?;
            ensure(lp.objective_value(x) == Some(z.clone()), || "objective does not match the point".into())?;
            let dual = exact.dual.as_ref().ok_or("optimal without duals")?;
            let bound = lp.verify_dual_bound(dual, 0.0).map_err(|e| e.to_string())?;
            ensure(bound == z, || format!("dual bound {bound} against value {z}"))?;
        }
        LpStatus::Infeasible => {
            let f = exact.farkas.as_ref().ok_or("infeasible without a certificate")?;
            lp.verify_farkas(f, 0.0).map_err(|e| e.to_string())?;
        }
        LpStatus::Unbounded => {
            // objective >= 10^6 must still be feasible
            let mut capped = lp.clone();
            let c = lp.objective().ok_or("no objective")?.to_vec();
            capped.add_inequality(c.into_iter().enumerate().collect(), BigRational::from_integer(1_000_000.into()));
            let r = solve_feasibility(&capped, &opts).map_err(|e| e.to_string())?;
            let x = r.primal.as_ref().ok_or("capped program has no point")?;
            ensure(capped.max_violation(x).is_zero(), || "capped point violates a constraint".into())?;
        }
        s => return Err(format!("exact solve ended {s:?}")),
    }
    let float = maximize(&to_float(lp), &opts).map_err(|e| e.to_string())?;
    ensure(float.status == exact.status, || format!("float {:?} against exact {:?}", float.status, exact.status))?;
    if let (Some(fz), Some(ez)) = (float.objective, &exact.objective) {
        let ez = num_traits::ToPrimitive::to_f64(ez).ok_or("objective out of range")?;
        ensure((fz - ez).abs() <= TOL, || format!("float optimum {fz} against exact {ez}"))?;
    }
    Ok(exact.status)
}

fn c10_lp_self_verification(seed: u64) -> Outcome {
    let mut rng = seeded(seed ^ 0x10);
    let mut tally: HashMap<String, usize> = HashMap::new();
    for i in 0..500 {
        let lp = random_lp(&mut rng, 6);
        let status = recheck_lp(&lp).map_err(|e| format!("program {i}: {e}"))?;
        *tally.entry(format!("{status:?}").to_lowercase()).or_default() += 1;
    }
    let mut parts: Vec<String> = tally.into_iter().map(|(k, v)| format!("{k} {v}")).collect();
    parts.sort();
    Ok(format!("500 programs (seed {seed}) rechecked: {}", parts.join(", ")))
}

fn c11_general_reduction() -> Outcome {
    let mut boxes = corpus();
    let ghz = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).map_err(|e| e.to_string())?.boxed;
    boxes.push(ghz);
    let mut rng = seeded(11);
    for _ in 0..20 {
        boxes.push(random_ns_box(&mut rng, 3).map_err(|e| e.to_string())?);
    }
    let mut members = 0;
    for (i, b) in boxes.iter().enumerate() {
        let a = check_tobl(b, &cut()).map_err(|e| e.to_string())?.verdict;
        let g = check_tobl_general(b, &cut()).map_err(|e| e.to_string())?.verdict;
        ensure(a == g, || format!("box {i}: tobl {a}, general {g}"))?;
        ensure(a != Verdict::Undecided, || format!("box {i}: undecided"))?;
        members += usize::from(a == Verdict::Member);
        if i < 50 {
            ensure(a == Verdict::Member, || format!("corpus box {i} is {a}"))?;
        }
    }
    Ok(format!("{} boxes agree ({members} members)", boxes.len()))
}

fn c12_negative_control() -> Outcome {
    let g = paper_ghz_box();
    let mut t = g.table().to_f64_vec();
    t[0] += 1e-3;
    let tampered = CorrelationBox::new(g.scenario().clone(), Table::Float(t)).map_err(|e| e.to_string())?;
    ensure(!validate_box(&tampered).valid, || "tampered box still normalized".into())?;
    let by_hand = relay_chsh_by_hand(&tampered);
    let expected = 3.0 / 2f64.sqrt();
    ensure((by_hand - expected).abs() > TOL, || format!("tampered direct sum still {by_hand}"))?;
    let report = reproduce(Some(&tampered), vec!["reproduce".into()]);
    ensure(!report.passed && report.exit_status != 0, || "tampered run passed".into())?;
    ensure(report.failed_claims().contains(&"relay-chsh"), || format!("failed: {:?}", report.failed_claims()))?;
    Ok(format!(
        "tampered box: direct-sum CHSH off by {:.1e}; reproduce fails {}",
        (by_hand - expected).abs(),
        report.failed_claims().join(", ")
    ))
}

fn main() {
    let mut seed = 2024u64;
    let mut filters = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--seed" {
            seed = args.next().and_then(|s| s.parse().ok()).expect("--seed takes an integer");
        } else if !a.starts_with('-') {
            filters.push(a);
        }
    }
    let criteria: Vec<Criterion> = vec![
        ("c01_relay_wiring", Box::new(c01_relay_wiring)),
        ("c02_broadcast", Box::new(c02_broadcast)),
        ("c03_bl_membership", Box::new(c03_bl_membership)),
        ("c04_inconsistency_witness", Box::new(c04_inconsistency_witness)),
        ("c05_nsbl_gyni", Box::new(c05_nsbl_gyni)),
        ("c06_tobl_gyni", Box::new(c06_tobl_gyni)),
        ("c07_tobl_closure", Box::new(c07_tobl_closure)),
        ("c08_local_closure", Box::new(move || c08_local_closure(seed))),
        ("c09_inclusion_chain", Box::new(move || c09_inclusion_chain(seed))),
        ("c10_lp_self_verification", Box::new(move || c10_lp_self_verification(seed))),
        ("c11_general_reduction", Box::new(c11_general_reduction)),
        ("c12_negative_control", Box::new(c12_negative_control)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
