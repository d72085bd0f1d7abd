//! The end-to-end pipeline behind `boxlab reproduce`: builds the GHZ example,
//! runs every membership, wiring and Bell computation on it and reports
//! each claim as passed or failed.

use std::time::Instant;

use serde::Serialize;

use crate::bell::{chsh, evaluate, gyni, max_over_set, SetClass};
use crate::catalog::pr_box;
use crate::error::Result;
use crate::membership::{
    check_bl, check_local, check_nsbl, check_tobl, classify_bl_certificate, ClassTag, Verdict,
};
use crate::model::{is_no_signalling, tensor, validate_box, CorrelationBox, Partition, Scenario, DEFAULT_EPS};
use crate::quantum::{paper_ghz_box, rationalize, RATIONALIZE_TOL};
use crate::scalar::{Mode, Number};
use crate::wiring::{apply_sequential_wiring, fig1b_wiring, paper_broadcast_protocol, run_protocol};

pub const REPORT_SCHEMA: &str = "boxlab-report-v1";

/// Tolerance on every reported Bell value.
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct ReportValue {
    pub name: String,
    pub value: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    /// Where the expected value comes from: `analytic`, `computed` or `pinned`.
    pub source: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Claim {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub values: Vec<ReportValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub command: Vec<String>,
    pub claims: Vec<Claim>,
    pub passed: bool,
    pub exit_status: i32,
}

impl RunReport {
    pub fn failed_claims(&self) -> Vec<&str> {
        self.claims.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect()
    }
}

fn value(name: &str, v: impl ToString, expected: Option<String>, source: &str) -> ReportValue {
    ReportValue {
        name: name.into(),
        value: v.to_string(),
        expected,
        source: source.into(),
    }
}

struct Recorder {
    claims: Vec<Claim>,
}

impl Recorder {
    fn run(&mut self, id: &str, description: &str, f: impl FnOnce() -> Result<(bool, Vec<ReportValue>, Option<String>)>) {
        let start = Instant::now();
        let (passed, values, note) = match f() {
            Ok(r) => r,
            Err(e) => (false, Vec::new(), Some(format!("error: {e}"))),
        };
        self.claims.push(Claim {
            id: id.into(),
            description: description.into(),
            passed,
            values,
            note,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
}

/// Runs every claim on `ghz`, the GHZ example box unless another is given.
pub fn reproduce(ghz: Option<&CorrelationBox>, command: Vec<String>) -> RunReport {
    let ghz = ghz.cloned().unwrap_or_else(paper_ghz_box);
    let cut = Partition::singleton_first();
    let mut rec = Recorder { claims: Vec::new() };
    let sqrt2 = 2f64.sqrt();

    rec.run("ghz-box", "the GHZ box is valid and no-signalling", || {
        let v = validate_box(&ghz);
        let ns = is_no_signalling(&ghz, DEFAULT_EPS);
        Ok((
            v.valid && ns.passed && ghz.scenario() == &Scenario::uniform(3, 2, 2)?,
            vec![
                value("normalization residual", v.max_residual, None, "computed"),
                value("marginal discrepancy", ns.max_discrepancy, None, "computed"),
            ],
            None,
        ))
    });

    rec.run("ghz-bl", "the GHZ box has a bilocal decomposition across 1|2,3", || {
        let r = check_bl(&ghz, &cut)?;
        let dec = r.decomposition();
        let residual = dec.map(|d| d.residual).unwrap_or(f64::INFINITY);
        let mut values = vec![
            value("verdict", format!("{:?}", r.verdict), Some("Member".into()), "analytic"),
            value("reconstruction residual", residual, Some(format!("<= {VALUE_TOL:e}")), "analytic"),
        ];
        let mut ok = r.is_member() && residual <= VALUE_TOL;
        // exact re-run on the rationalized box
        if let Ok(rat) = rationalize(&ghz, RATIONALIZE_TOL) {
            let exact = check_bl(&rat.boxed, &cut)?;
            values.push(value("rationalization residual", rat.residual, None, "computed"));
            values.push(value("exact verdict", format!("{:?}", exact.verdict), Some("Member".into()), "analytic"));
            ok &= exact.is_member();
        }
        Ok((ok, values, None))
    });

    rec.run(
        "ghz-bl-two-way",
        "no time-ordered model exists, so the bilocal decomposition needs two-way signalling",
        || {
            let r = check_bl(&ghz, &cut)?;
            let dec = r
                .decomposition()
                .ok_or_else(|| crate::Error::Certificate("no bilocal certificate".into()))?;
            let audit = classify_bl_certificate(dec)?;
            Ok((
                audit.requires_two_way_terms == Some(true),
                vec![
                    value("terms", audit.terms.len(), None, "computed"),
                    value("terms signalling both ways", audit.both_terms, None, "computed"),
                    value("two-way signalling present", audit.two_way_present, None, "computed"),
                    value(
                        "requires two-way terms",
                        format!("{:?}", audit.requires_two_way_terms),
                        Some("Some(true)".into()),
                        "analytic",
                    ),
                ],
                Some("bilocal models with one-way terms exist, but none fits both time orders at once".into()),
            ))
        },
    );

    rec.run("ghz-not-tobl", "the GHZ box is not time-ordered bilocal", || {
        let r = check_tobl(&ghz, &cut)?;
        Ok((
            r.verdict == Verdict::NonMember,
            vec![value("verdict", format!("{:?}", r.verdict), Some("NonMember".into()), "analytic")],
            None,
        ))
    });

    let wired = apply_sequential_wiring(&ghz, &fig1b_wiring());
    rec.run("relay-chsh", "wiring A3's input to A2's output gives CHSH = 3/sqrt(2)", || {
        let w = wired.as_ref().map_err(clone_err)?;
        let v = evaluate(&chsh(), w)?;
        let expected = 3.0 / sqrt2;
        Ok((
            (v - expected).abs() <= VALUE_TOL,
            vec![value("chsh", v, Some(format!("{expected}")), "analytic")],
            None,
        ))
    });

    rec.run("relay-nonlocal", "the wired bipartite box is not local", || {
        let w = wired.as_ref().map_err(clone_err)?;
        let r = check_local(w)?;
        Ok((
            r.verdict == Verdict::NonMember,
            vec![value("verdict", format!("{:?}", r.verdict), Some("NonMember".into()), "analytic")],
            None,
        ))
    });

    rec.run("broadcast-chsh", "broadcasting A2's outcome gives CHSH = 2 sqrt(2)", || {
        let out = run_protocol(&ghz, &paper_broadcast_protocol())?;
        let v = evaluate(&chsh(), &out)?;
        let expected = 2.0 * sqrt2;
        Ok((
            (v - expected).abs() <= VALUE_TOL,
            vec![value("chsh", v, Some(format!("{expected}")), "analytic")],
            None,
        ))
    });

    rec.run("gyni-nsbl", "GYNI is at most 1 on no-signalling bilocal boxes", || {
        let m = max_over_set(&gyni(), SetClass::Nsbl, Some(&cut))?;
        let one = Number::rational(1, 1);
        Ok((
            m.value == one && m.dual_bound == one,
            vec![
                value("maximum", &m.value, Some("1".into()), "analytic"),
                value("dual bound", &m.dual_bound, None, "computed"),
            ],
            None,
        ))
    });

    let tobl_max = max_over_set(&gyni(), SetClass::Tobl, Some(&cut));
    rec.run("gyni-tobl", "GYNI exceeds 1 on a time-ordered bilocal box that is not NSBL", || {
        let m = tobl_max.as_ref().map_err(clone_err)?;
        let tobl = check_tobl(&m.maximizer, &cut)?;
        let nsbl = check_nsbl(&m.maximizer, &cut)?;
        Ok((
            m.value.to_f64() > 1.0 + VALUE_TOL && tobl.is_member() && nsbl.verdict == Verdict::NonMember,
            vec![
                value("maximum", &m.value, Some("> 1".into()), "computed"),
                value("maximizer in TOBL", format!("{:?}", tobl.verdict), Some("Member".into()), "analytic"),
                value("maximizer in NSBL", format!("{:?}", nsbl.verdict), Some("NonMember".into()), "analytic"),
            ],
            None,
        ))
    });

    rec.run("inclusion-chain", "Local => NSBL => TOBL => BL on every box of the pipeline", || {
        let mut boxes: Vec<(String, CorrelationBox)> = vec![
            ("uniform".into(), CorrelationBox::uniform(Scenario::uniform(3, 2, 2)?, Mode::Rational)),
            ("local-pr".into(), tensor(&CorrelationBox::uniform(Scenario::uniform(1, 2, 2)?, Mode::Rational), &pr_box())?),
        ];
        if let Ok(rat) = rationalize(&ghz, RATIONALIZE_TOL) {
            boxes.push(("ghz".into(), rat.boxed));
        }
        if let Ok(m) = &tobl_max {
            boxes.push(("gyni-tobl-maximizer".into(), m.maximizer.clone()));
        }
        let mut ok = true;
        let mut values = Vec::new();
        for (name, b) in &boxes {
            let verdicts = [
                check_local(b)?.is_member(),
                check_nsbl(b, &cut)?.is_member(),
                check_tobl(b, &cut)?.is_member(),
                check_bl(b, &cut)?.is_member(),
            ];
            ok &= verdicts.windows(2).all(|w| !w[0] || w[1]);
            let tags = [ClassTag::Local, ClassTag::Nsbl, ClassTag::Tobl, ClassTag::Bl];
            let shown: Vec<String> = tags
                .iter()
                .zip(verdicts)
                .map(|(t, v)| format!("{t}:{}", if v { "in" } else { "out" }))
                .collect();
            values.push(value(name, shown.join(" "), None, "computed"));
        }
        Ok((ok, values, None))
    });

    let passed = rec.claims.iter().all(|c| c.passed);
    RunReport {
        schema: REPORT_SCHEMA.into(),
        command,
        claims: rec.claims,
        passed,
        exit_status: if passed { 0 } else { 4 },
    }
}

fn clone_err(e: &crate::Error) -> crate::Error {
    crate::Error::Certificate(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_claim_holds_on_the_ghz_box() {
        let r = reproduce(None, vec!["reproduce".into()]);
        assert!(r.passed, "failed: {:?}\n{}", r.failed_claims(), serde_json::to_string_pretty(&r).unwrap());
        assert_eq!(r.exit_status, 0);
        assert_eq!(r.claims.len(), 10);
    }
}
