use super::*;
use crate::model::{mix, tensor};
use crate::quantum::{paper_ghz_box, rationalize, RATIONALIZE_TOL};
use crate::scalar::ratio;

fn pr_box() -> CorrelationBox {
    let s = Scenario::uniform(2, 2, 2).unwrap();
    CorrelationBox::from_fn(s, |x, a| {
        if (a[0] ^ a[1]) == (x[0] & x[1]) {
            ratio(1, 2)
        } else {
            BigRational::zero()
        }
    })
}

/// `a ⊕ b ⊕ c = xy ⊕ yz ⊕ xz`, uniformly over consistent outputs.
fn svetlichny_box() -> CorrelationBox {
    let s = Scenario::uniform(3, 2, 2).unwrap();
    CorrelationBox::from_fn(s, |x, a| {
        let lhs = a[0] ^ a[1] ^ a[2];
        let rhs = (x[0] & x[1]) ^ (x[1] & x[2]) ^ (x[0] & x[2]);
        if lhs == rhs {
            ratio(1, 4)
        } else {
            BigRational::zero()
        }
    })
}

fn det1(out: [usize; 2]) -> CorrelationBox {
    CorrelationBox::deterministic(Scenario::uniform(1, 2, 2).unwrap(), &[out.to_vec()]).unwrap()
}

fn part() -> Partition {
    Partition::singleton_first()
}

#[test]
fn uniform_box_is_local_with_exact_certificate() {
    let u = CorrelationBox::uniform(Scenario::uniform(2, 2, 2).unwrap(), Mode::Rational);
    let r = check_local(&u).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    let d = r.decomposition().unwrap();
    assert_eq!(d.residual, 0.0);
    assert_eq!(total_weight(d), Number::rational(1, 1));
    for rec in d.reconstruct().unwrap() {
        assert_eq!(rec, u);
    }
}

#[test]
fn pr_box_is_not_local() {
    let r = check_local(&pr_box()).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
    let h = r.hyperplane().unwrap();
    assert!(h.evaluate(&pr_box()).unwrap().to_f64() < 0.0);
    assert!(r.margin > 0.0);
    // nonnegative on all 16 deterministic vertices
    assert!(local_vertex_minimum(pr_box().scenario(), h).unwrap() >= 0.0);
}

#[test]
fn float_pr_box_reports_margin_only() {
    let r = check_local(&pr_box().to_float()).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
    assert!(r.certificate.is_none());
    assert!(r.margin > 1e-9);
}

#[test]
fn ghz_box_is_not_local() {
    assert_eq!(check_local(&paper_ghz_box()).unwrap().verdict, Verdict::NonMember);
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    assert_eq!(check_local(&exact).unwrap().verdict, Verdict::NonMember);
}

#[test]
fn ghz_box_is_bilocal() {
    let r = check_bl(&paper_ghz_box(), &part()).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert!(r.margin <= 1e-9);
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    let r = check_bl(&exact, &part()).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert_eq!(r.margin, 0.0);
}

#[test]
fn ghz_box_is_neither_nsbl_nor_tobl() {
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    for class in [ClassTag::Nsbl, ClassTag::Tobl] {
        let r = check_bilocal(&exact, &part(), class, &MembershipOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::NonMember, "{class}");
        assert!(r.hyperplane().unwrap().value_on_box.to_f64() < 0.0);
    }
}

#[test]
fn svetlichny_box_is_not_bilocal() {
    let r = check_bl(&svetlichny_box(), &part()).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
    let h = r.hyperplane().unwrap();
    assert!(bl_minimum::<BigRational>(svetlichny_box().scenario(), 0, &[1, 2], h).unwrap() >= BigRational::zero());
}

#[test]
fn local_box_is_in_every_class() {
    let b = tensor(&det1([0, 1]), &tensor(&det1([1, 1]), &det1([0, 0])).unwrap()).unwrap();
    assert_eq!(check_local(&b).unwrap().verdict, Verdict::Member);
    for class in [ClassTag::Bl, ClassTag::Nsbl, ClassTag::Tobl] {
        let r = check_bilocal(&b, &part(), class, &MembershipOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Member, "{class}");
    }
    assert!(check_tobl_general(&b, &part()).unwrap().is_member());
}

#[test]
fn pr_box_on_the_group_is_nsbl() {
    let b = tensor(&det1([1, 0]), &pr_box()).unwrap();
    assert_eq!(check_local(&b).unwrap().verdict, Verdict::NonMember);
    let r = check_nsbl(&b, &part()).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert!(check_tobl(&b, &part()).unwrap().is_member());
    let audit = classify_bl_certificate(&check_bl(&b, &part()).unwrap().decomposition().unwrap().clone()).unwrap();
    assert_eq!(audit.requires_two_way_terms, Some(false));
}

#[test]
fn pr_box_across_the_cut_is_not_bilocal() {
    // PR between parties 1 and 2, party 3 deterministic
    let b = tensor(&pr_box(), &det1([0, 1])).unwrap();
    assert_eq!(check_bl(&b, &part()).unwrap().verdict, Verdict::NonMember);
    let other = Partition::new(vec![2], vec![0, 1]).unwrap();
    assert!(check_nsbl(&b, &other).unwrap().is_member());
}

#[test]
fn independent_weights_relax_shared_ones() {
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    let opts = MembershipOptions {
        independent_weights: true,
        ..Default::default()
    };
    let r = check_bilocal(&exact, &part(), ClassTag::Tobl, &opts).unwrap();
    if r.is_member() {
        let Some(Certificate::PerDirection { decompositions }) = &r.certificate else {
            panic!("expected per-direction certificate");
        };
        assert_eq!(decompositions.len(), 2);
        assert!(decompositions.iter().all(|d| d.residual == 0.0));
    }
}

#[test]
fn grouped_tobl_matches_tobl_on_ghz_box() {
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    let r = check_tobl_general(&exact, &part()).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
    assert!(r.hyperplane().unwrap().value_on_box.to_f64() < 0.0);
    let b = tensor(&det1([1, 0]), &pr_box()).unwrap();
    let r = check_tobl_general(&b, &part()).unwrap();
    assert_eq!(r.verdict, Verdict::Member);
    assert_eq!(r.margin, 0.0);
}

#[test]
fn grouped_bl_matches_bl() {
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    assert!(check_bl_general(&exact, &part()).unwrap().is_member());
    assert_eq!(check_bl_general(&svetlichny_box(), &part()).unwrap().verdict, Verdict::NonMember);
}

#[test]
fn group_of_two_on_both_sides() {
    let b = tensor(&pr_box(), &pr_box()).unwrap().to_float();
    let p = Partition::new(vec![0, 1], vec![2, 3]).unwrap();
    let r = check_tobl_general(&b, &p).unwrap();
    assert_eq!(r.verdict, Verdict::Member, "{:?}", r.note);
    let crossed = Partition::new(vec![0, 2], vec![1, 3]).unwrap();
    let r = check_tobl_general(&b, &crossed).unwrap();
    assert_eq!(r.verdict, Verdict::NonMember);
}

#[test]
fn oversized_groups_are_undecided() {
    let s = Scenario::uniform(5, 2, 2).unwrap();
    let u = CorrelationBox::uniform(s, Mode::Float);
    let p = Partition::new(vec![0], vec![1, 2, 3, 4]).unwrap();
    let r = check_tobl_general(&u, &p).unwrap();
    assert_eq!(r.verdict, Verdict::Undecided);
    assert!(r.note.unwrap().starts_with("scale"));
}

#[test]
fn classify_nsbl_certificate_has_no_signalling_terms() {
    let b = tensor(&det1([1, 0]), &pr_box()).unwrap();
    let mut d = check_nsbl(&b, &part()).unwrap().decomposition().unwrap().clone();
    d.class = ClassTag::Bl;
    let audit = classify_bl_certificate(&d).unwrap();
    assert!(audit.terms.iter().all(|t| t.direction == Direction::None));
    assert!(!audit.two_way_present);
}

#[test]
fn classify_one_way_table() {
    // party 3 outputs party 2's input: signalling from 2 to 3 only
    let g = Scenario::uniform(2, 2, 2).unwrap();
    let t = CorrelationBox::from_fn(g, |x, a| {
        if a[0] == 0 && a[1] == x[0] {
            BigRational::from_integer(1.into())
        } else {
            BigRational::zero()
        }
    });
    let dec = Decomposition {
        class: ClassTag::Bl,
        scenario: Scenario::uniform(3, 2, 2).unwrap(),
        partition: Some(part()),
        terms: vec![Term {
            weight: Number::rational(1, 1),
            strategies: vec![DeterministicStrategy { party: 0, outputs: vec![0, 0] }],
            groups: vec![GroupTables {
                parties: vec![1, 2],
                orders: vec![Vec::new()],
                tables: vec![t.table().clone()],
            }],
        }],
        residual: 0.0,
    };
    let audit = classify_bl_certificate(&dec).unwrap();
    assert_eq!(audit.terms[0].direction, Direction::Forward);
    // the box itself signals from party 2 to party 3, so no time order fits both ways
    assert_eq!(audit.requires_two_way_terms, Some(true));
    assert!(classify_bl_certificate(&Decomposition { class: ClassTag::Nsbl, ..dec }).is_err());
}

#[test]
fn ghz_certificate_needs_both_directions() {
    let r = check_bl(&paper_ghz_box(), &part()).unwrap();
    let audit = classify_bl_certificate(r.decomposition().unwrap()).unwrap();
    assert_eq!(audit.requires_two_way_terms, Some(true));
}

#[test]
fn ghz_box_has_a_one_way_bilocal_model() {
    // Every term may signal from 3 to 2 only; what fails is the second time order.
    let exact = rationalize(&paper_ghz_box(), RATIONALIZE_TOL).unwrap().boxed;
    let p = exact.values::<BigRational>().unwrap();
    for (order, member) in [(vec![1, 0], true), (vec![0, 1], false)] {
        let prog = program::bilocal_program(
            exact.scenario(),
            0,
            &[1, 2],
            vec![TableRule::Sequential(order)],
            true,
            Target::Fixed(p),
            DEFAULT_VERTEX_CAP,
        )
        .unwrap();
        let res = solve_feasibility(&prog.lp, &SolverOptions::default()).unwrap();
        assert_eq!(res.status == LpStatus::Feasible, member);
    }
}

#[test]
fn mixtures_keep_membership_exact() {
    let u = CorrelationBox::uniform(Scenario::uniform(3, 2, 2).unwrap(), Mode::Rational);
    let b = mix(&[svetlichny_box(), u], &[Number::rational(1, 4), Number::rational(3, 4)]).unwrap();
    let r = check_bl(&b, &part()).unwrap();
    assert!(r.is_member());
    assert_eq!(r.margin, 0.0);
}

#[test]
fn certificate_json_round_trips() {
    let r = check_bl(&svetlichny_box(), &part()).unwrap();
    let v = r.to_json();
    assert_eq!(v["schema"], CERT_SCHEMA);
    let back: MembershipResult = serde_json::from_value(v).unwrap();
    assert_eq!(back, r);
    let r = check_local(&CorrelationBox::uniform(Scenario::uniform(2, 2, 2).unwrap(), Mode::Rational)).unwrap();
    let back: MembershipResult = serde_json::from_value(r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn invalid_boxes_are_refused() {
    let s = Scenario::uniform(2, 2, 2).unwrap();
    let b = CorrelationBox::new(s, Table::Float(vec![0.5; 16])).unwrap();
    assert!(matches!(check_local(&b), Err(Error::InvalidBox(_))));
}

#[test]
fn class_tags_parse() {
    for t in ["local", "bl", "nsbl", "tobl", "tobl-general", "bl-general"] {
        assert_eq!(t.parse::<ClassTag>().unwrap().to_string(), t);
    }
    assert!("svetlichny".parse::<ClassTag>().is_err());
}
