//! Property tests. Cases are driven by seeds drawn from a fixed proptest
//! seed (`BOXLAB_SEED`, default 2024), so every run is reproducible.

use boxlab::bell::{chsh, evaluate_exact, gyni, BellFunctional};
use boxlab::membership::{check_class, ClassTag, MembershipOptions, MembershipResult};
use boxlab::model::{is_no_signalling, marginal, mix, relabel, tensor, validate_box, Relabeling};
use boxlab::quantum::{born_box, ghz_state, BinaryMeasurement, PureState};
use boxlab::random::{random_local_box, random_ns_box, random_protocol, random_relabeling, rational_weights, seeded};
use boxlab::wiring::{run_protocol, Protocol};
use boxlab::{CorrelationBox, Number, Partition, Scenario, Table};
use nalgebra::{Complex, DMatrix, DVector};
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;

fn config(cases: u32) -> Config {
    let seed = std::env::var("BOXLAB_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(2024);
    Config {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..Config::default()
    }
}

fn scenario3() -> Scenario {
    Scenario::uniform(3, 2, 2).unwrap()
}

fn rational_mix(a: &CorrelationBox, b: &CorrelationBox, w: &BigRational) -> CorrelationBox {
    let one = BigRational::from_integer(1.into());
    mix(&[a.clone(), b.clone()], &[Number::Rational(w.clone()), Number::Rational(one - w)]).unwrap()
}

fn verdicts(b: &CorrelationBox, cut: &Partition) -> Vec<MembershipResult> {
    let opts = MembershipOptions::default();
    [ClassTag::Local, ClassTag::Nsbl, ClassTag::Tobl, ClassTag::Bl]
        .into_iter()
        .map(|c| check_class(b, c, Some(cut), &opts).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn relabeling_is_a_group_action(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let b = random_ns_box(&mut rng, 3).unwrap();
        let r = random_relabeling(&mut rng, b.scenario(), true);
        let q = random_relabeling(&mut rng, b.scenario(), true);
        let there = relabel(&b, &r).unwrap();
        prop_assert_eq!(&relabel(&there, &r.inverse()).unwrap(), &b);
        prop_assert_eq!(&relabel(&b, &Relabeling::identity(b.scenario())).unwrap(), &b);
        // (q after r) undone by r⁻¹ after q⁻¹
        let both = relabel(&there, &q).unwrap();
        let back = relabel(&relabel(&both, &q.inverse()).unwrap(), &r.inverse()).unwrap();
        prop_assert_eq!(&back, &b);
        prop_assert!(validate_box(&there).valid);
        prop_assert!(is_no_signalling(&there, 0.0).passed);
    }

    #[test]
    fn marginal_of_tensor_recovers_factors(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let a = random_ns_box(&mut rng, 2).unwrap();
        let s1 = Scenario::uniform(1, 2 + rng.gen_range(0..2), 2).unwrap();
        let c = random_local_box(&mut rng, &s1, 2).unwrap();
        let t = tensor(&a, &c).unwrap();
        prop_assert_eq!(&marginal(&t, &[0, 1]).unwrap(), &a);
        prop_assert_eq!(&marginal(&t, &[2]).unwrap(), &c);
    }

    #[test]
    fn evaluation_is_bilinear(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let (b1, b2) = (random_ns_box(&mut rng, 3).unwrap(), random_ns_box(&mut rng, 3).unwrap());
        let w = rational_weights(&mut rng, 2, 7).remove(0);
        let f = gyni();
        let mixed = evaluate_exact(&f, &rational_mix(&b1, &b2, &w)).unwrap();
        let one = BigRational::from_integer(1.into());
        let split = &w * evaluate_exact(&f, &b1).unwrap() + (one - &w) * evaluate_exact(&f, &b2).unwrap();
        prop_assert_eq!(mixed, split);
        let k = BigRational::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=4).into());
        prop_assert_eq!(evaluate_exact(&f.scaled(&k), &b1).unwrap(), k * evaluate_exact(&f, &b1).unwrap());
    }

    #[test]
    fn evaluation_is_relabeling_covariant(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let b = random_ns_box(&mut rng, 2).unwrap();
        let r = random_relabeling(&mut rng, b.scenario(), true);
        let f = chsh();
        // move the coefficient table with the box
        let coeffs = CorrelationBox::new(f.scenario.clone(), Table::Rational(f.coefficients.clone())).unwrap();
        let moved = relabel(&coeffs, &r).unwrap();
        let g = BellFunctional::new("moved", moved.scenario().clone(), moved.values::<BigRational>().unwrap().to_vec()).unwrap();
        prop_assert_eq!(evaluate_exact(&g, &relabel(&b, &r).unwrap()).unwrap(), evaluate_exact(&f, &b).unwrap());
    }

    #[test]
    fn outcome_independent_protocols_are_linear(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let p = loop {
            let p = random_protocol(&mut rng).unwrap();
            if p.is_outcome_independent() {
                break p;
            }
        };
        let (b1, b2) = (random_ns_box(&mut rng, 3).unwrap(), random_ns_box(&mut rng, 3).unwrap());
        let w = rational_weights(&mut rng, 2, 5).remove(0);
        let lhs = run_protocol(&rational_mix(&b1, &b2, &w), &p).unwrap();
        let rhs = rational_mix(&run_protocol(&b1, &p).unwrap(), &run_protocol(&b2, &p).unwrap(), &w);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn json_round_trips(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let b = random_ns_box(&mut rng, 3).unwrap();
        let text = serde_json::to_string(&b.to_json()).unwrap();
        prop_assert_eq!(&CorrelationBox::from_json_str(&text).unwrap(), &b);
        let float = b.to_float();
        prop_assert_eq!(&CorrelationBox::from_json_str(&serde_json::to_string(&float.to_json()).unwrap()).unwrap(), &float);
        let p = random_protocol(&mut rng).unwrap();
        prop_assert_eq!(&Protocol::from_json_str(&serde_json::to_string(&p.to_json()).unwrap()).unwrap(), &p);
        let r = check_class(&b, ClassTag::Tobl, Some(&Partition::singleton_first()), &MembershipOptions::default()).unwrap();
        let back: MembershipResult = serde_json::from_value(r.to_json()).unwrap();
        prop_assert_eq!(back, r);
    }
}

proptest! {
    #![proptest_config(config(16))]

    #[test]
    fn membership_ignores_local_relabelings(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let b = random_ns_box(&mut rng, 3).unwrap();
        let cut = Partition::singleton_first();
        let r = random_relabeling(&mut rng, &scenario3(), false);
        let before: Vec<_> = verdicts(&b, &cut).into_iter().map(|m| m.verdict).collect();
        let after: Vec<_> = verdicts(&relabel(&b, &r).unwrap(), &cut).into_iter().map(|m| m.verdict).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn membership_ignores_swaps_inside_the_group(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let b = random_ns_box(&mut rng, 3).unwrap();
        let cut = Partition::singleton_first();
        let swap = Relabeling::identity(&scenario3()).with_party_permutation(vec![0, 2, 1]);
        let before: Vec<_> = verdicts(&b, &cut).into_iter().map(|m| m.verdict).collect();
        let after: Vec<_> = verdicts(&relabel(&b, &swap).unwrap(), &cut).into_iter().map(|m| m.verdict).collect();
        prop_assert_eq!(before, after);
    }
}

fn observable(theta: f64) -> DMatrix<Complex<f64>> {
    let (c, s) = (Complex::new(theta.cos(), 0.0), Complex::new(theta.sin(), 0.0));
    DMatrix::from_row_slice(2, 2, &[c, s, s, -c])
}

/// `Π_a = (I + (-1)^a O) / 2`, outcome 0 for eigenvalue +1.
fn projector(theta: f64, a: usize) -> DMatrix<Complex<f64>> {
    let sign = if a == 0 { 1.0 } else { -1.0 };
    (DMatrix::identity(2, 2) + observable(theta) * Complex::new(sign, 0.0)) * Complex::new(0.5, 0.0)
}

/// `⟨ψ| ⊗_p Π^{x_p}_{a_p} |ψ⟩` with explicit Kronecker products.
fn born_oracle(psi: &DVector<Complex<f64>>, angles: &[Vec<f64>], x: &[usize], a: &[usize]) -> f64 {
    let mut op = DMatrix::from_element(1, 1, Complex::new(1.0, 0.0));
    for p in 0..angles.len() {
        op = op.kronecker(&projector(angles[p][x[p]], a[p]));
    }
    (psi.adjoint() * op * psi)[(0, 0)].re
}

fn random_state(rng: &mut impl Rng, n: usize) -> Vec<Complex<f64>> {
    let v: Vec<Complex<f64>> = (0..1 << n).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn born_box_matches_the_matrix_oracle(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = rng.gen_range(1..=3);
        let amps = random_state(&mut rng, n);
        let angles: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(-3.2..3.2)).collect())
            .collect();
        let settings: Vec<Vec<BinaryMeasurement>> =
            angles.iter().map(|v| v.iter().map(|&t| BinaryMeasurement::from_angle(t)).collect()).collect();
        let b = born_box(&PureState::new(amps.clone()).unwrap(), &settings).unwrap();
        prop_assert!(validate_box(&b).valid);
        prop_assert!(is_no_signalling(&b, 1e-12).passed);
        let psi = DVector::from_vec(amps);
        let s = b.scenario().clone();
        for xi in 0..s.input_count() {
            let x = s.input_tuple(xi);
            for ai in 0..s.output_count() {
                let a = s.output_tuple(ai);
                let want = born_oracle(&psi, &angles, &x, &a);
                prop_assert!((b.prob_f64(&x, &a) - want).abs() < 1e-12, "x {:?} a {:?}", x, a);
            }
        }
    }

    #[test]
    fn born_box_commutes_with_party_permutations(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let state = if rng.gen_bool(0.5) { ghz_state(3).unwrap() } else { PureState::new(random_state(&mut rng, 3)).unwrap() };
        let settings: Vec<Vec<BinaryMeasurement>> =
            (0..3).map(|_| (0..2).map(|_| BinaryMeasurement::from_angle(rng.gen_range(-3.2..3.2))).collect()).collect();
        let perm = boxlab::random::random_permutation(&mut rng, 3);
        let mut moved = settings.clone();
        for q in 0..3 {
            moved[perm[q]] = settings[q].clone();
        }
        let direct = born_box(&state.permute_qubits(&perm).unwrap(), &moved).unwrap();
        let b = born_box(&state, &settings).unwrap();
        let relabeled = relabel(&b, &Relabeling::identity(b.scenario()).with_party_permutation(perm)).unwrap();
        prop_assert!(direct.max_abs_diff(&relabeled).unwrap() < 1e-12);
    }

    #[test]
    fn born_box_factorizes_on_product_states(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let factors: Vec<(Complex<f64>, Complex<f64>)> = (0..3)
            .map(|_| {
                let v = random_state(&mut rng, 1);
                (v[0], v[1])
            })
            .collect();
        let settings: Vec<Vec<BinaryMeasurement>> =
            (0..3).map(|_| (0..2).map(|_| BinaryMeasurement::from_angle(rng.gen_range(-3.2..3.2))).collect()).collect();
        let joint = born_box(&PureState::product(&factors).unwrap(), &settings).unwrap();
        let mut product: Option<CorrelationBox> = None;
        for (f, m) in factors.iter().zip(&settings) {
            let single = born_box(&PureState::new(vec![f.0, f.1]).unwrap(), std::slice::from_ref(m)).unwrap();
            product = Some(match product {
                None => single,
                Some(p) => tensor(&p, &single).unwrap(),
            });
        }
        prop_assert!(joint.max_abs_diff(&product.unwrap()).unwrap() < 1e-12);
    }
}
