use hypershift::operators::{preset, Operator, PhiSpec, PresetParams, WeightRule};
use hypershift::spaces::{axpy, norm, IndexDomain, SpaceSpec, SparseVector, Vector};
use num_complex::Complex64;
use proptest::prelude::*;

fn operators() -> impl Strategy<Value = Operator> {
    prop_oneof![
        Just(preset("cor22c", &PresetParams::default()).unwrap()),
        Just(preset("geometric", &PresetParams::default()).unwrap()),
        Just(preset("tu", &PresetParams::default()).unwrap()),
        Just(preset("prop59", &PresetParams::default()).unwrap()),
        (1.1..3.0f64, 0.3..1.5f64).prop_map(|(eta, np)| preset(
            "eta-bilateral",
            &PresetParams { eta: Some(eta), nonpositive: Some(np), ..Default::default() }
        )
        .unwrap()),
        (1u64..4, 0.5..2.0f64).prop_map(|(k, c)| Operator::pseudo_shift(
            PhiSpec::affine(k),
            WeightRule::Table { values: vec![c, 1.0 / c, 2.0], tail: Box::new(WeightRule::constant(c)) },
            SpaceSpec::lp_n(2.0)
        )
        .unwrap()),
    ]
}

fn vector_for(op: &Operator) -> impl Strategy<Value = SparseVector> {
    let domain = op.domain();
    let lo = if domain == IndexDomain::Natural { 1 } else { -8 };
    prop::collection::vec((lo..=12i64, -2.0..2.0f64, -2.0..2.0f64), 0..6)
        .prop_map(move |t| SparseVector::from_triples(domain, &t).unwrap())
}

fn rel_close(a: &SparseVector, b: &SparseVector, space: &SpaceSpec) -> bool {
    let d = axpy(Complex64::new(-1.0, 0.0), a, b).unwrap();
    let scale = norm(a, space).unwrap().max(norm(b, space).unwrap()).max(1e-300);
    norm(&d, space).unwrap() <= 1e-12 * scale
}

proptest! {
    #[test]
    fn right_inverse(pair in operators().prop_flat_map(|op| { let v = vector_for(&op); (Just(op), v) })) {
        let (op, v) = pair;
        let ts = op.apply_t(&op.apply_s(&v).unwrap()).unwrap();
        prop_assert!(rel_close(ts.sequence(), &v, &op.space()));
    }

    #[test]
    fn powers_compose(pair in operators().prop_flat_map(|op| { let v = vector_for(&op); (Just(op), v) }),
                      a in 0u64..=50, b in 0u64..=50) {
        let (op, v) = pair;
        let direct = op.apply_t_power(&v, a + b).unwrap();
        let inner = op.apply_t_power(&v, b).unwrap();
        let split = op.apply_t_power(&inner, a).unwrap();
        prop_assert!(rel_close(direct.sequence(), split.sequence(), &op.space()));
    }

    #[test]
    fn linear_on_supports(pair in operators().prop_flat_map(|op| { let u = vector_for(&op); let v = vector_for(&op); (Just(op), u, v) }),
                          a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (op, u, v) = pair;
        let (a, b) = (Complex64::new(a, 0.5), Complex64::new(b, -0.25));
        let combo = axpy(a, &u, &v.scale(b)).unwrap();
        let lhs = op.apply_t(&combo).unwrap();
        let tu = op.apply_t(&u).unwrap();
        let tv = op.apply_t(&v).unwrap();
        let rhs = axpy(a, tu.sequence(), &tv.sequence().scale(b)).unwrap();
        prop_assert!(rel_close(lhs.sequence(), &rhs, &op.space()));
        let sup = |x: &SparseVector| x.iter().map(|(i, _)| i).collect::<std::collections::BTreeSet<_>>();
        prop_assert!(sup(lhs.sequence()).is_subset(&sup(tu.sequence()).union(&sup(tv.sequence())).copied().collect()));
    }

    #[test]
    fn weight_bound_controls_the_norm(pair in operators().prop_flat_map(|op| { let v = vector_for(&op); (Just(op), v) })) {
        let (op, v) = pair;
        let space = op.space();
        let tv = norm(&op.apply_t(&v).unwrap(), &space).unwrap();
        prop_assert!(tv <= op.weight_bound() * norm(&v, &space).unwrap() * (1.0 + 1e-12));
    }
}

/// `(B_v x)_n = v_n x_(n+1)` coded directly.
fn backward_shift(v: impl Fn(i64) -> f64, x: &SparseVector) -> SparseVector {
    let entries = x.iter().filter(|&(i, _)| i >= 2).map(|(i, z)| (i - 1, z * v(i - 1)));
    SparseVector::from_entries(IndexDomain::Natural, entries).unwrap()
}

#[test]
fn pseudo_shift_presets_recover_backward_shifts() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let cor = preset("cor22c", &PresetParams { p: Some(3.0), ..Default::default() }).unwrap();
    let geo = preset("geometric", &PresetParams { v: Some(1.5), ..Default::default() }).unwrap();
    let space = SpaceSpec::lp_n(3.0);
    for _ in 0..1000 {
        let t: Vec<(i64, f64, f64)> = (0..rng.gen_range(1..6))
            .map(|_| (rng.gen_range(1..30), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let x = SparseVector::from_triples(IndexDomain::Natural, &t).unwrap();
        let want = backward_shift(|n| ((n as f64 + 1.0) / n as f64).powf(1.0 / 3.0), &x);
        let got: Vector = cor.apply_t(&x).unwrap();
        assert!(rel_close(got.sequence(), &want, &space));
        let want = backward_shift(|_| 1.5, &x);
        assert!(rel_close(geo.apply_t(&x).unwrap().sequence(), &want, &space));
    }
}
