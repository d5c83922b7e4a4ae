use hardytime::grid::*;
use hardytime::linalg;
use hardytime::quasiaffine::*;
use hardytime::{Error, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_half(spec: GridSpec, seed: u64) -> HalfLineFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HalfLineFunction::new(spec, linalg::random_complex_vec(&mut rng, spec.half_len())).unwrap()
}

fn random_model(spec: GridSpec, seed: u64) -> HardyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::random_unitary(&mut rng, spec.half_len());
    HardyModel::new(spec, build_energy_rep(&spec, Some(u)).unwrap()).unwrap()
}

#[test]
fn theta_norms_at_reference_resolution() {
    let spec = GridSpec::new(1024, 100.0).unwrap();
    let theta = build_theta(&spec);
    let s = theta.op_norm();
    assert!(s > 0.99 && s <= 1.0 + 1e-10, "{s}");
    let coarse = build_theta(&GridSpec::new(256, 25.0).unwrap()).op_norm();
    assert!(s >= coarse - 1e-12);
    for m in [build_theta_star(&spec), build_theta_bar(&spec), build_theta_bar_star(&spec)] {
        assert!(m.op_norm() <= 1.0 + 1e-10);
    }
}

#[test]
fn omega_is_contractive_on_random_states() {
    let spec = GridSpec::new(128, 10.0).unwrap();
    let model = random_model(spec, 2);
    for seed in 0..100 {
        let h = random_half(spec, seed);
        for d in [Direction::Forward, Direction::Backward] {
            assert!(model.apply_omega(&h, d).unwrap().norm() <= h.norm() * (1.0 + 1e-12));
        }
    }
}

#[test]
fn omega_rank_report() {
    let spec = GridSpec::new(512, 50.0).unwrap();
    let omega = HardyModel::identity(spec).omega(Direction::Forward).unwrap();
    let r = injectivity_report(&omega, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(r.expected_rank, 256);
    assert!(r.sigma_max <= 1.0 + 1e-10 && r.sigma_min >= 0.0);
    assert!(r.numerical_rank <= r.expected_rank);
    // the smallest singular values fall below any fixed relative cut at this resolution
    match certify_injective(&omega, DEFAULT_RANK_TOL) {
        Ok(_) => assert!(r.is_injective()),
        Err(Error::RankDeficient { rank, expected, .. }) => assert!(rank < expected),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn matrix_omega_matches_matrix_free_route() {
    let spec = GridSpec::new(64, 6.0).unwrap();
    let model = random_model(spec, 8);
    let h = random_half(spec, 9);
    for d in [Direction::Forward, Direction::Backward] {
        let dense = model.omega(d).unwrap().apply(h.samples()).unwrap();
        let fast = model.apply_omega(&h, d).unwrap();
        let err = dense.iter().zip(fast.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }
}

#[test]
fn forward_intertwining_beats_the_wrong_side() {
    let spec = GridSpec::new(2048, 100.0).unwrap();
    let model = HardyModel::identity(spec);
    let g = HalfLineFunction::sample(spec, gaussian(20.0, 3.0, 0.0));
    let dt = spec.freq_step();
    for k in [1usize, 7, 40, 79] {
        let (res, wrong) = model.intertwining_residual(&g, k as f64 * dt, Direction::Forward).unwrap();
        assert!(res <= 1e-6, "t = {}: {res}", k as f64 * dt);
        assert!(wrong >= 1e3 * res);
    }
    let (res, wrong) = model.intertwining_residual(&g, -10.0 * dt, Direction::Backward).unwrap();
    assert!(res <= 1e-6 && wrong >= 1e3 * res);
    assert!(model.intertwining_residual(&g, -1.0, Direction::Forward).is_err());
}

#[test]
fn intertwining_residual_equals_leakage_term() {
    // the residual is ‖P₊u(t)P₋Ig‖ computed independently
    let spec = GridSpec::new(256, 20.0).unwrap();
    let model = HardyModel::identity(spec);
    let g = random_half(spec, 4);
    let t = 3.0 * spec.freq_step();
    let (res, _) = model.intertwining_residual(&g, t, Direction::Forward).unwrap();
    let minus = hardytime::hardy::riesz_project(&embed_i(&g), hardytime::hardy::Sign::Minus);
    let leak = hardytime::hardy::toeplitz(&minus, t, hardytime::hardy::Sign::Plus);
    assert!((res - leak.norm() / g.norm()).abs() < 1e-12);
}

#[test]
fn energy_representation_must_be_unitary() {
    let spec = GridSpec::new(16, 2.0).unwrap();
    let bad = faer::Mat::from_fn(8, 8, |i, j| if i == j { C64::new(0.9, 0.0) } else { C64::new(0.0, 0.0) });
    assert!(matches!(build_energy_rep(&spec, Some(bad)), Err(Error::NotUnitary { .. })));
    let wrong = linalg::identity(4);
    assert!(matches!(build_energy_rep(&spec, Some(wrong)), Err(Error::Dimension { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn forward_and_backward_split_the_norm(seed in any::<u64>(), useed in any::<u64>()) {
        let spec = GridSpec::new(64, 5.0).unwrap();
        let model = random_model(spec, useed);
        let h = random_half(spec, seed);
        let f = model.apply_omega(&h, Direction::Forward).unwrap().norm_sq();
        let b = model.apply_omega(&h, Direction::Backward).unwrap().norm_sq();
        prop_assert!((f + b - h.norm_sq()).abs() <= 1e-12 * h.norm_sq());
    }

    #[test]
    fn omega_adjoint_pairing(seed in any::<u64>()) {
        let spec = GridSpec::new(64, 5.0).unwrap();
        let model = random_model(spec, seed ^ 0x55);
        let h = random_half(spec, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let f = GridFunction::new(spec, linalg::random_complex_vec(&mut rng, 64)).unwrap();
        for d in [Direction::Forward, Direction::Backward] {
            let lhs = model.apply_omega(&h, d).unwrap().inner(&f).unwrap();
            let rhs = h.inner(&model.apply_omega_adjoint(&f, d).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * h.norm() * f.norm());
        }
    }

    #[test]
    fn theta_adjoint_pairs(seed in any::<u64>()) {
        let spec = GridSpec::new(32, 4.0).unwrap();
        let h = random_half(spec, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(3));
        let f = linalg::random_complex_vec(&mut rng, 32);
        let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        for (t, ts) in [(build_theta(&spec), build_theta_star(&spec)), (build_theta_bar(&spec), build_theta_bar_star(&spec))] {
            let lhs = dot(&t.apply(&f).unwrap(), h.samples());
            let rhs = dot(&f, &ts.apply(h.samples()).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-12 * h.norm() * 32.0);
        }
    }

    #[test]
    fn evolution_is_unitary(seed in any::<u64>(), t in -20.0f64..20.0) {
        let spec = GridSpec::new(64, 5.0).unwrap();
        let model = random_model(spec, seed);
        let h = random_half(spec, seed.wrapping_add(7));
        let g = model.evolve(&h, t).unwrap();
        prop_assert!((g.norm() - h.norm()).abs() <= 1e-12 * h.norm());
        let back = model.evolve(&g, -t).unwrap();
        prop_assert!(back.sub(&h).unwrap().norm() <= 1e-12 * h.norm());
    }
}
