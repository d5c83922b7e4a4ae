use std::f64::consts::PI;

use hardytime::grid::*;
use hardytime::linalg;
use hardytime::quasiaffine::*;
use hardytime::timeobs::*;
use hardytime::{Error, Execution, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn observables(spec: GridSpec, d: Direction) -> (OperatorMatrix, TimeObservable, TimeObservable) {
    let omega = HardyModel::identity(spec).omega(d).unwrap();
    let phys = build_time_observable(&omega, Side::Physical, d).unwrap();
    let hat = build_time_observable(&omega, Side::Hardy, d).unwrap();
    (omega, phys, hat)
}

#[test]
fn inverse_spectrum_lies_in_unit_interval() {
    for d in [Direction::Forward, Direction::Backward] {
        let (_, phys, hat) = observables(GridSpec::new(256, 25.0).unwrap(), d);
        for obs in [&phys, &hat] {
            assert!(obs.eigvals().iter().all(|&w| (-SPECTRUM_SLACK..=1.0 + SPECTRUM_SLACK).contains(&w)));
            assert!(obs.eigvals().windows(2).all(|w| w[0] >= w[1]));
            assert!(obs.times().iter().all(|&t| t >= 1.0));
        }
    }
}

#[test]
fn forward_and_backward_inverses_sum_to_identity() {
    let spec = GridSpec::new(128, 12.0).unwrap();
    let (_, f, _) = observables(spec, Direction::Forward);
    let (_, b, _) = observables(spec, Direction::Backward);
    let sum = f.inverse().mat() + b.inverse().mat();
    let id = linalg::identity(spec.half_len());
    assert!(linalg::op_norm((&sum - &id).as_ref()) < 1e-12);
}

#[test]
fn nonzero_spectra_coincide() {
    let (_, phys, hat) = observables(GridSpec::new(256, 25.0).unwrap(), Direction::Forward);
    assert!(nonzero_spectrum_mismatch(&phys, &hat, LAMBDA_FLOOR) <= 1e-8);
    assert_eq!(hat.dim(), 256);
    assert_eq!(phys.dim(), 128);
}

#[test]
fn spectral_projectors_transport_through_omega() {
    let (omega, phys, hat) = observables(GridSpec::new(512, 50.0).unwrap(), Direction::Forward);
    for e in [SpectralInterval::new(1.0, 2.0).unwrap(), SpectralInterval::new(2.0, 10.0).unwrap(), SpectralInterval::full()] {
        let r = transport_residual(&phys, &hat, &omega, &e).unwrap();
        assert!(r <= 1e-8, "[{}, {}): {r}", e.lo(), e.hi());
    }
}

#[test]
fn resolvent_identity_away_from_the_spectrum() {
    let omega = HardyModel::identity(GridSpec::new(128, 12.0).unwrap()).omega(Direction::Forward).unwrap();
    for z in [C64::new(2.0, 0.0), C64::new(1.0, 1.0), C64::new(-0.5, 0.3), C64::new(0.5, -2.0)] {
        assert!(resolvent_residual(&omega, z).unwrap() <= 1e-9);
    }
    assert!(resolvent_residual(&omega, C64::new(0.5, 0.05)).is_err());
}

#[test]
fn time_coordinate_conventions() {
    let (_, phys, _) = observables(GridSpec::new(128, 12.0).unwrap(), Direction::Forward);
    for j in 0..phys.dim() {
        let w = phys.eigvals()[j];
        let t = phys.time(j);
        if w <= LAMBDA_FLOOR {
            assert!(t.is_infinite());
        } else if (1.0 / w - 1.0).abs() <= TIME_SNAP {
            assert_eq!(t, 1.0);
        } else {
            assert!((t * w - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn intervals_reject_bad_bounds() {
    assert!(SpectralInterval::new(0.5, 2.0).is_err());
    assert!(SpectralInterval::new(2.0, 2.0).is_err());
    assert!(SpectralInterval::closed(2.0, 2.0).is_ok());
    let e = SpectralInterval::new(1.0, f64::INFINITY).unwrap();
    assert!(e.contains(f64::INFINITY));
    assert!(!SpectralInterval::new(1.0, 3.0).unwrap().contains(3.0));
    assert!(SpectralInterval::closed(1.0, 3.0).unwrap().contains(3.0));
}

#[test]
fn inverse_with_spectrum_above_one_is_rejected() {
    let m = linalg::identity(4);
    let m = faer::Mat::from_fn(4, 4, |i, j| m[(i, j)] * 1.5);
    let op = OperatorMatrix::new(Space::Abstract(4), Space::Abstract(4), m).unwrap();
    assert!(matches!(TimeObservable::from_inverse(op, Side::Physical, Direction::Forward), Err(Error::SpectrumOutOfRange { .. })));
}

#[test]
fn resolvent_kernel_energy_split() {
    let spec = GridSpec::new(4096, 200.0).unwrap();
    let rows = xmu_program(&HardyModel::identity(spec), &[C64::new(0.0, -1.0), C64::new(0.0, -2.0)], Execution::Sequential).unwrap();
    for (row, im) in rows.iter().zip([1.0, 2.0]) {
        // ‖x_μ‖² = π/|Im μ|, and half of it sits on σ ≥ 0 when Re μ = 0
        assert!((row.norm_x_sq * im / PI - 1.0).abs() < 0.02);
        assert!((row.ratio - 0.5).abs() < 0.02, "{}", row.ratio);
    }
    assert!(xmu_program(&HardyModel::identity(spec), &[C64::new(0.0, 1.0)], Execution::Sequential).is_err());
}

#[test]
fn sweeps_agree_across_execution_modes() {
    let spec = GridSpec::new(512, 50.0).unwrap();
    let model = HardyModel::identity(spec);
    let mus: Vec<C64> = (0..8).map(|k| C64::new(k as f64 - 4.0, -1.0)).collect();
    let a = xmu_program(&model, &mus, Execution::Parallel).unwrap();
    let b = xmu_program(&model, &mus, Execution::Sequential).unwrap();
    assert_eq!(a, b);
}

#[test]
fn spectral_flow_conserves_mass() {
    let spec = GridSpec::new(256, 25.0).unwrap();
    let model = HardyModel::identity(spec);
    let obs = build_time_observable(&model.omega(Direction::Forward).unwrap(), Side::Physical, Direction::Forward).unwrap();
    let g = HalfLineFunction::sample(spec, gaussian(5.0, 2.0, 0.0));
    let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
    let curve = spectral_flow_experiment(&model, &obs, &g, 4.0, &times, 0.3, Execution::default()).unwrap();
    assert!(curve.pythagoras_defect() < 1e-10);
    assert!((curve.mass_low[0] - 1.0).abs() < 1e-12);
    assert!(spectral_flow_experiment(&model, &obs, &g, 1.0, &times, 0.3, Execution::default()).is_err());
    assert!(spectral_flow_experiment(&model, &obs, &g, 4.0, &[-1.0], 0.3, Execution::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_projectors_are_additive_and_idempotent(a in 1.0f64..5.0, w1 in 0.1f64..5.0, w2 in 0.1f64..20.0, seed in any::<u64>()) {
        let spec = GridSpec::new(64, 6.0).unwrap();
        let (_, phys, _) = observables(spec, Direction::Forward);
        let b = a + w1;
        let c = b + w2;
        let e1 = SpectralInterval::new(a, b).unwrap();
        let e2 = SpectralInterval::new(b, c).unwrap();
        let e12 = SpectralInterval::new(a, c).unwrap();
        let p1 = phys.spectral_projector(&e1);
        let p2 = phys.spectral_projector(&e2);
        let p12 = phys.spectral_projector(&e12);
        let sum = p1.mat() + p2.mat();
        prop_assert!(linalg::op_norm((&sum - p12.mat()).as_ref()) <= 1e-12);
        prop_assert!(linalg::projector_deviation(p1.mat()) <= 1e-12);
        prop_assert!(linalg::op_norm((p1.mat() * p2.mat()).as_ref()) <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = linalg::random_complex_vec(&mut rng, 32);
        let direct = phys.project(&e12, &x).unwrap();
        let dense = linalg::apply(p12.mat(), &x);
        let err = direct.iter().zip(&dense).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12);
    }
}
