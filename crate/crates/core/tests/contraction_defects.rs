use faer::Mat;
use hardytime::contraction::*;
use hardytime::grid::GridSpec;
use hardytime::linalg;
use hardytime::quasiaffine::{Direction, HardyModel};
use hardytime::{Error, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_contraction(seed: u64, rows: usize, cols: usize) -> Mat<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..rows.min(cols)).map(|_| rng.random_range(0.0..1.0)).collect();
    linalg::contraction_with_singular_values(&mut rng, rows, cols, &s)
}

fn op_dist(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    linalg::op_norm((a - b).as_ref())
}

#[test]
fn characteristic_function_at_zero() {
    let c = random_contraction(1, 5, 5);
    let d = defect(c.as_ref(), RankTol::default()).unwrap();
    let ds = defect_of_adjoint(c.as_ref(), RankTol::default()).unwrap();
    let theta = characteristic_full(c.as_ref(), &d, &ds, C64::new(0.0, 0.0)).unwrap();
    let minus_c = Mat::from_fn(5, 5, |i, j| -c[(i, j)]);
    assert!(op_dist(&theta, &minus_c) < 1e-15);
}

#[test]
fn characteristic_function_is_contractive_in_the_disk() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let c = random_contraction(3, 6, 6);
    let d = defect(c.as_ref(), RankTol::default()).unwrap();
    let ds = defect_of_adjoint(c.as_ref(), RankTol::default()).unwrap();
    for _ in 0..20 {
        let r = rng.random_range(0.0..MAX_DISK_RADIUS);
        let lambda = C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
        let theta = characteristic_function(c.as_ref(), &d, &ds, lambda).unwrap();
        assert!(linalg::op_norm(theta.as_ref()) <= 1.0 + 1e-8);
    }
    assert!(characteristic_function(c.as_ref(), &d, &ds, C64::new(0.99, 0.0)).is_err());
}

#[test]
fn unitary_has_no_defect_above_an_absolute_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let u = linalg::random_unitary(&mut rng, 4);
    let d = defect(u.as_ref(), RankTol::Absolute(1e-6)).unwrap();
    assert_eq!(d.rank(), 0);
    assert!(linalg::op_norm(d.defect_op.as_ref()) < 1e-7);
}

#[test]
fn non_contractions_are_rejected() {
    let c = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(1.5, 0.0) } else { C64::new(0.0, 0.0) });
    assert!(matches!(defect(c.as_ref(), RankTol::default()), Err(Error::NotContraction { .. })));
    assert!(matches!(IntertwiningSuite::new(c.as_ref(), 1e-6), Err(Error::NotContraction { .. })));
}

#[test]
fn intertwining_on_a_random_omega() {
    let omega = random_contraction(9, 8, 5);
    let suite = IntertwiningSuite::new(omega.as_ref(), 1e-6).unwrap();
    assert!(suite.defect_angle() <= 1e-6);
    for lambda in [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(-0.3, 0.6), C64::new(0.1, -0.9)] {
        let r = suite.intertwine(lambda).unwrap();
        assert!(r.res_plain <= 1e-10 && r.res_star <= 1e-10, "{r:?}");
        assert!(r.inclusion_plain <= 1e-10 && r.inclusion_star <= 1e-10, "{r:?}");
    }
}

#[test]
fn intertwining_on_the_grid_omega() {
    let omega = HardyModel::identity(GridSpec::new(64, 6.0).unwrap()).omega(Direction::Forward).unwrap();
    let suite = IntertwiningSuite::new(omega.mat(), 1e-6).unwrap();
    assert!(suite.defect_angle() <= 1e-6);
    let r = suite.intertwine(C64::new(0.4, 0.2)).unwrap();
    assert!(r.res_plain <= 1e-7 && r.res_star <= 1e-7, "{r:?}");
}

#[test]
fn resolved_cut_sits_in_a_gap() {
    let eigs = [1.0, 1.0 - 1e-15, 0.9, 0.5, 0.1];
    let cut = resolved_cut(&eigs, 1e-6);
    assert!(cut.delta > cut.floor);
    assert!(cut.delta < 0.1);
    let cluster = [1.0; 4];
    assert!(resolved_cut(&cluster, 1e-6).delta >= resolved_cut(&cluster, 1e-6).floor);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn defect_squares_to_one_minus_gram(seed in any::<u64>(), n in 1usize..7) {
        let c = random_contraction(seed, n, n);
        let d = defect(c.as_ref(), RankTol::default()).unwrap();
        let sq = &d.defect_op * &d.defect_op;
        let gram = c.adjoint() * &c;
        let target = &linalg::identity(n) - &gram;
        prop_assert!(op_dist(&sq, &target) <= 1e-12);
        prop_assert!(linalg::hermiticity_deviation(d.defect_op.as_ref()) <= 1e-12);
    }

    #[test]
    fn defects_intertwine(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let c = random_contraction(seed, rows, cols);
        let d = defect(c.as_ref(), RankTol::default()).unwrap();
        let ds = defect_of_adjoint(c.as_ref(), RankTol::default()).unwrap();
        let lhs = &c * &d.defect_op;
        let rhs = &ds.defect_op * &c;
        prop_assert!(op_dist(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn characteristic_function_bounded(seed in any::<u64>(), r in 0.0f64..0.95, phi in 0.0f64..6.283) {
        let c = random_contraction(seed, 4, 4);
        let d = defect(c.as_ref(), RankTol::default()).unwrap();
        let ds = defect_of_adjoint(c.as_ref(), RankTol::default()).unwrap();
        let theta = characteristic_full(c.as_ref(), &d, &ds, C64::from_polar(r, phi)).unwrap();
        prop_assert!(linalg::op_norm(theta.as_ref()) <= 1.0 + 1e-8);
    }
}
