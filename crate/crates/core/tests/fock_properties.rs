use std::sync::Arc;

use faer::Mat;
use hardytime::fock::*;
use hardytime::linalg;
use hardytime::{Error, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fock(d: usize, n: usize) -> Arc<FockSpec> {
    Arc::new(FockSpec::new(d, n).unwrap())
}

fn small_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<C64> {
    linalg::random_complex_vec(rng, d).into_iter().map(|z| z * scale).collect()
}

fn contraction(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<C64> {
    let s: Vec<f64> = (0..rows.min(cols)).map(|_| rng.random_range(0.0..1.0)).collect();
    linalg::contraction_with_singular_values(rng, rows, cols, &s)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Max column norm of `m` over basis states below the top level.
fn below_top(spec: &FockSpec, m: &Mat<C64>) -> f64 {
    (0..spec.total_dim())
        .filter(|&j| spec.level_of(j) < spec.n_max())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[test]
fn dimensions_count_occupations() {
    let s = fock(3, 4);
    assert_eq!(s.level_dims(), vec![1, 3, 6, 10, 15]);
    assert_eq!(s.total_dim(), binomial(3 + 4, 4));
    for i in 0..s.total_dim() {
        assert_eq!(s.index_of(s.state(i)), Some(i));
    }
    assert!(FockSpec::new(0, 3).is_err());
}

#[test]
fn number_operator_is_conservation_of_identity() {
    let s = fock(3, 5);
    let n = number_operator(&s);
    for i in 0..s.total_dim() {
        for j in 0..s.total_dim() {
            let expected = if i == j { s.level_of(i) as f64 } else { 0.0 };
            assert!((n.mat()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn exponential_vectors_overlap_as_truncated_exponential() {
    let s = fock(2, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = small_vec(&mut rng, 2, 0.5);
    let v = small_vec(&mut rng, 2, 0.5);
    let z = dot(&u, &v);
    let mut series = C64::new(0.0, 0.0);
    let mut term = C64::new(1.0, 0.0);
    for n in 0..=6 {
        series += term;
        term = term * z / (n + 1) as f64;
    }
    let got = exp_vector(&s, &u).unwrap().inner(&exp_vector(&s, &v).unwrap()).unwrap();
    assert!((got - series).norm() < 1e-13);
    let deep = fock(2, 30);
    let got = exp_vector(&deep, &u).unwrap().inner(&exp_vector(&deep, &v).unwrap()).unwrap();
    assert!((got - z.exp()).norm() < 1e-12);
}

#[test]
fn annihilation_scales_exponential_vectors() {
    let s = fock(3, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = small_vec(&mut rng, 3, 0.6);
    let v = small_vec(&mut rng, 3, 0.6);
    let ev = exp_vector(&s, &u).unwrap();
    let lhs = annihilation(&s, &v).unwrap().apply(&ev).unwrap();
    let rhs = ev.truncated(s.n_max() - 1).scale(dot(&v, &u));
    assert!(lhs.sub(&rhs).unwrap().norm() < 1e-13);
}

#[test]
fn second_quantization_rejects_bad_inputs() {
    let a = fock(2, 3);
    let b = fock(2, 4);
    let id = linalg::identity(2);
    assert!(matches!(second_quantization(&a, &b, id.as_ref()), Err(Error::InvalidArgument(_))));
    let big = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(2.0, 0.0) } else { C64::new(0.0, 0.0) });
    assert!(matches!(second_quantization(&a, &a, big.as_ref()), Err(Error::NotContraction { .. })));
    assert!(matches!(creation(&a, &[C64::new(1.0, 0.0)]), Err(Error::Dimension { .. })));
}

#[test]
fn hat_operator_transports_functions_of_the_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let omega = contraction(&mut rng, 6, 4);
    let c = omega.adjoint() * &omega;
    let (w, v) = linalg::hermitian_eig(linalg::hermitize(c.as_ref()).as_ref()).unwrap();
    let k = linalg::spectral_function(&w, v.as_ref(), |x| C64::new(x.sqrt() + 0.3, 0.0));
    let k_hat = hat_operator(k.as_ref(), omega.as_ref()).unwrap();
    let r = hat_report(k.as_ref(), k_hat.as_ref(), omega.as_ref());
    assert!(r.norm_defect < 1e-12 && r.commutator_hat < 1e-12 && r.intertwine < 1e-12, "{r:?}");
    let noisy = contraction(&mut rng, 4, 4);
    assert!(matches!(hat_operator(noisy.as_ref(), omega.as_ref()), Err(Error::Commutation { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn canonical_commutation_below_the_top_level(seed in any::<u64>(), d in 1usize..4, n in 2usize..6) {
        let s = fock(d, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = small_vec(&mut rng, d, 1.0);
        let v = small_vec(&mut rng, d, 1.0);
        let a = annihilation(&s, &u).unwrap();
        let ad = creation(&s, &v).unwrap();
        let comm = &(a.mat() * ad.mat()) - &(ad.mat() * a.mat());
        let target = Mat::from_fn(s.total_dim(), s.total_dim(), |i, j| if i == j { dot(&u, &v) } else { C64::new(0.0, 0.0) });
        prop_assert!(below_top(&s, &(&comm - &target)) <= 1e-12);
    }

    #[test]
    fn creation_is_adjoint_of_annihilation(seed in any::<u64>()) {
        let s = fock(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = small_vec(&mut rng, 3, 1.0);
        let a = annihilation(&s, &u).unwrap();
        let ad = creation(&s, &u).unwrap();
        prop_assert!(linalg::op_norm((&a.adjoint().mat().to_owned() - &ad.mat().to_owned()).as_ref()) <= 1e-15);
        prop_assert!(a.apply(&FockVector::vacuum(s.clone())).unwrap().norm() == 0.0);
    }

    #[test]
    fn second_quantization_is_functorial(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s2, s3, s4) = (fock(2, 4), fock(3, 4), fock(4, 4));
        let a = contraction(&mut rng, 4, 3);
        let b = contraction(&mut rng, 3, 2);
        let ab = &a * &b;
        let lhs = second_quantization(&s2, &s4, ab.as_ref()).unwrap();
        let rhs = second_quantization(&s3, &s4, a.as_ref()).unwrap()
            .compose(&second_quantization(&s2, &s3, b.as_ref()).unwrap()).unwrap();
        prop_assert!(linalg::op_norm((&lhs.mat().to_owned() - &rhs.mat().to_owned()).as_ref()) <= 1e-12);
        prop_assert!(lhs.op_norm() <= 1.0 + 1e-12);
        let vac = lhs.apply(&FockVector::vacuum(s2.clone())).unwrap();
        prop_assert!(vac.sub(&FockVector::vacuum(s4.clone())).unwrap().norm() <= 1e-15);
    }

    #[test]
    fn second_quantization_maps_exponentials(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s2, s3) = (fock(2, 5), fock(3, 5));
        let c = contraction(&mut rng, 3, 2);
        let u = small_vec(&mut rng, 2, 0.8);
        let cu = linalg::apply(c.as_ref(), &u);
        let gamma = second_quantization(&s2, &s3, c.as_ref()).unwrap();
        let lhs = gamma.apply(&exp_vector(&s2, &u).unwrap()).unwrap();
        let rhs = exp_vector(&s3, &cu).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn second_quantization_intertwines_creation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s2, s3) = (fock(2, 4), fock(3, 4));
        let c = contraction(&mut rng, 3, 2);
        let u = small_vec(&mut rng, 2, 1.0);
        let cu = linalg::apply(c.as_ref(), &u);
        let gamma = second_quantization(&s2, &s3, c.as_ref()).unwrap();
        let lhs = gamma.compose(&creation(&s2, &u).unwrap()).unwrap();
        let rhs = creation(&s3, &cu).unwrap().compose(&gamma).unwrap();
        prop_assert!(linalg::op_norm((&lhs.mat().to_owned() - &rhs.mat().to_owned()).as_ref()) <= 1e-12);
    }

    #[test]
    fn conservation_commutes_with_number(seed in any::<u64>()) {
        let s = fock(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = linalg::random_complex_mat(&mut rng, 3, 3);
        let lam = conservation(&s, k.as_ref()).unwrap();
        let n = number_operator(&s);
        let comm = linalg::commutator(lam.mat(), n.mat());
        prop_assert!(linalg::op_norm(comm.as_ref()) <= 1e-12);
    }
}
