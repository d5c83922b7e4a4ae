//! Truncated symmetric Fock space over a small base space.
//!
//! States are expanded in the occupation-number basis, graded by total
//! particle number `0..=n_max`. Creation operators drop the component that
//! would leave the top level; annihilation and conservation operators are
//! exact on the truncated space.

use std::collections::HashMap;
use std::sync::Arc;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::timeobs::{SpectralInterval, TimeObservable};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockSpec {
    base_dim: usize,
    n_max: usize,
    states: Vec<Vec<u32>>,
    level_offsets: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
}

fn compositions(d: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == d - 1 {
        let used: u32 = prefix.iter().sum();
        let mut s = prefix.clone();
        s.push(n - used);
        out.push(s);
        return;
    }
    let used: u32 = prefix.iter().sum();
    for k in (0..=(n - used)).rev() {
        prefix.push(k);
        compositions(d, n, prefix, out);
        prefix.pop();
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

impl FockSpec {
    pub fn new(base_dim: usize, n_max: usize) -> Result<Self> {
        if base_dim == 0 {
            return Err(Error::InvalidArgument("base dimension must be positive".into()));
        }
        let mut states = Vec::new();
        let mut level_offsets = vec![0];
        for n in 0..=n_max {
            compositions(base_dim, n as u32, &mut Vec::new(), &mut states);
            level_offsets.push(states.len());
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self { base_dim, n_max, states, level_offsets, index })
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn total_dim(&self) -> usize {
        self.states.len()
    }

    pub fn level_dims(&self) -> Vec<usize> {
        self.level_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Index range of level `n`.
    pub fn level_range(&self, n: usize) -> std::ops::Range<usize> {
        self.level_offsets[n]..self.level_offsets[n + 1]
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn level_of(&self, i: usize) -> usize {
        self.states[i].iter().sum::<u32>() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    spec: Arc<FockSpec>,
    coeffs: Vec<C64>,
}

impl FockVector {
    pub fn new(spec: Arc<FockSpec>, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != spec.total_dim() {
            return Err(Error::Dimension { expected: spec.total_dim(), got: coeffs.len() });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn vacuum(spec: Arc<FockSpec>) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); spec.total_dim()];
        coeffs[0] = C64::new(1.0, 0.0);
        Self { spec, coeffs }
    }

    pub fn spec(&self) -> &Arc<FockSpec> {
        &self.spec
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(Self { spec: self.spec.clone(), coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    pub fn scale(&self, c: C64) -> FockVector {
        Self { spec: self.spec.clone(), coeffs: self.coeffs.iter().map(|z| z * c).collect() }
    }

    /// Copy with the levels above `n` set to zero.
    pub fn truncated(&self, n: usize) -> FockVector {
        let mut coeffs = self.coeffs.clone();
        for (i, z) in coeffs.iter_mut().enumerate() {
            if self.spec.level_of(i) > n {
                *z = C64::new(0.0, 0.0);
            }
        }
        Self { spec: self.spec.clone(), coeffs }
    }
}

/// Graded operator between two truncated Fock spaces.
#[derive(Clone, Debug)]
pub struct FockOperator {
    rows: Arc<FockSpec>,
    cols: Arc<FockSpec>,
    mat: Mat<C64>,
}

impl FockOperator {
    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn rows(&self) -> &Arc<FockSpec> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<FockSpec> {
        &self.cols
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.spec != self.cols {
            return Err(Error::SpecMismatch);
        }
        Ok(FockVector { spec: self.rows.clone(), coeffs: linalg::apply(self.mat.as_ref(), &v.coeffs) })
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator { rows: self.cols.clone(), cols: self.rows.clone(), mat: self.mat.adjoint().to_owned() }
    }

    pub fn compose(&self, rhs: &FockOperator) -> Result<FockOperator> {
        if self.cols != rhs.rows {
            return Err(Error::SpecMismatch);
        }
        Ok(FockOperator { rows: self.rows.clone(), cols: rhs.cols.clone(), mat: &self.mat * &rhs.mat })
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(self.mat.as_ref())
    }

    pub fn identity(spec: Arc<FockSpec>) -> FockOperator {
        let n = spec.total_dim();
        FockOperator { rows: spec.clone(), cols: spec, mat: linalg::identity(n) }
    }
}

fn check_base(spec: &FockSpec, v: usize) -> Result<()> {
    if v != spec.base_dim {
        return Err(Error::Dimension { expected: spec.base_dim, got: v });
    }
    Ok(())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn exp_vector(spec: &Arc<FockSpec>, u: &[C64]) -> Result<FockVector> {
    check_base(spec, u.len())?;
    let coeffs = spec
        .states
        .iter()
        .map(|s| s.iter().zip(u).map(|(&k, &ui)| ui.powu(k) / factorial(k).sqrt()).product())
        .collect();
    Ok(FockVector { spec: spec.clone(), coeffs })
}

/// `a†(u) = Σ uᵢ aᵢ†`, linear in `u`.
pub fn creation(spec: &Arc<FockSpec>, u: &[C64]) -> Result<FockOperator> {
    check_base(spec, u.len())?;
    let n = spec.total_dim();
    let mut mat = Mat::zeros(n, n);
    let top = spec.level_offsets[spec.n_max];
    for col in 0..top {
        let s = &spec.states[col];
        for (i, &ui) in u.iter().enumerate() {
            if ui == C64::new(0.0, 0.0) {
                continue;
            }
            let mut t = s.clone();
            t[i] += 1;
            let row = spec.index[&t];
            mat[(row, col)] += ui * f64::from(t[i]).sqrt();
        }
    }
    Ok(FockOperator { rows: spec.clone(), cols: spec.clone(), mat })
}

/// `a(u) = Σ ūᵢ aᵢ`, antilinear in `u`.
pub fn annihilation(spec: &Arc<FockSpec>, u: &[C64]) -> Result<FockOperator> {
    Ok(creation(spec, u)?.adjoint())
}

/// `λ(K) = Σ Kᵢⱼ aᵢ†aⱼ`.
pub fn conservation(spec: &Arc<FockSpec>, k: MatRef<'_, C64>) -> Result<FockOperator> {
    check_base(spec, k.nrows())?;
    check_base(spec, k.ncols())?;
    let n = spec.total_dim();
    let d = spec.base_dim;
    let mut mat = Mat::zeros(n, n);
    for col in 0..n {
        let s = &spec.states[col];
        for j in 0..d {
            if s[j] == 0 {
                continue;
            }
            let mut t = s.clone();
            t[j] -= 1;
            let lower = f64::from(s[j]).sqrt();
            for i in 0..d {
                let kij = k[(i, j)];
                if kij == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut r = t.clone();
                r[i] += 1;
                mat[(spec.index[&r], col)] += kij * lower * f64::from(r[i]).sqrt();
            }
        }
    }
    Ok(FockOperator { rows: spec.clone(), cols: spec.clone(), mat })
}

pub fn number_operator(spec: &Arc<FockSpec>) -> FockOperator {
    conservation(spec, linalg::identity(spec.base_dim).as_ref()).expect("matching dimension")
}

/// `Γ_s(C) = ⊕ C^{⊗n}` from `dom` to `cod`; `C` is `cod.base_dim × dom.base_dim`.
pub fn second_quantization(dom: &Arc<FockSpec>, cod: &Arc<FockSpec>, c: MatRef<'_, C64>) -> Result<FockOperator> {
    check_base(cod, c.nrows())?;
    check_base(dom, c.ncols())?;
    if dom.n_max != cod.n_max {
        return Err(Error::InvalidArgument("second quantization needs equal truncation levels".into()));
    }
    let norm = linalg::op_norm(c);
    if !(norm <= 1.0 + crate::contraction::CONTRACTION_TOL) {
        return Err(Error::NotContraction { norm });
    }
    let creators: Vec<FockOperator> =
        (0..c.ncols()).map(|j| creation(cod, &linalg::column(c, j))).collect::<Result<_>>()?;
    let mut mat = Mat::zeros(cod.total_dim(), dom.total_dim());
    for (col, s) in dom.states.iter().enumerate() {
        let mut v = FockVector::vacuum(cod.clone());
        let mut norm = 1.0;
        for (j, &k) in s.iter().enumerate() {
            for _ in 0..k {
                v = creators[j].apply(&v)?;
            }
            norm *= factorial(k).sqrt();
        }
        for (row, z) in v.coeffs.iter().enumerate() {
            mat[(row, col)] = z / norm;
        }
    }
    Ok(FockOperator { rows: cod.clone(), cols: dom.clone(), mat })
}

/// A ξ-martingale `m_t = ξ([1, t+1])v`.
#[derive(Clone, Debug)]
pub struct Martingale {
    generator: Vec<C64>,
    observable: Arc<TimeObservable>,
}

impl Martingale {
    pub fn new(generator: Vec<C64>, observable: Arc<TimeObservable>) -> Result<Self> {
        if generator.len() != observable.dim() {
            return Err(Error::Dimension { expected: observable.dim(), got: generator.len() });
        }
        Ok(Self { generator, observable })
    }

    pub fn generator(&self) -> &[C64] {
        &self.generator
    }

    pub fn observable(&self) -> &Arc<TimeObservable> {
        &self.observable
    }

    pub fn at(&self, t: f64) -> Result<Vec<C64>> {
        martingale_at(self, t)
    }

    /// Times `t_j − 1` at which the martingale can jump.
    pub fn jump_times(&self) -> Vec<f64> {
        self.observable.times().into_iter().filter(|t| t.is_finite()).map(|t| t - 1.0).collect()
    }
}

pub fn martingale_at(m: &Martingale, t: f64) -> Result<Vec<C64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("martingale time must be non-negative, got {t}")));
    }
    m.observable.project(&SpectralInterval::closed(1.0, t + 1.0)?, &m.generator)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `≪m, m'≫([0, t]) = ⟨m_t, m'_t⟩`.
pub fn bracket_measure(m: &Martingale, m2: &Martingale, t: f64) -> Result<C64> {
    if !Arc::ptr_eq(&m.observable, &m2.observable) && m.observable.eigvals() != m2.observable.eigvals() {
        return Err(Error::SpecMismatch);
    }
    Ok(dot(&martingale_at(m, t)?, &martingale_at(m2, t)?))
}

pub const COMMUTATION_TOL: f64 = 1e-8;

/// `K̂ = X*KX` with `X = VW*` from the thin SVD `Ω = W S V*`.
pub fn hat_operator(k: MatRef<'_, C64>, omega: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let n = omega.ncols();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::Dimension { expected: n, got: k.nrows() });
    }
    let c = omega.adjoint() * omega;
    let residual = linalg::op_norm(linalg::commutator(k, c.as_ref()).as_ref());
    if residual > COMMUTATION_TOL {
        return Err(Error::Commutation { residual, tol: COMMUTATION_TOL });
    }
    let svd = linalg::thin_svd(omega)?;
    let x = &svd.v * svd.w.adjoint();
    Ok(x.adjoint() * (k * &x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HatReport {
    /// `|‖K̂‖ − ‖K‖|`.
    pub norm_defect: f64,
    /// `‖[K̂, ΩΩ*]‖`.
    pub commutator_hat: f64,
    /// `‖Ω*K̂ − KΩ*‖`.
    pub intertwine: f64,
}

pub fn hat_report(k: MatRef<'_, C64>, k_hat: MatRef<'_, C64>, omega: MatRef<'_, C64>) -> HatReport {
    let c_hat = omega * omega.adjoint();
    HatReport {
        norm_defect: (linalg::op_norm(k_hat) - linalg::op_norm(k)).abs(),
        commutator_hat: linalg::op_norm(linalg::commutator(k_hat, c_hat.as_ref()).as_ref()),
        intertwine: linalg::op_norm((&(omega.adjoint() * k_hat) - &(k * omega.adjoint())).as_ref()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(d: usize, n: usize) -> Arc<FockSpec> {
        Arc::new(FockSpec::new(d, n).unwrap())
    }

    #[test]
    fn level_dims_are_binomial() {
        let s = FockSpec::new(4, 4).unwrap();
        let dims = s.level_dims();
        for (n, &k) in dims.iter().enumerate() {
            assert_eq!(k, binomial(4 + n - 1, n));
        }
        assert_eq!(s.total_dim(), 70);
        assert_eq!(FockSpec::new(3, 3).unwrap().total_dim(), 20);
    }

    #[test]
    fn zero_exponential_is_vacuum() {
        let s = spec(3, 3);
        assert_eq!(exp_vector(&s, &[C64::new(0.0, 0.0); 3]).unwrap(), FockVector::vacuum(s));
    }

    #[test]
    fn annihilation_kills_vacuum() {
        let s = spec(3, 3);
        let u = [C64::new(0.3, 0.1), C64::new(-1.0, 0.0), C64::new(0.0, 2.0)];
        let out = annihilation(&s, &u).unwrap().apply(&FockVector::vacuum(s.clone())).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn number_operator_counts_levels() {
        let s = spec(3, 4);
        let n = number_operator(&s);
        for i in 0..s.total_dim() {
            for j in 0..s.total_dim() {
                let expected = if i == j { s.level_of(i) as f64 } else { 0.0 };
                assert!((n.mat()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn second_quantization_of_identity() {
        let s = spec(3, 3);
        let g = second_quantization(&s, &s, linalg::identity(3).as_ref()).unwrap();
        assert!(linalg::frobenius((&g.mat - &linalg::identity(s.total_dim())).as_ref()) < 1e-14);
    }

    #[test]
    fn second_quantization_rejects_expansions() {
        let s = spec(2, 2);
        let c = Mat::from_fn(2, 2, |i, j| if i == j { C64::new(1.1, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(matches!(second_quantization(&s, &s, c.as_ref()), Err(Error::NotContraction { .. })));
    }

    #[test]
    fn hat_of_identity_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let om = linalg::contraction_with_singular_values(&mut rng, 3, 3, &[1.0, 0.6, 0.3]);
        let k = hat_operator(linalg::identity(3).as_ref(), om.as_ref()).unwrap();
        assert!(linalg::frobenius((&k - &linalg::identity(3)).as_ref()) < 1e-13);
    }

    #[test]
    fn hat_rejects_non_commuting_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let om = linalg::contraction_with_singular_values(&mut rng, 3, 3, &[1.0, 0.6, 0.3]);
        let k = linalg::random_complex_mat(&mut rng, 3, 3);
        assert!(matches!(hat_operator(k.as_ref(), om.as_ref()), Err(Error::Commutation { .. })));
    }
}
