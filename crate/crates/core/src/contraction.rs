//! Defect operators, characteristic functions of contractions, and the
//! intertwining of the characteristic functions of `Ω*Ω` and `ΩΩ*` by `Ω`.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::C64;

pub const CONTRACTION_TOL: f64 = 1e-10;
pub const MAX_DISK_RADIUS: f64 = 0.95;

/// Threshold selecting the numerical defect subspace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RankTol {
    /// Multiple of the largest defect eigenvalue.
    Relative(f64),
    Absolute(f64),
}

impl Default for RankTol {
    fn default() -> Self {
        RankTol::Relative(1e-8)
    }
}

#[derive(Clone, Debug)]
pub struct DefectData {
    pub defect_op: Mat<C64>,
    /// Orthonormal eigenvectors of `D` with eigenvalue above `rank_tol`.
    pub basis: Mat<C64>,
    /// Eigenvalues of `D`, descending.
    pub eigvals: Vec<f64>,
    /// Absolute threshold actually applied.
    pub rank_tol: f64,
    /// Largest negative eigenvalue of `1 − C*C` removed by clamping.
    pub clamp_shift: f64,
}

impl DefectData {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }
}

fn check_contraction(c: MatRef<'_, C64>) -> Result<()> {
    let norm = linalg::op_norm(c);
    if !(norm <= 1.0 + CONTRACTION_TOL) {
        return Err(Error::NotContraction { norm });
    }
    Ok(())
}

/// `D_C = (1 − C*C)^{1/2}` and its numerical range.
pub fn defect(c: MatRef<'_, C64>, rank_tol: RankTol) -> Result<DefectData> {
    check_contraction(c)?;
    let n = c.ncols();
    let gram = c.adjoint() * c;
    let m = Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) - gram[(i, j)] } else { -gram[(i, j)] });
    defect_from_square(linalg::hermitize(m.as_ref()).as_ref(), rank_tol)
}

/// Defect data of `C*`.
pub fn defect_of_adjoint(c: MatRef<'_, C64>, rank_tol: RankTol) -> Result<DefectData> {
    defect(c.adjoint().to_owned().as_ref(), rank_tol)
}

fn defect_from_square(m: MatRef<'_, C64>, rank_tol: RankTol) -> Result<DefectData> {
    let (w, v) = linalg::hermitian_eig(m)?;
    let clamp_shift = w.iter().map(|&x| (-x).max(0.0)).fold(0.0, f64::max);
    let eigvals: Vec<f64> = w.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let defect_op = linalg::spectral_function(&eigvals, v.as_ref(), |x| C64::new(x, 0.0));
    let top = eigvals.first().copied().unwrap_or(0.0);
    let tol = match rank_tol {
        RankTol::Relative(r) => r * top,
        RankTol::Absolute(a) => a,
    };
    let keep: Vec<usize> = (0..eigvals.len()).filter(|&j| eigvals[j] > tol && eigvals[j] > 0.0).collect();
    let basis = linalg::select_columns(v.as_ref(), &keep);
    Ok(DefectData { defect_op, basis, eigvals, rank_tol: tol, clamp_shift })
}

/// `−C + λ D_{C*}(1 − λC*)⁻¹ D_C` on the whole space.
pub fn characteristic_full(c: MatRef<'_, C64>, d_c: &DefectData, d_cstar: &DefectData, lambda: C64) -> Result<Mat<C64>> {
    let n = c.nrows();
    if c.ncols() != n {
        return Err(Error::InvalidArgument("characteristic functions need a square contraction".into()));
    }
    if d_c.defect_op.nrows() != n || d_cstar.defect_op.nrows() != n {
        return Err(Error::Dimension { expected: n, got: d_c.defect_op.nrows() });
    }
    if lambda.norm() > MAX_DISK_RADIUS {
        return Err(Error::InvalidArgument(format!("|λ| = {} exceeds {MAX_DISK_RADIUS}", lambda.norm())));
    }
    let shifted = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        id - lambda * c[(j, i)].conj()
    });
    let solved = linalg::solve(shifted.as_ref(), d_c.defect_op.as_ref());
    if solved.col_iter().any(|col| col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())) {
        return Err(Error::Decomposition("ill-conditioned resolvent in characteristic function".into()));
    }
    let tail = &d_cstar.defect_op * &solved;
    Ok(Mat::from_fn(n, n, |i, j| -c[(i, j)] + lambda * tail[(i, j)]))
}

/// `Θ_C(λ)` compressed to the defect bases: `B_{C*}* Θ B_C`.
pub fn characteristic_function(c: MatRef<'_, C64>, d_c: &DefectData, d_cstar: &DefectData, lambda: C64) -> Result<Mat<C64>> {
    let full = characteristic_full(c, d_c, d_cstar, lambda)?;
    Ok(d_cstar.basis.adjoint() * (&full * &d_c.basis))
}

/// Spectral cut on `1 − w` (`w` an eigenvalue of `Ω*Ω`) separating defect
/// directions whose subspace is resolved to a given angle from those lost in
/// the roundoff cluster at `w = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectCut {
    pub delta: f64,
    pub floor: f64,
}

impl DefectCut {
    /// Threshold on `D_Ω = (1 − Ω*Ω)^{1/2}`.
    pub fn omega_tol(&self) -> f64 {
        self.delta.sqrt()
    }

    /// Threshold on `D_{T⁻¹} = (1 − (Ω*Ω)²)^{1/2}`.
    pub fn time_inverse_tol(&self) -> f64 {
        (self.delta * (2.0 - self.delta)).sqrt()
    }
}

/// Places the cut in the first gap of the sorted `1 − w` values that is wider
/// than `n·ε/angle_tol` and lies above that floor, at the geometric midpoint.
pub fn resolved_cut(eigs: &[f64], angle_tol: f64) -> DefectCut {
    let floor = eigs.len().max(1) as f64 * f64::EPSILON / angle_tol;
    let mut xs: Vec<f64> = eigs.iter().map(|w| (1.0 - w).max(0.0)).collect();
    xs.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    for &x in &xs {
        if x > floor && x - prev >= floor {
            let delta = if prev > 0.0 { (prev * x).sqrt() } else { 0.5 * x };
            return DefectCut { delta, floor };
        }
        prev = x;
    }
    DefectCut { delta: xs.last().copied().unwrap_or(0.0).max(floor), floor }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwineReport {
    pub lambda: C64,
    /// `‖(Ω*Θ̂(λ) − Θ(λ)Ω*)B̂‖ / ‖Ω‖`.
    pub res_star: f64,
    /// `‖(ΩΘ(λ) − Θ̂(λ)Ω)B‖ / ‖Ω‖`.
    pub res_plain: f64,
    /// `‖(1 − B̂B̂*)ΩB‖ / ‖ΩB‖` for `Ω𝒟 ⊂ 𝒟̂`.
    pub inclusion_plain: f64,
    /// `‖(1 − BB*)Ω*B̂‖ / ‖Ω*B̂‖` for `Ω*𝒟̂ ⊂ 𝒟`.
    pub inclusion_star: f64,
}

/// Precomputed defect data for `C = Ω*Ω` and `Ĉ = ΩΩ*`.
#[derive(Clone, Debug)]
pub struct IntertwiningSuite {
    omega: Mat<C64>,
    c: Mat<C64>,
    c_hat: Mat<C64>,
    pub cut: DefectCut,
    pub defect_c: DefectData,
    pub defect_c_hat: DefectData,
    /// `D_Ω = (1 − Ω*Ω)^{1/2}` at the same cut.
    pub defect_omega: DefectData,
    omega_norm: f64,
}

impl IntertwiningSuite {
    pub fn new(omega: MatRef<'_, C64>, angle_tol: f64) -> Result<Self> {
        check_contraction(omega)?;
        let c = linalg::hermitize((omega.adjoint() * omega).as_ref());
        let c_hat = linalg::hermitize((omega * omega.adjoint()).as_ref());
        let (w, _) = linalg::hermitian_eig(c.as_ref())?;
        let cut = resolved_cut(&w, angle_tol);
        let tol = RankTol::Absolute(cut.time_inverse_tol());
        let defect_c = defect(c.as_ref(), tol)?;
        let defect_c_hat = defect(c_hat.as_ref(), tol)?;
        let defect_omega = defect(omega, RankTol::Absolute(cut.omega_tol()))?;
        Ok(Self { omega: omega.to_owned(), c, c_hat, cut, defect_c, defect_c_hat, defect_omega, omega_norm: linalg::op_norm(omega) })
    }

    pub fn c(&self) -> MatRef<'_, C64> {
        self.c.as_ref()
    }

    pub fn c_hat(&self) -> MatRef<'_, C64> {
        self.c_hat.as_ref()
    }

    /// Largest principal angle between `𝒟_{Ω*Ω}` and `𝒟_Ω`.
    pub fn defect_angle(&self) -> f64 {
        linalg::max_principal_angle(self.defect_c.basis.as_ref(), self.defect_omega.basis.as_ref())
    }

    pub fn intertwine(&self, lambda: C64) -> Result<IntertwineReport> {
        let om = self.omega.as_ref();
        let theta = characteristic_full(self.c.as_ref(), &self.defect_c, &self.defect_c, lambda)?;
        let theta_hat = characteristic_full(self.c_hat.as_ref(), &self.defect_c_hat, &self.defect_c_hat, lambda)?;
        let b = &self.defect_c.basis;
        let bh = &self.defect_c_hat.basis;
        let scale = if self.omega_norm > 0.0 { self.omega_norm } else { 1.0 };
        let plain = &(om * &theta) - &(&theta_hat * om);
        let star = &(om.adjoint() * &theta_hat) - &(&theta * om.adjoint());
        let res_plain = linalg::op_norm((&plain * b).as_ref()) / scale;
        let res_star = linalg::op_norm((&star * bh).as_ref()) / scale;
        let inclusion = |target: &Mat<C64>, image: Mat<C64>| {
            let denom = linalg::op_norm(image.as_ref());
            if denom == 0.0 {
                return 0.0;
            }
            let resid = &image - &(target * (target.adjoint() * &image));
            linalg::op_norm(resid.as_ref()) / denom
        };
        Ok(IntertwineReport {
            lambda,
            res_star,
            res_plain,
            inclusion_plain: inclusion(bh, om * b),
            inclusion_star: inclusion(b, om.adjoint() * bh),
        })
    }
}

/// Both intertwining residuals for a single `λ`.
pub fn char_intertwine_residual(omega: MatRef<'_, C64>, lambda: C64, angle_tol: f64) -> Result<IntertwineReport> {
    IntertwiningSuite::new(omega, angle_tol)?.intertwine(lambda)
}
