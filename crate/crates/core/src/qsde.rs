//! Explicit Euler integration of the unitary quantum stochastic differential
//! equation driven by a ξ-martingale, its Hardy-side rewrite, and
//! matrix-element diagnostics comparing the two solution paths.

use std::sync::Arc;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::{annihilation, conservation, creation, exp_vector, hat_operator, FockSpec, Martingale, COMMUTATION_TOL};
use crate::linalg;
use crate::quasiaffine::{OperatorMatrix, Space};
use crate::timeobs::{SpectralInterval, Side, TimeObservable};
use crate::C64;

pub const OPERATOR_TOL: f64 = 1e-10;
/// Tolerance for hypotheses re-established on the Hardy side.
pub const HAT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ProcessSpec {
    l: Mat<C64>,
    s: Mat<C64>,
    h: Mat<C64>,
    p: Mat<C64>,
    martingale: Martingale,
    fock: Arc<FockSpec>,
    time_grid: Vec<f64>,
    side: Side,
}

fn square(m: MatRef<'_, C64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension { expected: n, got: if m.nrows() != n { m.nrows() } else { m.ncols() } });
    }
    Ok(())
}

impl ProcessSpec {
    pub fn new(
        l: Mat<C64>,
        s: Mat<C64>,
        h: Mat<C64>,
        p: Mat<C64>,
        martingale: Martingale,
        fock: Arc<FockSpec>,
        time_grid: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self { l, s, h, p, martingale, fock, time_grid, side: Side::Physical };
        spec.validate(OPERATOR_TOL)?;
        Ok(spec)
    }

    fn validate(&self, martingale_tol: f64) -> Result<()> {
        let d = self.l.nrows();
        square(self.l.as_ref(), d)?;
        square(self.s.as_ref(), d)?;
        square(self.h.as_ref(), d)?;
        let b = self.fock.base_dim();
        square(self.p.as_ref(), b)?;
        if self.martingale.generator().len() != b {
            return Err(Error::Dimension { expected: b, got: self.martingale.generator().len() });
        }
        let deviation = linalg::unitarity_deviation(self.s.as_ref());
        if deviation > OPERATOR_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        let deviation = linalg::hermiticity_deviation(self.h.as_ref());
        if deviation > OPERATOR_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let deviation = linalg::projector_deviation(self.p.as_ref());
        if deviation > martingale_tol {
            return Err(Error::NotProjector { deviation });
        }
        let residual = linalg::op_norm(linalg::commutator(self.p.as_ref(), self.martingale.observable().inverse().mat()).as_ref());
        if residual > COMMUTATION_TOL {
            return Err(Error::Commutation { residual, tol: COMMUTATION_TOL });
        }
        match self.time_grid.first() {
            Some(&t0) if t0 == 0.0 => {}
            _ => return Err(Error::InvalidArgument("time grid must start at 0".into())),
        }
        if self.time_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
        }
        for &t in &self.time_grid {
            let m = self.martingale.at(t)?;
            let pm = linalg::apply(self.p.as_ref(), &m);
            let gap = pm.iter().zip(&m).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            if gap > martingale_tol {
                return Err(Error::InvalidArgument(format!("P m_t differs from m_t by {gap:.3e} at t = {t}")));
            }
        }
        Ok(())
    }

    pub fn system_dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> MatRef<'_, C64> {
        self.l.as_ref()
    }

    pub fn s(&self) -> MatRef<'_, C64> {
        self.s.as_ref()
    }

    pub fn h(&self) -> MatRef<'_, C64> {
        self.h.as_ref()
    }

    pub fn p(&self) -> MatRef<'_, C64> {
        self.p.as_ref()
    }

    pub fn martingale(&self) -> &Martingale {
        &self.martingale
    }

    pub fn fock(&self) -> &Arc<FockSpec> {
        &self.fock
    }

    pub fn time_grid(&self) -> &[f64] {
        &self.time_grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn with_time_grid(&self, time_grid: Vec<f64>) -> Result<Self> {
        let spec = Self { time_grid, ..self.clone() };
        spec.validate(if self.side == Side::Physical { OPERATOR_TOL } else { HAT_TOL })?;
        Ok(spec)
    }

    /// Largest entrywise difference in operators, generator and grid.
    pub fn distance(&self, other: &ProcessSpec) -> f64 {
        let mat = |a: &Mat<C64>, b: &Mat<C64>| {
            if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
                return f64::INFINITY;
            }
            linalg::frobenius((a - b).as_ref())
        };
        let gen = if self.martingale.generator().len() == other.martingale.generator().len() {
            self.martingale.generator().iter().zip(other.martingale.generator()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let grid = if self.time_grid == other.time_grid { 0.0 } else { f64::INFINITY };
        [mat(&self.l, &other.l), mat(&self.s, &other.s), mat(&self.h, &other.h), mat(&self.p, &other.p), gen, grid]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementRecord {
    pub t_start: f64,
    pub t_end: f64,
    /// `Δ≪m,m≫` over the step.
    pub d_clock: f64,
    /// `‖m_{t_{k+1}} − m_{t_k}‖`.
    pub d_martingale: f64,
    /// `‖U_{k+1}*U_{k+1} − 1‖_F`.
    pub drift: f64,
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub times: Vec<f64>,
    pub unitaries: Vec<Mat<C64>>,
    /// `max_k ‖U_k*U_k − 1‖_F`.
    pub unitarity_drift: f64,
    pub increments: Vec<IncrementRecord>,
    pub side: Side,
    pub fock: Arc<FockSpec>,
    pub system_dim: usize,
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm_sq(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn integrate(spec: &ProcessSpec, side: Side) -> Result<PathResult> {
    if side != spec.side {
        return Err(Error::InvalidArgument(format!("spec was prepared for the {:?} side", spec.side)));
    }
    let fock = &spec.fock;
    let f = fock.total_dim();
    let d = spec.system_dim();
    let dim = d * f;
    let obs = spec.martingale.observable();
    let ms: Vec<Vec<C64>> = spec.time_grid.iter().map(|&t| spec.martingale.at(t)).collect::<Result<_>>()?;
    let ps: Vec<Mat<C64>> = spec
        .time_grid
        .iter()
        .map(|&t| {
            let e = SpectralInterval::closed(1.0, t + 1.0)?;
            Ok(obs.spectral_projector(&e).mat() * spec.p.as_ref())
        })
        .collect::<Result<_>>()?;
    let id_s = linalg::identity(d);
    let id_f = linalg::identity(f);
    let s_minus_1 = &spec.s - &id_s;
    let lstar_s = spec.l.adjoint() * &spec.s;
    let lstar_l = spec.l.adjoint() * &spec.l;
    let drift_gen = Mat::from_fn(d, d, |i, j| C64::new(0.0, 1.0) * spec.h[(i, j)] + lstar_l[(i, j)] * 0.5);

    let mut u = linalg::identity(dim);
    let mut unitaries = vec![u.clone()];
    let mut increments = Vec::with_capacity(spec.time_grid.len().saturating_sub(1));
    let mut worst = 0.0f64;
    // processes vanish just before 0, so the first step also carries the atom at t = 0
    let m_before = vec![C64::new(0.0, 0.0); ms[0].len()];
    let p_before = Mat::<C64>::zeros(ps[0].nrows(), ps[0].ncols());
    for k in 0..spec.time_grid.len().saturating_sub(1) {
        let (m_prev, p_prev) = if k == 0 { (&m_before, &p_before) } else { (&ms[k], &ps[k]) };
        let dm = sub(&ms[k + 1], m_prev);
        let d_clock = norm_sq(&ms[k + 1]) - norm_sq(m_prev);
        let dp = &ps[k + 1] - p_prev;
        let d_martingale = norm_sq(&dm).sqrt();
        let quiet = d_martingale == 0.0 && d_clock == 0.0 && linalg::frobenius(dp.as_ref()) == 0.0;
        if !quiet {
            let da_dag = creation(fock, &dm)?;
            let da = annihilation(fock, &dm)?;
            let dl = conservation(fock, dp.as_ref())?;
            let clock = Mat::from_fn(f, f, |i, j| id_f[(i, j)] * d_clock);
            let g = &(&(&linalg::kron(spec.l.as_ref(), da_dag.mat()) + &linalg::kron(s_minus_1.as_ref(), dl.mat()))
                - &linalg::kron(lstar_s.as_ref(), da.mat()))
                - &linalg::kron(drift_gen.as_ref(), clock.as_ref());
            u = &u + &(&g * &u);
        }
        let drift = linalg::unitarity_deviation(u.as_ref());
        worst = worst.max(drift);
        increments.push(IncrementRecord { t_start: spec.time_grid[k], t_end: spec.time_grid[k + 1], d_clock, d_martingale, drift });
        unitaries.push(u.clone());
    }
    Ok(PathResult { times: spec.time_grid.clone(), unitaries, unitarity_drift: worst, increments, side, fock: fock.clone(), system_dim: d })
}

/// `exp(−iH c) ⊗ 1_F`, the solution when `L = 0` and `S = 1` with clock value `c`.
pub fn scalar_clock_solution(h: MatRef<'_, C64>, clock: f64, fock_dim: usize) -> Result<Mat<C64>> {
    let (w, v) = linalg::hermitian_eig(linalg::hermitize(h).as_ref())?;
    let e = linalg::spectral_function(&w, v.as_ref(), |x| C64::from_polar(1.0, -x * clock));
    Ok(linalg::kron(e.as_ref(), linalg::identity(fock_dim).as_ref()))
}

/// Hardy-side process data: `L, S, H` unchanged, generator `v ↦ Ωv`, `P ↦ P̂`.
pub fn rewrite_hat(spec: &ProcessSpec, omega: MatRef<'_, C64>) -> Result<ProcessSpec> {
    let b = spec.fock.base_dim();
    if omega.ncols() != b {
        return Err(Error::Dimension { expected: b, got: omega.ncols() });
    }
    let m = omega.nrows();
    let c_hat = linalg::hermitize((omega * omega.adjoint()).as_ref());
    let obs = spec.martingale.observable();
    let hat_obs = TimeObservable::from_inverse(OperatorMatrix::new(Space::Abstract(m), Space::Abstract(m), c_hat)?, Side::Hardy, obs.direction())?;
    let p_hat = hat_operator(spec.p.as_ref(), omega)?;
    let residual = linalg::op_norm(linalg::commutator(p_hat.as_ref(), hat_obs.inverse().mat()).as_ref());
    if residual > HAT_TOL {
        return Err(Error::Commutation { residual, tol: HAT_TOL });
    }
    let generator = linalg::apply(omega, spec.martingale.generator());
    let martingale = Martingale::new(generator, Arc::new(hat_obs))?;
    let fock = Arc::new(FockSpec::new(m, spec.fock.n_max())?);
    let hat = ProcessSpec {
        l: spec.l.clone(),
        s: spec.s.clone(),
        h: spec.h.clone(),
        p: p_hat,
        martingale,
        fock,
        time_grid: spec.time_grid.clone(),
        side: Side::Hardy,
    };
    hat.validate(HAT_TOL)?;
    Ok(hat)
}

/// Matrix-element probe `⟨h ⊗ e(u), U(t)(h' ⊗ e(u'))⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub h: Vec<C64>,
    pub u: Vec<C64>,
    pub h2: Vec<C64>,
    pub u2: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub probe: usize,
    pub t: f64,
    pub m_phys: C64,
    pub m_hat: C64,
    /// `≪m,m≫([0,t]) = ‖m_t‖²`.
    pub clock_phys: f64,
    /// `≪m̂,m̂≫([0,t]) = ‖m̂_t‖²`.
    pub clock_hat: f64,
    /// `⟨T⁻¹m_t, m_t⟩`.
    pub clock_transported: f64,
    /// `⟨m_t, u'⟩`.
    pub m_dot_u: C64,
    /// `⟨m̂_t, Ωu'⟩`.
    pub mhat_dot_uhat: C64,
    /// `⟨T⁻¹m_t, u'⟩`.
    pub transported_dot_u: C64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub rows: Vec<DiagnosticRow>,
    /// `max |≪m̂,m̂≫([0,t]) − ⟨T⁻¹m_t, m_t⟩|`.
    pub bracket_residual: f64,
    /// `max |M_phys(0) − ⟨h,h'⟩⟨e(u),e(u')⟩|` over probes.
    pub initial_phys_residual: f64,
    /// `max |M_hat(0) − ⟨h,h'⟩⟨e(Ωu),e(Ωu')⟩|` over probes.
    pub initial_hat_residual: f64,
    /// `max |M_phys(t) − M_hat(t)|`; data, not a pass criterion.
    pub max_discrepancy: f64,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn product_state(h: &[C64], fock_vec: &[C64]) -> Vec<C64> {
    h.iter().flat_map(|&a| fock_vec.iter().map(move |&b| a * b)).collect()
}

pub fn intertwining_diagnostics(
    phys_spec: &ProcessSpec,
    hardy_spec: &ProcessSpec,
    phys: &PathResult,
    hardy: &PathResult,
    omega: MatRef<'_, C64>,
    probes: &[Probe],
    exec: Execution,
) -> Result<IntertwiningReport> {
    if phys.side != Side::Physical || hardy.side != Side::Hardy || phys.times != hardy.times || phys_spec.time_grid != phys.times {
        return Err(Error::SpecMismatch);
    }
    if hardy_spec.side != Side::Hardy || hardy_spec.fock.base_dim() != omega.nrows() || phys_spec.fock.base_dim() != omega.ncols() {
        return Err(Error::SpecMismatch);
    }
    let d = phys.system_dim;
    let tinv = phys_spec.martingale.observable().inverse().mat().to_owned();
    let ms: Vec<Vec<C64>> = phys.times.iter().map(|&t| phys_spec.martingale.at(t)).collect::<Result<_>>()?;
    let mhs: Vec<Vec<C64>> = phys.times.iter().map(|&t| hardy_spec.martingale.at(t)).collect::<Result<_>>()?;
    let per_probe = exec.map_range(probes.len(), |pi| -> Result<(Vec<DiagnosticRow>, f64, f64)> {
        let p = &probes[pi];
        if p.h.len() != d || p.h2.len() != d {
            return Err(Error::Dimension { expected: d, got: p.h.len() });
        }
        let u_hat = linalg::apply(omega, &p.u);
        let u2_hat = linalg::apply(omega, &p.u2);
        let e_u = exp_vector(&phys.fock, &p.u)?;
        let e_u2 = exp_vector(&phys.fock, &p.u2)?;
        let e_uh = exp_vector(&hardy.fock, &u_hat)?;
        let e_u2h = exp_vector(&hardy.fock, &u2_hat)?;
        let left = product_state(&p.h, e_u.coeffs());
        let right = product_state(&p.h2, e_u2.coeffs());
        let left_h = product_state(&p.h, e_uh.coeffs());
        let right_h = product_state(&p.h2, e_u2h.coeffs());
        let hh = dot(&p.h, &p.h2);
        let gram_phys = hh * e_u.inner(&e_u2)?;
        let gram_hat = hh * e_uh.inner(&e_u2h)?;
        let mut rows = Vec::with_capacity(phys.times.len());
        for (k, &t) in phys.times.iter().enumerate() {
            let m_phys = dot(&left, &linalg::apply(phys.unitaries[k].as_ref(), &right));
            let m_hat = dot(&left_h, &linalg::apply(hardy.unitaries[k].as_ref(), &right_h));
            let tm = linalg::apply(tinv.as_ref(), &ms[k]);
            rows.push(DiagnosticRow {
                probe: pi,
                t,
                m_phys,
                m_hat,
                clock_phys: norm_sq(&ms[k]),
                clock_hat: norm_sq(&mhs[k]),
                clock_transported: dot(&tm, &ms[k]).re,
                m_dot_u: dot(&ms[k], &p.u2),
                mhat_dot_uhat: dot(&mhs[k], &u2_hat),
                transported_dot_u: dot(&tm, &p.u2),
            });
        }
        let r0 = (rows[0].m_phys - gram_phys).norm();
        let r0h = (rows[0].m_hat - gram_hat).norm();
        Ok((rows, r0, r0h))
    });
    let mut rows = Vec::new();
    let mut initial_phys_residual = 0.0f64;
    let mut initial_hat_residual = 0.0f64;
    for item in per_probe {
        let (r, a, b) = item?;
        rows.extend(r);
        initial_phys_residual = initial_phys_residual.max(a);
        initial_hat_residual = initial_hat_residual.max(b);
    }
    let bracket_residual = rows.iter().map(|r| (r.clock_hat - r.clock_transported).abs()).fold(0.0, f64::max);
    let max_discrepancy = rows.iter().map(|r| (r.m_phys - r.m_hat).norm()).fold(0.0, f64::max);
    Ok(IntertwiningReport { rows, bracket_residual, initial_phys_residual, initial_hat_residual, max_discrepancy })
}
