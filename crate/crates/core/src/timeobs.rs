//! Time observables `T⁻¹ = Ω*Ω` (physical side) and `T̂⁻¹ = ΩΩ*` (Hardy
//! side), their spectral measures in the time coordinate `t = 1/λ`, and the
//! norm and spectral-flow experiments built on them.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{sample, resolvent_kernel, restrict_iinv, GridFunction, HalfLineFunction, Support};
use crate::hardy::FftPair;
use crate::linalg;
use crate::quasiaffine::{Direction, HardyModel, OperatorMatrix};
use crate::C64;

/// Eigenvalues of the inverse at or below this are assigned to the `t = ∞` tail.
pub const LAMBDA_FLOOR: f64 = 1e-12;
/// Admissible overshoot of the inverse spectrum outside `[0, 1]`.
pub const SPECTRUM_SLACK: f64 = 1e-8;
/// Time coordinates within this distance of 1 are identified with 1.
pub const TIME_SNAP: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Physical,
    Hardy,
}

#[derive(Clone, Debug)]
pub struct TimeObservable {
    inverse: OperatorMatrix,
    eigvals: Vec<f64>,
    eigvecs: Mat<C64>,
    side: Side,
    direction: Direction,
}

pub fn build_time_observable(omega: &OperatorMatrix, side: Side, direction: Direction) -> Result<TimeObservable> {
    let om = omega.mat();
    let (space, prod) = match side {
        Side::Physical => (omega.cols(), om.adjoint() * om),
        Side::Hardy => (omega.rows(), om * om.adjoint()),
    };
    TimeObservable::from_inverse(OperatorMatrix::new(space, space, prod)?, side, direction)
}

impl TimeObservable {
    /// Builds an observable from a Hermitian matrix with spectrum in `[0, 1]`.
    pub fn from_inverse(inverse: OperatorMatrix, side: Side, direction: Direction) -> Result<Self> {
        let sym = linalg::hermitize(inverse.mat());
        let (eigvals, eigvecs) = linalg::hermitian_eig(sym.as_ref())?;
        if let Some(&bad) = eigvals.iter().find(|&&w| !(-SPECTRUM_SLACK..=1.0 + SPECTRUM_SLACK).contains(&w)) {
            return Err(Error::SpectrumOutOfRange { value: bad });
        }
        let inverse = OperatorMatrix::new(inverse.rows(), inverse.cols(), sym)?;
        Ok(Self { inverse, eigvals, eigvecs, side, direction })
    }

    pub fn inverse(&self) -> &OperatorMatrix {
        &self.inverse
    }

    /// Eigenvalues of the inverse, descending.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    pub fn eigvecs(&self) -> MatRef<'_, C64> {
        self.eigvecs.as_ref()
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigvals.first().copied().unwrap_or(0.0)
    }

    /// Time coordinate of eigenvector `j`; `∞` for the tail.
    pub fn time(&self, j: usize) -> f64 {
        let w = self.eigvals[j];
        if w <= LAMBDA_FLOOR {
            return f64::INFINITY;
        }
        let t = 1.0 / w;
        if (t - 1.0).abs() <= TIME_SNAP {
            1.0
        } else {
            t
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.time(j)).collect()
    }

    pub fn selected(&self, e: &SpectralInterval) -> Vec<usize> {
        (0..self.dim()).filter(|&j| e.contains(self.time(j))).collect()
    }

    pub fn spectral_projector(&self, e: &SpectralInterval) -> OperatorMatrix {
        let q = linalg::select_columns(self.eigvecs.as_ref(), &self.selected(e));
        OperatorMatrix::new(self.inverse.rows(), self.inverse.cols(), linalg::range_projector(q.as_ref()))
            .expect("square projector on the observable's space")
    }

    /// `ξ(E)x` without forming the projector.
    pub fn project(&self, e: &SpectralInterval, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let n = self.dim();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for j in self.selected(e) {
            let c: C64 = (0..n).map(|i| self.eigvecs[(i, j)].conj() * x[i]).sum();
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.eigvecs[(i, j)] * c;
            }
        }
        Ok(out)
    }

    /// `φ(T⁻¹)` by functional calculus.
    pub fn function_of_inverse(&self, f: impl Fn(f64) -> f64) -> Mat<C64> {
        linalg::spectral_function(&self.eigvals, self.eigvecs.as_ref(), |w| C64::new(f(w), 0.0))
    }
}

pub fn spectral_projector(obs: &TimeObservable, e: &SpectralInterval) -> OperatorMatrix {
    obs.spectral_projector(e)
}

/// An interval of the time coordinate, `[lo, hi)` or `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    lo: f64,
    hi: f64,
    closed: bool,
}

impl SpectralInterval {
    /// `[lo, hi)`; `hi` may be `f64::INFINITY`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 1.0) || lo.is_infinite() {
            return Err(Error::InvalidArgument(format!("interval must start at or above 1, got {lo}")));
        }
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi})")));
        }
        Ok(Self { lo, hi, closed: false })
    }

    /// `[lo, hi]`.
    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 1.0) || lo.is_infinite() || !(hi >= lo) {
            return Err(Error::InvalidArgument(format!("invalid closed interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi, closed: true })
    }

    pub fn full() -> Self {
        Self { lo: 1.0, hi: f64::INFINITY, closed: false }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, t: f64) -> bool {
        if t.is_infinite() {
            return self.hi.is_infinite();
        }
        t >= self.lo && (t < self.hi || (self.closed && t <= self.hi))
    }
}

/// `‖ξ̂(E)Ω − Ωξ(E)‖ / ‖Ω‖`.
pub fn transport_residual(obs_phys: &TimeObservable, obs_hardy: &TimeObservable, omega: &OperatorMatrix, e: &SpectralInterval) -> Result<f64> {
    if obs_phys.dim() != omega.mat().ncols() || obs_hardy.dim() != omega.mat().nrows() {
        return Err(Error::SpecMismatch);
    }
    let p = obs_phys.spectral_projector(e);
    let ph = obs_hardy.spectral_projector(e);
    let lhs = ph.mat() * omega.mat();
    let rhs = omega.mat() * p.mat();
    let norm = omega.op_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(linalg::op_norm((&lhs - &rhs).as_ref()) / norm)
}

/// Largest discrepancy between the spectra of `Ω*Ω` and `ΩΩ*` above `floor`.
pub fn nonzero_spectrum_mismatch(a: &TimeObservable, b: &TimeObservable, floor: f64) -> f64 {
    let count = |o: &TimeObservable| o.eigvals().iter().filter(|&&w| w > floor).count();
    let k = count(a).max(count(b));
    (0..k)
        .map(|j| {
            let x = a.eigvals().get(j).copied().unwrap_or(0.0);
            let y = b.eigvals().get(j).copied().unwrap_or(0.0);
            (x - y).abs()
        })
        .fold(0.0, f64::max)
}

/// `‖R_{Ω*Ω}(z) − z⁻¹(Ω*R_{ΩΩ*}(z)Ω + 1)‖` with `R_A(z) = (z − A)⁻¹`.
pub fn resolvent_residual(omega: &OperatorMatrix, z: C64) -> Result<f64> {
    let dist = if (0.0..=1.0).contains(&z.re) { z.im.abs() } else { (z - C64::new(z.re.clamp(0.0, 1.0), 0.0)).norm() };
    if dist < 0.1 {
        return Err(Error::InvalidArgument(format!("z = {z} lies within 0.1 of [0, 1]")));
    }
    let om = omega.mat();
    let (m, n) = (om.nrows(), om.ncols());
    let a = om.adjoint() * om;
    let ah = om * om.adjoint();
    let shift = |x: &Mat<C64>, d: usize| Mat::from_fn(d, d, |i, j| if i == j { z - x[(i, j)] } else { -x[(i, j)] });
    let r = linalg::inverse(shift(&a, n).as_ref());
    let rh = linalg::inverse(shift(&ah, m).as_ref());
    let mut rhs = om.adjoint() * (&rh * om);
    for i in 0..n {
        rhs[(i, i)] += C64::new(1.0, 0.0);
    }
    let rhs = Mat::from_fn(n, n, |i, j| rhs[(i, j)] / z);
    Ok(linalg::op_norm((&r - &rhs).as_ref()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XmuRow {
    pub mu: C64,
    pub norm_x_sq: f64,
    pub norm_psi_sq: f64,
    pub ratio: f64,
}

/// `‖x_μ‖²` and `‖ψ_μ‖² = ‖Ω_f* x_μ‖²` for `x_μ(σ) = (σ − μ)⁻¹`, `Im μ < 0`.
pub fn xmu_program(model: &HardyModel, mu_list: &[C64], exec: Execution) -> Result<Vec<XmuRow>> {
    if let Some(mu) = mu_list.iter().find(|mu| !(mu.im < 0.0)) {
        return Err(Error::InvalidArgument(format!("Im μ must be negative, got μ = {mu}")));
    }
    let spec = *model.spec();
    let fft = FftPair::new(spec.n_points());
    exec.map(mu_list, |&mu| {
        let x = sample(spec, resolvent_kernel(mu));
        let psi = omega_adjoint_with(model, &fft, &x, Direction::Forward)?;
        let norm_x_sq = x.norm_sq();
        let norm_psi_sq = psi.norm_sq();
        Ok(XmuRow { mu, norm_x_sq, norm_psi_sq, ratio: norm_psi_sq / norm_x_sq })
    })
    .into_iter()
    .collect()
}

fn omega_adjoint_with(model: &HardyModel, fft: &FftPair, f: &GridFunction, direction: Direction) -> Result<HalfLineFunction> {
    let mut buf = f.samples().to_vec();
    fft.project_in_place(&mut buf, direction.sign());
    let projected = GridFunction::new(*model.spec(), buf)?;
    model.from_energy(&restrict_iinv(&projected, Support::Lax)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCurve {
    pub a: f64,
    pub threshold: f64,
    pub times: Vec<f64>,
    pub mass_low: Vec<f64>,
    pub mass_high: Vec<f64>,
    /// First sampled time at which `mass_low` is below `threshold`.
    pub first_crossing: Option<f64>,
    /// `max_t mass_low(t) − mass_low(t₀)`.
    pub max_rise: f64,
    pub alias_horizon: f64,
}

impl FlowCurve {
    pub fn passed(&self) -> bool {
        self.first_crossing.is_some()
    }

    /// `max_t |mass_low² + mass_high² − 1|`.
    pub fn pythagoras_defect(&self) -> f64 {
        self.mass_low.iter().zip(&self.mass_high).map(|(l, h)| (l * l + h * h - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Tracks `‖ξ([1,a))U(t)g‖` and `‖ξ([a,∞))U(t)g‖` for a state first projected into `ξ([1,a))`.
pub fn spectral_flow_experiment(
    model: &HardyModel,
    obs: &TimeObservable,
    g: &HalfLineFunction,
    a: f64,
    times: &[f64],
    threshold: f64,
    exec: Execution,
) -> Result<FlowCurve> {
    if !(a > 1.0) {
        return Err(Error::InvalidArgument(format!("a must exceed 1, got {a}")));
    }
    if obs.side() != Side::Physical || obs.dim() != model.spec().half_len() {
        return Err(Error::SpecMismatch);
    }
    let direction = obs.direction();
    if let Some(t) = times.iter().find(|&&t| !direction.admits(t)) {
        return Err(Error::InvalidArgument(format!("time {t} is outside the {direction:?} half-axis")));
    }
    let low = SpectralInterval::new(1.0, a)?;
    let high = SpectralInterval::new(a, f64::INFINITY)?;
    let spec = *model.spec();
    let projected = HalfLineFunction::new(spec, obs.project(&low, g.samples())?)?;
    if projected.norm() == 0.0 {
        return Err(Error::InvalidArgument("state has no weight in ξ([1, a))".into()));
    }
    let g0 = projected.normalized()?;
    let rows = exec.map(times, |&t| -> Result<(f64, f64)> {
        let gt = model.evolve(&g0, t)?;
        let lo = HalfLineFunction::new(spec, obs.project(&low, gt.samples())?)?.norm();
        let hi = HalfLineFunction::new(spec, obs.project(&high, gt.samples())?)?.norm();
        Ok((lo, hi))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let mass_low: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mass_high: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let first_crossing = times.iter().zip(&mass_low).find(|(_, &m)| m < threshold).map(|(&t, _)| t);
    let start = mass_low.first().copied().unwrap_or(1.0);
    let max_rise = mass_low.iter().map(|m| m - start).fold(0.0, f64::max);
    Ok(FlowCurve { a, threshold, times: times.to_vec(), mass_low, mass_high, first_crossing, max_rise, alias_horizon: spec.alias_horizon() })
}
