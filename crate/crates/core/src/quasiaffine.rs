//! The maps θ, θ̄ and their adjoints, the energy representation `U`, and the
//! quasi-affine maps `Ω_f = θ*U`, `Ω_b = θ̄*U` as dense matrices.
//!
//! Physical states are carried as [`HalfLineFunction`]s: the physical space
//! has the same dimension and quadrature weight as the half-line grid, and
//! its coordinates are mapped to energy coordinates by `U`.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{embed_i, GridFunction, GridSpec, HalfLineFunction};
use crate::hardy::{projector_kernel, translate_u, FftPair, Sign};
use crate::linalg;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Space {
    FullLine(GridSpec),
    HalfLine(GridSpec),
    /// Physical space taken through an energy representation on this grid.
    Physical(GridSpec),
    Abstract(usize),
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::FullLine(g) => g.n_points(),
            Space::HalfLine(g) | Space::Physical(g) => g.half_len(),
            Space::Abstract(n) => *n,
        }
    }
}

/// Dense matrix tagged with its codomain (`rows`) and domain (`cols`).
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    rows: Space,
    cols: Space,
    mat: Mat<C64>,
}

impl OperatorMatrix {
    pub fn new(rows: Space, cols: Space, mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != rows.dim() {
            return Err(Error::Dimension { expected: rows.dim(), got: mat.nrows() });
        }
        if mat.ncols() != cols.dim() {
            return Err(Error::Dimension { expected: cols.dim(), got: mat.ncols() });
        }
        Ok(Self { rows, cols, mat })
    }

    pub fn identity(space: Space) -> Self {
        Self { rows: space, cols: space, mat: linalg::identity(space.dim()) }
    }

    pub fn rows(&self) -> Space {
        self.rows
    }

    pub fn cols(&self) -> Space {
        self.cols
    }

    pub fn mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { rows: self.cols, cols: self.rows, mat: self.mat.adjoint().to_owned() }
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &OperatorMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::SpecMismatch);
        }
        Ok(Self { rows: self.rows, cols: rhs.cols, mat: &self.mat * &rhs.mat })
    }

    pub fn apply(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.mat.ncols() {
            return Err(Error::Dimension { expected: self.mat.ncols(), got: x.len() });
        }
        Ok(linalg::apply(self.mat.as_ref(), x))
    }

    pub fn op_norm(&self) -> f64 {
        linalg::op_norm(self.mat.as_ref())
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        linalg::singular_values(self.mat.as_ref())
    }

    pub fn is_identity(&self) -> bool {
        self.mat.nrows() == self.mat.ncols()
            && (0..self.mat.nrows()).all(|i| {
                (0..self.mat.ncols()).all(|j| self.mat[(i, j)] == if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> Sign {
        match self {
            Direction::Forward => Sign::Plus,
            Direction::Backward => Sign::Minus,
        }
    }

    /// Whether `t` lies on the side where the semigroup law is claimed.
    pub fn admits(self, t: f64) -> bool {
        match self {
            Direction::Forward => t >= 0.0,
            Direction::Backward => t <= 0.0,
        }
    }
}

fn half_rows_of_projector(spec: &GridSpec, sign: Sign) -> Mat<C64> {
    let n = spec.n_points();
    let h = spec.half_len();
    let kernel = projector_kernel(n, sign);
    Mat::from_fn(h, n, |k, l| kernel[(h + k + n - l) % n])
}

fn half_cols_of_projector(spec: &GridSpec, sign: Sign) -> Mat<C64> {
    let n = spec.n_points();
    let h = spec.half_len();
    let kernel = projector_kernel(n, sign);
    Mat::from_fn(n, h, |k, l| kernel[(k + n - h - l) % n])
}

/// `θ = I⁻¹P_{ℝ⁺}P₊` (half-line ← full line).
pub fn build_theta(spec: &GridSpec) -> OperatorMatrix {
    OperatorMatrix { rows: Space::HalfLine(*spec), cols: Space::FullLine(*spec), mat: half_rows_of_projector(spec, Sign::Plus) }
}

/// `θ* = P₊I` (full line ← half-line).
pub fn build_theta_star(spec: &GridSpec) -> OperatorMatrix {
    OperatorMatrix { rows: Space::FullLine(*spec), cols: Space::HalfLine(*spec), mat: half_cols_of_projector(spec, Sign::Plus) }
}

/// `θ̄ = I⁻¹P_{ℝ⁺}P₋`.
pub fn build_theta_bar(spec: &GridSpec) -> OperatorMatrix {
    OperatorMatrix { rows: Space::HalfLine(*spec), cols: Space::FullLine(*spec), mat: half_rows_of_projector(spec, Sign::Minus) }
}

/// `θ̄* = P₋I`.
pub fn build_theta_bar_star(spec: &GridSpec) -> OperatorMatrix {
    OperatorMatrix { rows: Space::FullLine(*spec), cols: Space::HalfLine(*spec), mat: half_cols_of_projector(spec, Sign::Minus) }
}

pub const UNITARITY_TOL: f64 = 1e-10;

/// Energy representation `U` (half-line ← physical); identity by default.
pub fn build_energy_rep(spec: &GridSpec, u: Option<Mat<C64>>) -> Result<OperatorMatrix> {
    let h = spec.half_len();
    let mat = match u {
        None => linalg::identity(h),
        Some(m) => {
            if m.nrows() != h || m.ncols() != h {
                return Err(Error::Dimension { expected: h, got: m.nrows().max(m.ncols()) });
            }
            let deviation = linalg::unitarity_deviation(m.as_ref());
            if deviation > UNITARITY_TOL {
                return Err(Error::NotUnitary { deviation });
            }
            m
        }
    };
    OperatorMatrix::new(Space::HalfLine(*spec), Space::Physical(*spec), mat)
}

fn omega_from(theta_star: OperatorMatrix, energy: &OperatorMatrix) -> Result<OperatorMatrix> {
    if energy.is_identity() {
        if energy.rows != theta_star.cols {
            return Err(Error::SpecMismatch);
        }
        Ok(OperatorMatrix { rows: theta_star.rows, cols: energy.cols, mat: theta_star.mat })
    } else {
        theta_star.compose(energy)
    }
}

pub fn build_omega_f(spec: &GridSpec, energy: &OperatorMatrix) -> Result<OperatorMatrix> {
    omega_from(build_theta_star(spec), energy)
}

pub fn build_omega_b(spec: &GridSpec, energy: &OperatorMatrix) -> Result<OperatorMatrix> {
    omega_from(build_theta_bar_star(spec), energy)
}

pub fn build_omega(spec: &GridSpec, energy: &OperatorMatrix, direction: Direction) -> Result<OperatorMatrix> {
    match direction {
        Direction::Forward => build_omega_f(spec, energy),
        Direction::Backward => build_omega_b(spec, energy),
    }
}

/// Singular-value summary used to judge injectivity at a given resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub numerical_rank: usize,
    pub expected_rank: usize,
    pub rel_tol: f64,
}

impl InjectivityReport {
    pub fn is_injective(&self) -> bool {
        self.numerical_rank == self.expected_rank
    }
}

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

pub fn injectivity_report(omega: &OperatorMatrix, rel_tol: f64) -> Result<InjectivityReport> {
    let s = omega.singular_values()?;
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let expected_rank = omega.mat.ncols();
    let sigma_min = if s.len() < expected_rank { 0.0 } else { s.last().copied().unwrap_or(0.0) };
    let numerical_rank = s.iter().filter(|&&x| x > rel_tol * sigma_max).count();
    Ok(InjectivityReport { sigma_max, sigma_min, numerical_rank, expected_rank, rel_tol })
}

/// Fails with [`Error::RankDeficient`] when the numerical rank is short.
pub fn certify_injective(omega: &OperatorMatrix, rel_tol: f64) -> Result<InjectivityReport> {
    let r = injectivity_report(omega, rel_tol)?;
    if !r.is_injective() {
        return Err(Error::RankDeficient { rank: r.numerical_rank, expected: r.expected_rank, sigma_min: r.sigma_min });
    }
    Ok(r)
}

/// Energy-representation evolution: multiplication by `e^{−iσt}` on the half-line.
pub fn evolve_u(h: &HalfLineFunction, t: f64) -> HalfLineFunction {
    let spec = *h.spec();
    let off = spec.half_len();
    let samples = h.samples().iter().enumerate().map(|(k, z)| z * C64::from_polar(1.0, -spec.node(off + k) * t)).collect();
    HalfLineFunction::new(spec, samples).expect("length preserved")
}

/// A grid together with an energy representation; evaluates the maps
/// `Ω_f`, `Ω_b` and the physical evolution matrix-free.
#[derive(Clone, Debug)]
pub struct HardyModel {
    spec: GridSpec,
    energy: OperatorMatrix,
    trivial: bool,
}

impl HardyModel {
    pub fn new(spec: GridSpec, energy: OperatorMatrix) -> Result<Self> {
        if energy.rows != Space::HalfLine(spec) || energy.cols != Space::Physical(spec) {
            return Err(Error::SpecMismatch);
        }
        let trivial = energy.is_identity();
        Ok(Self { spec, energy, trivial })
    }

    pub fn identity(spec: GridSpec) -> Self {
        Self { spec, energy: build_energy_rep(&spec, None).expect("identity is unitary"), trivial: true }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn energy(&self) -> &OperatorMatrix {
        &self.energy
    }

    pub fn omega(&self, direction: Direction) -> Result<OperatorMatrix> {
        build_omega(&self.spec, &self.energy, direction)
    }

    fn check(&self, g: &HalfLineFunction) -> Result<()> {
        if g.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    pub fn to_energy(&self, g: &HalfLineFunction) -> Result<HalfLineFunction> {
        self.check(g)?;
        if self.trivial {
            return Ok(g.clone());
        }
        HalfLineFunction::new(self.spec, self.energy.apply(g.samples())?)
    }

    pub fn from_energy(&self, h: &HalfLineFunction) -> Result<HalfLineFunction> {
        self.check(h)?;
        if self.trivial {
            return Ok(h.clone());
        }
        HalfLineFunction::new(self.spec, linalg::apply(self.energy.mat.adjoint().to_owned().as_ref(), h.samples()))
    }

    /// Physical evolution `U(t) = U* e^{−iσt} U`.
    pub fn evolve(&self, g: &HalfLineFunction, t: f64) -> Result<HalfLineFunction> {
        self.from_energy(&evolve_u(&self.to_energy(g)?, t))
    }

    /// `Ω g` for the given direction, via FFT.
    pub fn apply_omega(&self, g: &HalfLineFunction, direction: Direction) -> Result<GridFunction> {
        let fft = FftPair::new(self.spec.n_points());
        self.apply_omega_with(&fft, g, direction)
    }

    pub fn apply_omega_with(&self, fft: &FftPair, g: &HalfLineFunction, direction: Direction) -> Result<GridFunction> {
        let mut buf = embed_i(&self.to_energy(g)?).into_samples();
        fft.project_in_place(&mut buf, direction.sign());
        GridFunction::new(self.spec, buf)
    }

    /// `Ω* f` for the given direction, via FFT.
    pub fn apply_omega_adjoint(&self, f: &GridFunction, direction: Direction) -> Result<HalfLineFunction> {
        if f.spec() != &self.spec {
            return Err(Error::SpecMismatch);
        }
        let mut buf = f.samples().to_vec();
        FftPair::new(self.spec.n_points()).project_in_place(&mut buf, direction.sign());
        let h = HalfLineFunction::new(self.spec, buf[self.spec.half_len()..].to_vec())?;
        self.from_energy(&h)
    }

    /// `(‖ΩU(t)g − T(t)Ωg‖, ‖ΩU(−t)g − T(−t)Ωg‖) / ‖g‖` with `T = T^{±}_u` per direction.
    pub fn intertwining_residual(&self, g: &HalfLineFunction, t: f64, direction: Direction) -> Result<(f64, f64)> {
        if !direction.admits(t) {
            return Err(Error::InvalidArgument(format!("t = {t} is on the wrong side for {direction:?}")));
        }
        let norm = g.norm();
        if norm == 0.0 {
            return Ok((0.0, 0.0));
        }
        let fft = FftPair::new(self.spec.n_points());
        let omega_g = self.apply_omega_with(&fft, g, direction)?;
        let residual = |s: f64| -> Result<f64> {
            let lhs = self.apply_omega_with(&fft, &self.evolve(g, s)?, direction)?;
            let mut rhs = translate_u(&omega_g, s).into_samples();
            fft.project_in_place(&mut rhs, direction.sign());
            let rhs = GridFunction::new(self.spec, rhs)?;
            Ok(lhs.sub(&rhs)?.norm() / norm)
        };
        Ok((residual(t)?, residual(-t)?))
    }
}
