//! Discrete Hardy spaces: Riesz projections by frequency support, the
//! translation group `u(t)` and the Toeplitz compressions `T±_u(t)`.
//!
//! Fourier convention: `f(σ_k) = (NΔσ)^{-1/2} Σ_m c_m e^{iσ_k τ_m}` with
//! `τ_m = mπ/L`, `m = −N/2..N/2−1`. The discrete ℋ⁺ is the span of the bins
//! `m ≥ 0` (the `τ = 0` bin included), ℋ⁻ the bins `m < 0` (Nyquist
//! included), so `P₊ + P₋ = 1` exactly.

use faer::Mat;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// Whether the DFT bin index `j` (in FFT order) belongs to this side.
    fn keeps(self, j: usize, n: usize) -> bool {
        match self {
            Sign::Plus => j < n / 2,
            Sign::Minus => j >= n / 2,
        }
    }
}

/// Forward/inverse FFT plans for one grid size.
#[derive(Clone)]
pub struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), n }
    }

    /// Zeroes the frequency bins outside `sign`, in place.
    pub fn project_in_place(&self, buf: &mut [C64], sign: Sign) {
        assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for (j, z) in buf.iter_mut().enumerate() {
            *z = if sign.keeps(j, self.n) { *z * scale } else { C64::new(0.0, 0.0) };
        }
        self.inverse.process(buf);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySpectrum {
    spec: GridSpec,
    coeffs: Vec<C64>,
}

impl FrequencySpectrum {
    pub fn from_coeffs(spec: GridSpec, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != spec.n_points() {
            return Err(Error::Dimension { expected: spec.n_points(), got: coeffs.len() });
        }
        Ok(Self { spec, coeffs })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Coefficients in order `m = −N/2..N/2−1`.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Energy in the bins `m < 0`.
    pub fn negative_energy(&self) -> f64 {
        self.coeffs[..self.spec.half_len()].iter().map(|c| c.norm_sqr()).sum()
    }
}

pub fn fourier(f: &GridFunction) -> FrequencySpectrum {
    let spec = *f.spec();
    let n = spec.n_points();
    let mut buf = f.samples().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = (spec.spacing() / n as f64).sqrt();
    let s0 = spec.node(0);
    let coeffs = (0..n)
        .map(|j| {
            let m = j as isize - (n / 2) as isize;
            let fft_index = m.rem_euclid(n as isize) as usize;
            let tau = spec.freq(j);
            buf[fft_index] * C64::from_polar(norm, -s0 * tau)
        })
        .collect();
    FrequencySpectrum { spec, coeffs }
}

pub fn inverse_fourier(s: &FrequencySpectrum) -> GridFunction {
    let spec = s.spec;
    let n = spec.n_points();
    let norm = 1.0 / (spec.spacing() * n as f64).sqrt();
    let s0 = spec.node(0);
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for (j, c) in s.coeffs.iter().enumerate() {
        let m = j as isize - (n / 2) as isize;
        let tau = spec.freq(j);
        buf[m.rem_euclid(n as isize) as usize] = c * C64::from_polar(norm, s0 * tau);
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    GridFunction::new(spec, buf).expect("length preserved")
}

pub fn riesz_project(f: &GridFunction, sign: Sign) -> GridFunction {
    let mut buf = f.samples().to_vec();
    FftPair::new(buf.len()).project_in_place(&mut buf, sign);
    GridFunction::new(*f.spec(), buf).expect("length preserved")
}

pub fn translate_u(f: &GridFunction, t: f64) -> GridFunction {
    let spec = *f.spec();
    let samples = f.samples().iter().enumerate().map(|(k, z)| z * C64::from_polar(1.0, -spec.node(k) * t)).collect();
    GridFunction::new(spec, samples).expect("length preserved")
}

pub fn toeplitz(f: &GridFunction, t: f64, sign: Sign) -> GridFunction {
    riesz_project(&translate_u(f, t), sign)
}

/// First column of the circulant matrix of `P_sign`: `P[k, l] = kernel[(k − l) mod N]`.
pub fn projector_kernel(n: usize, sign: Sign) -> Vec<C64> {
    let mut e0 = vec![C64::new(0.0, 0.0); n];
    e0[0] = C64::new(1.0, 0.0);
    FftPair::new(n).project_in_place(&mut e0, sign);
    e0
}

/// Dense `N × N` matrix of `P_sign` on the grid.
pub fn projector_matrix(spec: &GridSpec, sign: Sign) -> Mat<C64> {
    let n = spec.n_points();
    let kernel = projector_kernel(n, sign);
    Mat::from_fn(n, n, |k, l| kernel[(k + n - l) % n])
}

/// Largest deviation of `P₊` from exact complementarity/idempotency on `f`.
pub fn projection_identity_residual(f: &GridFunction) -> Result<f64> {
    let p = riesz_project(f, Sign::Plus);
    let m = riesz_project(f, Sign::Minus);
    let scale = f.norm().max(f64::MIN_POSITIVE);
    let sum = p.add(&m)?.sub(f)?.norm();
    let idem = riesz_project(&p, Sign::Plus).sub(&p)?.norm();
    let cross = p.inner(&m)?.norm();
    if !(sum.is_finite() && idem.is_finite()) {
        return Err(Error::InvalidArgument("non-finite samples".into()));
    }
    Ok((sum.max(idem) / scale).max(cross / (scale * scale)))
}
