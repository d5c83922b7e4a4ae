//! Uniform grids for L²(ℝ) and L²(ℝ⁺) with flat quadrature weights.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Placement of the nodes inside the cells of width `Δσ`.
///
/// `CellCentered` puts nodes at cell midpoints (`σ_k = −L + (k + ½)Δσ`), so the
/// rectangle rule is the midpoint rule and integrals over `[0, ∞)` carry no
/// endpoint bias. `Vertex` puts nodes on the left cell edges (`σ_k = −L + kΔσ`),
/// with `σ = 0` exactly on node `N/2`. In both cases the half-line is the
/// index block `N/2..N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    #[default]
    CellCentered,
    Vertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_points: usize,
    halfwidth: f64,
    alignment: Alignment,
}

pub fn make_grid(n_points: usize, halfwidth: f64) -> Result<GridSpec> {
    GridSpec::new(n_points, halfwidth)
}

impl GridSpec {
    pub fn new(n_points: usize, halfwidth: f64) -> Result<Self> {
        Self::with_alignment(n_points, halfwidth, Alignment::default())
    }

    pub fn with_alignment(n_points: usize, halfwidth: f64, alignment: Alignment) -> Result<Self> {
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n_points must be even and at least 8, got {n_points}")));
        }
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(Error::InvalidGrid(format!("halfwidth must be positive, got {halfwidth}")));
        }
        Ok(Self { n_points, halfwidth, alignment })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_len(&self) -> usize {
        self.n_points / 2
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn alignment(&self) -> Alignment {
        self.alignment
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.halfwidth / self.n_points as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        let offset = match self.alignment {
            Alignment::CellCentered => 0.5,
            Alignment::Vertex => 0.0,
        };
        -self.halfwidth + (k as f64 + offset) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.node(k)).collect()
    }

    /// Nodes of the half-line block.
    pub fn half_nodes(&self) -> Vec<f64> {
        (self.half_len()..self.n_points).map(|k| self.node(k)).collect()
    }

    /// Frequency bin step `Δτ = π/L`.
    pub fn freq_step(&self) -> f64 {
        PI / self.halfwidth
    }

    /// `τ_m` for `m = −N/2..N/2−1`, passed as an offset index `j = m + N/2`.
    pub fn freq(&self, j: usize) -> f64 {
        (j as f64 - self.half_len() as f64) * self.freq_step()
    }

    /// `π/Δσ`: beyond this |t| the grid evolution `e^{−iσt}` aliases,
    /// because it is periodic in `t` with period `2π/Δσ`.
    pub fn alias_horizon(&self) -> f64 {
        PI / self.spacing()
    }

    fn check(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }
}

fn weighted_inner(dx: f64, f: &[C64], g: &[C64]) -> C64 {
    f.iter().zip(g).map(|(a, b)| a.conj() * b).sum::<C64>() * dx
}

/// Samples on the full grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    samples: Vec<C64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != spec.n_points() {
            return Err(Error::Dimension { expected: spec.n_points(), got: samples.len() });
        }
        Ok(Self { spec, samples })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, samples: vec![C64::new(0.0, 0.0); spec.n_points()] }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn inner(&self, other: &GridFunction) -> Result<C64> {
        self.spec.check(&other.spec)?;
        Ok(weighted_inner(self.spec.spacing(), &self.samples, &other.samples))
    }

    pub fn norm_sq(&self) -> f64 {
        self.spec.spacing() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Norm of the part supported on the negative half-line.
    pub fn negative_norm(&self) -> f64 {
        let h = self.spec.half_len();
        (self.spec.spacing() * self.samples[..h].iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { spec: self.spec, samples: self.samples.iter().map(|z| z * c).collect() }
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.spec.check(&other.spec)?;
        Ok(Self { spec: self.spec, samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.spec.check(&other.spec)?;
        Ok(Self { spec: self.spec, samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect() })
    }
}

/// Samples on the half-line block `σ_k ≥ 0` of a parent grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLineFunction {
    spec: GridSpec,
    samples: Vec<C64>,
}

impl HalfLineFunction {
    pub fn new(spec: GridSpec, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != spec.half_len() {
            return Err(Error::Dimension { expected: spec.half_len(), got: samples.len() });
        }
        Ok(Self { spec, samples })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, samples: vec![C64::new(0.0, 0.0); spec.half_len()] }
    }

    pub fn sample(spec: GridSpec, rule: impl Fn(f64) -> C64) -> Self {
        Self { spec, samples: spec.half_nodes().into_iter().map(rule).collect() }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn inner(&self, other: &HalfLineFunction) -> Result<C64> {
        self.spec.check(&other.spec)?;
        Ok(weighted_inner(self.spec.spacing(), &self.samples, &other.samples))
    }

    pub fn norm_sq(&self) -> f64 {
        self.spec.spacing() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { spec: self.spec, samples: self.samples.iter().map(|z| z * c).collect() }
    }

    pub fn sub(&self, other: &HalfLineFunction) -> Result<Self> {
        self.spec.check(&other.spec)?;
        Ok(Self { spec: self.spec, samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect() })
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("cannot normalize the zero function".into()));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }
}

pub fn sample(spec: GridSpec, rule: impl Fn(f64) -> C64) -> GridFunction {
    GridFunction { spec, samples: spec.nodes().into_iter().map(rule).collect() }
}

pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<C64> {
    f.inner(g)
}

/// The inclusion `I`: extend by zero to the negative half-line.
pub fn embed_i(h: &HalfLineFunction) -> GridFunction {
    let mut samples = vec![C64::new(0.0, 0.0); h.spec.half_len()];
    samples.extend_from_slice(&h.samples);
    GridFunction { spec: h.spec, samples }
}

/// How [`restrict_iinv`] treats content on the negative half-line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Support {
    /// Discard it (realizes `I⁻¹P_{ℝ⁺}`).
    Lax,
    /// Reject when its norm exceeds `tol·‖f‖`.
    Strict { tol: f64 },
}

pub fn restrict_iinv(f: &GridFunction, support: Support) -> Result<HalfLineFunction> {
    if let Support::Strict { tol } = support {
        let neg = f.negative_norm();
        if neg > tol * f.norm() {
            return Err(Error::SupportViolation { norm: neg, tol });
        }
    }
    let h = f.spec.half_len();
    Ok(HalfLineFunction { spec: f.spec, samples: f.samples[h..].to_vec() })
}

/// `x_μ(σ) = 1/(σ − μ)`.
pub fn resolvent_kernel(mu: C64) -> impl Fn(f64) -> C64 {
    move |s| (C64::new(s, 0.0) - mu).inv()
}

/// `exp(−(σ − center)²/(2 width²))`, optionally modulated by `e^{ikσ}`.
pub fn gaussian(center: f64, width: f64, wavenumber: f64) -> impl Fn(f64) -> C64 {
    move |s| {
        let d = (s - center) / width;
        C64::from_polar((-0.5 * d * d).exp(), wavenumber * s)
    }
}
