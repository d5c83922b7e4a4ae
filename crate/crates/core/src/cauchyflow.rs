//! Cauchy transforms of half-line functions, their boundary values on ℝ, and
//! the norm flow between the upper and lower Hardy spaces.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{embed_i, restrict_iinv, GridFunction, HalfLineFunction, Support};
use crate::hardy::{translate_u, FftPair, Sign};
use crate::quasiaffine::{Direction, HardyModel};
use crate::C64;

/// `F(z) = (2πi)⁻¹ ∫₀^∞ h(x)/(x − z) dx` by the grid quadrature.
pub fn cauchy_transform(h: &HalfLineFunction, z: C64) -> Result<C64> {
    let spec = h.spec();
    let nodes = spec.half_nodes();
    let dist = nodes.iter().map(|&x| (C64::new(x, 0.0) - z).norm()).fold(f64::INFINITY, f64::min);
    if dist < 2.0 * spec.spacing() {
        return Err(Error::InvalidArgument(format!("z = {z} is within 2Δσ of the half-line nodes")));
    }
    let sum: C64 = nodes.iter().zip(h.samples()).map(|(&x, &f)| f / (C64::new(x, 0.0) - z)).sum();
    Ok(sum * spec.spacing() / C64::new(0.0, 2.0 * PI))
}

/// Boundary values `F⁺ = θ*h ∈ ℋ⁺` and `F⁻ = −θ̄*h ∈ ℋ⁻`.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchySplit {
    pub plus: GridFunction,
    pub minus: GridFunction,
    pub source: HalfLineFunction,
}

pub fn boundary_split(h: &HalfLineFunction) -> CauchySplit {
    let fft = FftPair::new(h.spec().n_points());
    let ih = embed_i(h);
    let mut plus = ih.samples().to_vec();
    fft.project_in_place(&mut plus, Sign::Plus);
    let mut minus = ih.samples().to_vec();
    fft.project_in_place(&mut minus, Sign::Minus);
    let spec = *h.spec();
    CauchySplit {
        plus: GridFunction::new(spec, plus).expect("length preserved"),
        minus: GridFunction::new(spec, minus).expect("length preserved").scale(C64::new(-1.0, 0.0)),
        source: h.clone(),
    }
}

impl CauchySplit {
    /// `|‖F⁺‖² + ‖F⁻‖² − ‖h‖²|`.
    pub fn pythagoras_defect(&self) -> f64 {
        (self.plus.norm_sq() + self.minus.norm_sq() - self.source.norm_sq()).abs()
    }
}

/// `I⁻¹(F⁺ − F⁻)`.
pub fn reconstruct(split: &CauchySplit, support: Support) -> Result<HalfLineFunction> {
    restrict_iinv(&split.plus.sub(&split.minus)?, support)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormFlowRow {
    pub t: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    /// `‖T⁺_u(t)Ω_fψ‖` for `t ≥ 0`, `‖T⁻_u(t)Ω_bψ‖` for `t < 0`.
    pub n_semigroup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormFlowTable {
    pub rows: Vec<NormFlowRow>,
    pub pythagoras_defect: f64,
    /// Largest gap between `n_semigroup` and the matching `n±`.
    pub semigroup_gap: f64,
    /// Largest increase of `n⁺` along increasing `t ≥ 0`, and of `n⁻` along
    /// decreasing `t ≤ 0`, restricted to `|t| < alias_horizon`.
    pub monotonicity_violation: f64,
    pub alias_horizon: f64,
    /// Sampled times with `|t| ≥ alias_horizon`, where the grid evolution is periodic.
    pub aliased_times: Vec<f64>,
}

pub const NORMALIZATION_TOL: f64 = 1e-8;

/// `n⁺(t) = ‖Ω_f U(t)ψ‖` and `n⁻(t) = ‖Ω_b U(t)ψ‖` over the sampled times.
pub fn norm_flow_curves(model: &HardyModel, psi: &HalfLineFunction, times: &[f64], exec: Execution) -> Result<NormFlowTable> {
    if (psi.norm() - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidArgument(format!("state must be normalized, norm = {}", psi.norm())));
    }
    let spec = *model.spec();
    let fft = FftPair::new(spec.n_points());
    let omega_f = model.apply_omega_with(&fft, psi, Direction::Forward)?;
    let omega_b = model.apply_omega_with(&fft, psi, Direction::Backward)?;
    let rows = exec.map(times, |&t| -> Result<NormFlowRow> {
        let evolved = model.evolve(psi, t)?;
        let n_plus = model.apply_omega_with(&fft, &evolved, Direction::Forward)?.norm();
        let n_minus = model.apply_omega_with(&fft, &evolved, Direction::Backward)?.norm();
        let (base, sign) = if t >= 0.0 { (&omega_f, Sign::Plus) } else { (&omega_b, Sign::Minus) };
        let mut buf = translate_u(base, t).into_samples();
        fft.project_in_place(&mut buf, sign);
        let n_semigroup = GridFunction::new(spec, buf)?.norm();
        Ok(NormFlowRow { t, n_plus, n_minus, n_semigroup })
    });
    let rows: Vec<NormFlowRow> = rows.into_iter().collect::<Result<_>>()?;
    let norm_sq = psi.norm_sq();
    let pythagoras_defect = rows.iter().map(|r| (r.n_plus * r.n_plus + r.n_minus * r.n_minus - norm_sq).abs()).fold(0.0, f64::max);
    let semigroup_gap = rows
        .iter()
        .map(|r| if r.t >= 0.0 { (r.n_semigroup - r.n_plus).abs() } else { (r.n_semigroup - r.n_minus).abs() })
        .fold(0.0, f64::max);
    let horizon = spec.alias_horizon();
    let aliased_times = times.iter().copied().filter(|t| t.abs() >= horizon).collect();
    let monotonicity_violation = monotonicity_violation(&rows, horizon);
    Ok(NormFlowTable { rows, pythagoras_defect, semigroup_gap, monotonicity_violation, alias_horizon: horizon, aliased_times })
}

fn monotonicity_violation(rows: &[NormFlowRow], horizon: f64) -> f64 {
    let mut fwd: Vec<(f64, f64)> = rows.iter().filter(|r| r.t >= 0.0 && r.t < horizon).map(|r| (r.t, r.n_plus)).collect();
    let mut bwd: Vec<(f64, f64)> = rows.iter().filter(|r| r.t <= 0.0 && -r.t < horizon).map(|r| (-r.t, r.n_minus)).collect();
    let worst = |v: &mut Vec<(f64, f64)>| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        let mut worst: f64 = 0.0;
        for &(_, n) in v.iter() {
            worst = worst.max(n - best);
            best = best.min(n);
        }
        worst
    };
    worst(&mut fwd).max(worst(&mut bwd))
}
