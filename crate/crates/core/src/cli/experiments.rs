//! Experiment drivers behind the command-line subcommands.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::*;
use super::output::{Cell, Invariant, Outcome, Table};
use crate::contraction::{characteristic_full, IntertwiningSuite};
use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, exp_vector, second_quantization, FockSpec, FockVector, Martingale};
use crate::grid::{gaussian, GridSpec, HalfLineFunction};
use crate::linalg;
use crate::qsde::{integrate, intertwining_diagnostics, rewrite_hat, scalar_clock_solution, Probe, ProcessSpec};
use crate::quasiaffine::{Direction, HardyModel, OperatorMatrix, Space};
use crate::timeobs::*;
use crate::{Execution, C64};

pub const RESOLVENT_TOL: f64 = 1e-9;
pub const EXACT_TOL: f64 = 1e-12;
pub const RISE_TOL: f64 = 1e-10;
pub const INTERTWINE_TOL: f64 = 1e-6;
pub const ASYMMETRY_FACTOR: f64 = 1e3;
pub const CHARACTERISTIC_TOL: f64 = 1e-7;
pub const BRACKET_TOL: f64 = 1e-10;
pub const SOLVABLE_FACTOR: f64 = 10.0;
pub const DRIFT_RATIO_RANGE: (f64, f64) = (1.5, 3.0);

/// Tolerances quoted in the manifest of each experiment.
pub fn tolerances(experiment: ExperimentName) -> BTreeMap<&'static str, f64> {
    let pairs: &[(&'static str, f64)] = match experiment {
        ExperimentName::Spectrum => &[("spectrum_slack", SPECTRUM_SLACK), ("resolvent", RESOLVENT_TOL), ("lambda_floor", LAMBDA_FLOOR)],
        ExperimentName::Flow => &[("pythagoras", EXACT_TOL), ("rise", RISE_TOL), ("time_snap", TIME_SNAP)],
        ExperimentName::Normflow => &[("pythagoras", EXACT_TOL), ("monotonicity", RISE_TOL)],
        ExperimentName::Xmu => &[("contraction", SPECTRUM_SLACK)],
        ExperimentName::Intertwine => &[("residual", INTERTWINE_TOL), ("asymmetry_factor", ASYMMETRY_FACTOR)],
        ExperimentName::Characteristic => &[("residual", CHARACTERISTIC_TOL), ("theta_zero", EXACT_TOL)],
        ExperimentName::FockCheck => &[("exact", EXACT_TOL)],
        ExperimentName::Qsde => &[
            ("bracket", BRACKET_TOL),
            ("initial", EXACT_TOL),
            ("solvable_factor", SOLVABLE_FACTOR),
            ("drift_ratio_min", DRIFT_RATIO_RANGE.0),
            ("drift_ratio_max", DRIFT_RATIO_RANGE.1),
        ],
    };
    pairs.iter().copied().collect()
}

pub fn run_experiment(config: &RunConfig, exec: Execution) -> Result<Outcome> {
    match &config.params {
        Params::Spectrum(p) => spectrum(config.grid_spec()?, p),
        Params::Flow(p) => flow(config.grid_spec()?, p, exec),
        Params::Normflow(p) => normflow(config.grid_spec()?, p, exec),
        Params::Xmu(p) => xmu(config.grid_spec()?, p, exec),
        Params::Intertwine(p) => intertwine(config.grid_spec()?, p, exec),
        Params::Characteristic(p) => characteristic(config.grid_spec()?, p, exec),
        Params::FockCheck(p) => fock_check(p, config.seed),
        Params::Qsde(p) => qsde(p, config.seed, exec),
    }
}

fn state(spec: GridSpec, s: &StateConfig) -> Result<HalfLineFunction> {
    HalfLineFunction::sample(spec, gaussian(s.center, s.width, s.wavenumber)).normalized()
}

fn c(z: C64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

fn spectrum(spec: GridSpec, p: &SpectrumParams) -> Result<Outcome> {
    let model = HardyModel::identity(spec);
    let omega = model.omega(p.direction)?;
    let obs = build_time_observable(&omega, Side::Physical, p.direction)?;
    let hat = build_time_observable(&omega, Side::Hardy, p.direction)?;
    let mut out = Outcome { table: Table::new(&["index", "lambda", "time"]), ..Default::default() };
    for (j, &lambda) in obs.eigvals().iter().enumerate() {
        out.table.push(vec![Cell::Int(j as u64), Cell::Num(lambda), Cell::Num(obs.time(j))]);
    }
    let lo = obs.eigvals().iter().copied().fold(f64::INFINITY, f64::min);
    out.invariants.push(Invariant::at_least("lambda_min", lo, -SPECTRUM_SLACK));
    out.invariants.push(Invariant::at_most("lambda_max", obs.lambda_max(), 1.0 + SPECTRUM_SLACK));
    for (i, &z) in p.resolvent_z.iter().enumerate() {
        out.invariants.push(Invariant::at_most(&format!("resolvent_z{i}"), resolvent_residual(&omega, z)?, RESOLVENT_TOL));
    }
    out.diag("lambda_max", obs.lambda_max());
    out.diag("nonzero_spectrum_mismatch", nonzero_spectrum_mismatch(&obs, &hat, 1e-8));
    out.diag("transport_residual_1_2", transport_residual(&obs, &hat, &omega, &SpectralInterval::new(1.0, 2.0)?)?);
    Ok(out)
}

fn flow(spec: GridSpec, p: &FlowParams, exec: Execution) -> Result<Outcome> {
    let model = HardyModel::identity(spec);
    let omega = model.omega(p.direction)?;
    let obs = build_time_observable(&omega, Side::Physical, p.direction)?;
    let sign = if p.direction == Direction::Forward { 1.0 } else { -1.0 };
    let times: Vec<f64> = (0..=p.steps).map(|k| sign * p.tmax * k as f64 / p.steps as f64).collect();
    let curve = spectral_flow_experiment(&model, &obs, &state(spec, &p.state)?, p.a, &times, p.threshold, exec)?;
    let mut out = Outcome { table: Table::new(&["t", "mass_low", "mass_high"]), ..Default::default() };
    for k in 0..times.len() {
        out.table.push_nums(&[times[k], curve.mass_low[k], curve.mass_high[k]]);
    }
    out.invariants.push(Invariant::at_most("pythagoras", curve.pythagoras_defect(), EXACT_TOL));
    out.invariants.push(Invariant::at_most("max_rise", curve.max_rise, RISE_TOL));
    let lowest = curve.mass_low.iter().copied().fold(f64::INFINITY, f64::min);
    out.invariants.push(Invariant::at_most("min_mass_low", lowest, p.threshold));
    out.diag("first_crossing", curve.first_crossing.unwrap_or(f64::INFINITY));
    out.diag("alias_horizon", curve.alias_horizon);
    Ok(out)
}

fn normflow(spec: GridSpec, p: &NormflowParams, exec: Execution) -> Result<Outcome> {
    let model = HardyModel::identity(spec);
    let n = p.steps as isize;
    let times: Vec<f64> = (-n..=n).map(|k| p.tmax * k as f64 / p.steps as f64).collect();
    let table = crate::cauchyflow::norm_flow_curves(&model, &state(spec, &p.state)?, &times, exec)?;
    let mut out = Outcome { table: Table::new(&["t", "n_plus", "n_minus", "n_semigroup"]), ..Default::default() };
    for r in &table.rows {
        out.table.push_nums(&[r.t, r.n_plus, r.n_minus, r.n_semigroup]);
    }
    out.invariants.push(Invariant::at_most("pythagoras", table.pythagoras_defect, EXACT_TOL));
    out.invariants.push(Invariant::at_most("monotonicity", table.monotonicity_violation, RISE_TOL));
    out.diag("semigroup_gap", table.semigroup_gap);
    out.diag("alias_horizon", table.alias_horizon);
    out.diag("aliased_times", table.aliased_times.len() as f64);
    Ok(out)
}

fn xmu(spec: GridSpec, p: &XmuParams, exec: Execution) -> Result<Outcome> {
    let rows = xmu_program(&HardyModel::identity(spec), &p.mu, exec)?;
    let mut out = Outcome { table: Table::new(&["mu_re", "mu_im", "norm_x_sq", "norm_psi_sq", "ratio"]), ..Default::default() };
    for r in &rows {
        out.table.push_nums(&[r.mu.re, r.mu.im, r.norm_x_sq, r.norm_psi_sq, r.ratio]);
    }
    let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    out.invariants.push(Invariant::at_most("max_ratio", worst, 1.0 + SPECTRUM_SLACK));
    Ok(out)
}

/// Multiples of the frequency bin `π/L`, spread over `(0, tmax]`.
pub fn bin_aligned_times(spec: &GridSpec, tmax: f64, steps: usize) -> Vec<f64> {
    let dt = spec.freq_step();
    let mut bins: Vec<u64> = (1..=steps).map(|j| ((tmax * j as f64 / steps as f64) / dt).round().max(1.0) as u64).collect();
    bins.dedup();
    bins.into_iter().map(|k| k as f64 * dt).collect()
}

fn intertwine(spec: GridSpec, p: &IntertwineParams, exec: Execution) -> Result<Outcome> {
    let model = HardyModel::identity(spec);
    let g = state(spec, &p.state)?;
    let sign = if p.direction == Direction::Forward { 1.0 } else { -1.0 };
    let times: Vec<f64> = bin_aligned_times(&spec, p.tmax, p.steps).into_iter().map(|t| sign * t).collect();
    let rows = exec.map(&times, |&t| model.intertwining_residual(&g, t, p.direction));
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let mut out = Outcome { table: Table::new(&["t", "residual", "wrong_side"]), ..Default::default() };
    for (t, r) in times.iter().zip(&rows) {
        out.table.push_nums(&[*t, r.0, r.1]);
    }
    let worst = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let weakest = rows.iter().map(|r| if r.0 > 0.0 { r.1 / r.0 } else { f64::INFINITY }).fold(f64::INFINITY, f64::min);
    out.invariants.push(Invariant::at_most("residual", worst, INTERTWINE_TOL));
    out.invariants.push(Invariant::at_least("asymmetry", weakest, ASYMMETRY_FACTOR));
    Ok(out)
}

fn characteristic(spec: GridSpec, p: &CharacteristicParams, exec: Execution) -> Result<Outcome> {
    let model = HardyModel::identity(spec);
    let omega = model.omega(Direction::Forward)?;
    let suite = IntertwiningSuite::new(omega.mat(), p.angle_tol)?;
    let reports = exec.map(&p.lambda, |&l| suite.intertwine(l));
    let reports: Vec<_> = reports.into_iter().collect::<Result<_>>()?;
    let mut out = Outcome {
        table: Table::new(&["lambda_re", "lambda_im", "res_star", "res_plain", "inclusion_plain", "inclusion_star"]),
        ..Default::default()
    };
    for r in &reports {
        let [a, b] = c(r.lambda);
        out.table.push(vec![a, b, Cell::Num(r.res_star), Cell::Num(r.res_plain), Cell::Num(r.inclusion_plain), Cell::Num(r.inclusion_star)]);
    }
    let theta0 = characteristic_full(suite.c(), &suite.defect_c, &suite.defect_c, C64::new(0.0, 0.0))?;
    let gap = &theta0 + suite.c();
    let theta_zero = linalg::op_norm((&gap * &suite.defect_c.basis).as_ref());
    let worst = reports.iter().map(|r| r.res_star.max(r.res_plain)).fold(0.0, f64::max);
    out.invariants.push(Invariant::at_most("theta_zero", theta_zero, EXACT_TOL));
    out.invariants.push(Invariant::at_most("intertwining", worst, CHARACTERISTIC_TOL));
    out.invariants.push(Invariant::at_most("defect_angle", suite.defect_angle(), p.angle_tol));
    out.diag("cut", suite.cut.delta);
    out.diag("defect_rank_c", suite.defect_c.rank() as f64);
    out.diag("defect_rank_c_hat", suite.defect_c_hat.rank() as f64);
    out.diag("defect_rank_omega", suite.defect_omega.rank() as f64);
    out.diag("inclusion", reports.iter().map(|r| r.inclusion_plain.max(r.inclusion_star)).fold(0.0, f64::max));
    Ok(out)
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let v = linalg::random_complex_vec(rng, n);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn random_contraction(rng: &mut ChaCha8Rng, n: usize) -> Mat<C64> {
    let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    linalg::contraction_with_singular_values(rng, n, n, &s)
}

fn fock_check(p: &FockCheckParams, seed: u64) -> Result<Outcome> {
    let spec = Arc::new(FockSpec::new(p.base_dim, p.n_max)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut record = |name: &'static str, r: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(r);
    };
    let d = p.base_dim;
    let top = p.n_max - 1;
    for _ in 0..p.samples {
        let (u, v, w) = (unit_vector(&mut rng, d), unit_vector(&mut rng, d), unit_vector(&mut rng, d));
        let cm = random_contraction(&mut rng, d);
        let c2 = random_contraction(&mut rng, d);
        let ev = exp_vector(&spec, &v)?;

        let below_top = exp_vector(&spec, &w)?.truncated(top);
        let (a_u, ad_v) = (annihilation(&spec, &u)?, creation(&spec, &v)?);
        let lhs = a_u.apply(&ad_v.apply(&below_top)?)?.sub(&ad_v.apply(&a_u.apply(&below_top)?)?)?;
        record("ccr", lhs.sub(&below_top.scale(dot(&u, &v)))?.norm());

        let series: C64 = (0..=p.n_max).scan(C64::new(1.0, 0.0), |term, n| {
            let out = *term;
            *term = *term * dot(&u, &v) / (n + 1) as f64;
            Some(out)
        }).sum();
        record("exp_inner", (exp_vector(&spec, &u)?.inner(&ev)? - series).norm());

        let gamma = second_quantization(&spec, &spec, cm.as_ref())?;
        let cu = linalg::apply(cm.as_ref(), &u);
        record("gamma_exp", gamma.apply(&exp_vector(&spec, &u)?)?.sub(&exp_vector(&spec, &cu)?)?.norm());

        let prod = second_quantization(&spec, &spec, (&cm * &c2).as_ref())?;
        let composed = gamma.compose(&second_quantization(&spec, &spec, c2.as_ref())?)?;
        record("functoriality", linalg::op_norm((prod.mat() - composed.mat()).as_ref()));

        let cv = linalg::apply(cm.as_ref(), &v);
        let ecv = exp_vector(&spec, &cv)?;
        let lhs = gamma.apply(&creation(&spec, &u)?.apply(&ev)?)?;
        let rhs = creation(&spec, &cu)?.apply(&ecv)?;
        record("creation_intertwine", lhs.sub(&rhs)?.norm());

        let lhs = gamma.apply(&a_u.apply(&ev)?)?;
        let rhs = annihilation(&spec, &cu)?.apply(&ecv)?;
        let predicted: FockVector = ecv.truncated(top).scale(dot(&u, &v) - dot(&cu, &cv));
        record("annihilation_discrepancy", lhs.sub(&rhs)?.sub(&predicted)?.norm());
    }
    let mut out = Outcome { table: Table::new(&["check", "residual"]), ..Default::default() };
    for (name, r) in &worst {
        out.table.push(vec![Cell::Text(name.to_string()), Cell::Num(*r)]);
        out.invariants.push(Invariant::at_most(name, *r, EXACT_TOL));
    }
    out.diag("total_dim", spec.total_dim() as f64);
    Ok(out)
}

fn literal(m: &MatrixLiteral) -> Mat<C64> {
    Mat::from_fn(m.len(), m.len(), |i, j| m[i][j])
}

fn time_grid(tmax: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|k| tmax * k as f64 / steps as f64).collect()
}

fn qsde(p: &QsdeParams, seed: u64, exec: Execution) -> Result<Outcome> {
    let (l, s, h) = (literal(&p.l), literal(&p.s), literal(&p.h));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = p.singular_values.len();
    let omega = linalg::contraction_with_singular_values(&mut rng, b, b, &p.singular_values);
    let om = OperatorMatrix::new(Space::Abstract(b), Space::Abstract(b), omega.clone())?;
    let obs = Arc::new(build_time_observable(&om, Side::Physical, Direction::Forward)?);
    let martingale = Martingale::new(unit_vector(&mut rng, b), obs)?;
    let fock = Arc::new(FockSpec::new(b, p.n_max)?);
    let d = h.nrows();
    let probes: Vec<Probe> = (0..p.probes)
        .map(|_| Probe {
            h: unit_vector(&mut rng, d),
            u: unit_vector(&mut rng, b),
            h2: unit_vector(&mut rng, d),
            u2: unit_vector(&mut rng, b),
        })
        .collect();
    let spec = ProcessSpec::new(l.clone(), s.clone(), h.clone(), linalg::identity(b), martingale, fock.clone(), time_grid(p.tmax, p.steps))?;
    let hat_spec = rewrite_hat(&spec, omega.as_ref())?;
    let (phys, hat) = {
        let sides = [(&spec, Side::Physical), (&hat_spec, Side::Hardy)];
        let mut paths = exec.map(&sides, |(sp, side)| integrate(sp, *side)).into_iter();
        (paths.next().expect("two paths")?, paths.next().expect("two paths")?)
    };
    let fine = integrate(&spec.with_time_grid(time_grid(p.tmax, 2 * p.steps))?, Side::Physical)?;
    let report = intertwining_diagnostics(&spec, &hat_spec, &phys, &hat, omega.as_ref(), &probes, exec)?;

    let mut out = Outcome {
        table: Table::new(&[
            "probe", "t", "drift", "m_phys_re", "m_phys_im", "m_hat_re", "m_hat_im", "clock_phys", "clock_hat", "clock_transported",
        ]),
        ..Default::default()
    };
    let k = phys.times.len();
    for (i, r) in report.rows.iter().enumerate() {
        let step = i % k;
        let drift = if step == 0 { 0.0 } else { phys.increments[step - 1].drift };
        let [a, bb] = c(r.m_phys);
        let [e, f] = c(r.m_hat);
        out.table.push(vec![
            Cell::Int(r.probe as u64),
            Cell::Num(r.t),
            Cell::Num(drift),
            a,
            bb,
            e,
            f,
            Cell::Num(r.clock_phys),
            Cell::Num(r.clock_hat),
            Cell::Num(r.clock_transported),
        ]);
    }
    out.invariants.push(Invariant::at_most("bracket_clock", report.bracket_residual, BRACKET_TOL));
    out.invariants.push(Invariant::at_most("initial_phys", report.initial_phys_residual, EXACT_TOL));
    out.invariants.push(Invariant::at_most("initial_hat", report.initial_hat_residual, EXACT_TOL));
    let ratio = phys.unitarity_drift / fine.unitarity_drift;
    out.invariants.push(Invariant::at_least("drift_ratio_min", ratio, DRIFT_RATIO_RANGE.0));
    out.invariants.push(Invariant::at_most("drift_ratio_max", ratio, DRIFT_RATIO_RANGE.1));
    let dt = p.tmax / p.steps as f64;
    let solvable = linalg::op_norm(l.as_ref()) == 0.0 && linalg::frobenius((&s - &linalg::identity(d)).as_ref()) == 0.0;
    if solvable {
        let mut err = 0.0f64;
        for (j, &t) in phys.times.iter().enumerate() {
            let clock = spec.martingale().at(t)?.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let exact = scalar_clock_solution(h.as_ref(), clock, fock.total_dim())?;
            err = err.max(linalg::op_norm((&phys.unitaries[j] - &exact).as_ref()));
        }
        out.invariants.push(Invariant::at_most("solvable_closed_form", err, SOLVABLE_FACTOR * dt));
    }
    out.diag("dt", dt);
    out.diag("unitarity_drift", phys.unitarity_drift);
    out.diag("unitarity_drift_half_step", fine.unitarity_drift);
    out.diag("unitarity_drift_hat", hat.unitarity_drift);
    out.diag("max_discrepancy", report.max_discrepancy);
    out.diag("jumps", spec.martingale().jump_times().len() as f64);
    Ok(out)
}

pub fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::InvalidGrid(..) | Error::InvalidArgument(_) | Error::Dimension { .. } | Error::SpecMismatch | Error::NotUnitary { .. } | Error::NotHermitian { .. } | Error::NotProjector { .. } | Error::NotContraction { .. })
}
