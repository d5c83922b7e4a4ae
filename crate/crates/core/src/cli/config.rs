//! Run configuration: JSON parsing, validation and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::grid::{Alignment, GridSpec};
use crate::quasiaffine::Direction;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Spectrum,
    Flow,
    Normflow,
    Xmu,
    Intertwine,
    Characteristic,
    FockCheck,
    Qsde,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::Spectrum,
        ExperimentName::Flow,
        ExperimentName::Normflow,
        ExperimentName::Xmu,
        ExperimentName::Intertwine,
        ExperimentName::Characteristic,
        ExperimentName::FockCheck,
        ExperimentName::Qsde,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Spectrum => "spectrum",
            ExperimentName::Flow => "flow",
            ExperimentName::Normflow => "normflow",
            ExperimentName::Xmu => "xmu",
            ExperimentName::Intertwine => "intertwine",
            ExperimentName::Characteristic => "characteristic",
            ExperimentName::FockCheck => "fock-check",
            ExperimentName::Qsde => "qsde",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == name)
    }

    fn needs_grid(self) -> bool {
        !matches!(self, ExperimentName::FockCheck | ExperimentName::Qsde)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_points: usize,
    pub halfwidth: f64,
    #[serde(default)]
    pub alignment: Alignment,
}

impl GridConfig {
    pub fn spec(&self) -> crate::Result<GridSpec> {
        GridSpec::with_alignment(self.n_points, self.halfwidth, self.alignment)
    }
}

/// Gaussian wave packet `exp(−(σ−c)²/(2w²) + ikσ)` on the half-line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub wavenumber: f64,
}

fn default_forward() -> Direction {
    Direction::Forward
}

fn default_resolvent_points() -> Vec<C64> {
    vec![C64::new(2.0, 0.0), C64::new(1.0, 1.0)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    #[serde(default = "default_forward")]
    pub direction: Direction,
    #[serde(default = "default_resolvent_points")]
    pub resolvent_z: Vec<C64>,
}

fn default_threshold() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowParams {
    pub a: f64,
    pub tmax: f64,
    pub steps: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_forward")]
    pub direction: Direction,
    pub state: StateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormflowParams {
    pub tmax: f64,
    pub steps: usize,
    pub state: StateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XmuParams {
    pub mu: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntertwineParams {
    pub tmax: f64,
    pub steps: usize,
    #[serde(default = "default_forward")]
    pub direction: Direction,
    pub state: StateConfig,
}

fn default_angle_tol() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacteristicParams {
    pub lambda: Vec<C64>,
    #[serde(default = "default_angle_tol")]
    pub angle_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockCheckParams {
    pub base_dim: usize,
    pub n_max: usize,
    /// Number of random vector triples per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    8
}

fn default_probes() -> usize {
    2
}

/// Complex matrix literal, row-major, entries as `[re, im]`.
pub type MatrixLiteral = Vec<Vec<C64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QsdeParams {
    pub l: MatrixLiteral,
    pub s: MatrixLiteral,
    pub h: MatrixLiteral,
    /// Singular values of the seeded base contraction `Ω`; the largest must be 1.
    pub singular_values: Vec<f64>,
    pub n_max: usize,
    pub tmax: f64,
    pub steps: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Spectrum(SpectrumParams),
    Flow(FlowParams),
    Normflow(NormflowParams),
    Xmu(XmuParams),
    Intertwine(IntertwineParams),
    Characteristic(CharacteristicParams),
    FockCheck(FockCheckParams),
    Qsde(QsdeParams),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    #[serde(default)]
    grid: Option<GridConfig>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    format: Format,
    #[serde(default)]
    output: Option<PathBuf>,
    params: Value,
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: ExperimentName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub seed: u64,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub params: Params,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown experiment {0:?}; expected one of spectrum, flow, normflow, xmu, intertwine, characteristic, fock-check, qsde")]
    UnknownExperiment(String),
    #[error("config is for experiment {found:?} but the {requested:?} subcommand was invoked")]
    ExperimentMismatch { requested: String, found: String },
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub halfwidth: Option<f64>,
    pub a: Option<f64>,
    pub tmax: Option<f64>,
    pub steps: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let experiment = ExperimentName::parse(&raw.experiment).ok_or_else(|| ConfigError::UnknownExperiment(raw.experiment.clone()))?;
        let params = parse_params(experiment, raw.params)?;
        let config = RunConfig { experiment, grid: raw.grid, seed: raw.seed, format: raw.format, output: raw.output, params };
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if o.n.is_some() || o.halfwidth.is_some() {
            let grid = self.grid.as_mut().ok_or_else(|| invalid("grid", format!("{} takes no grid", self.experiment.as_str())))?;
            if let Some(n) = o.n {
                grid.n_points = n;
            }
            if let Some(l) = o.halfwidth {
                grid.halfwidth = l;
            }
        }
        if let Some(a) = o.a {
            match &mut self.params {
                Params::Flow(p) => p.a = a,
                _ => return Err(invalid("a", format!("{} has no parameter a", self.experiment.as_str()))),
            }
        }
        if o.tmax.is_some() || o.steps.is_some() {
            let (tmax, steps) = match &mut self.params {
                Params::Flow(p) => (&mut p.tmax, &mut p.steps),
                Params::Normflow(p) => (&mut p.tmax, &mut p.steps),
                Params::Intertwine(p) => (&mut p.tmax, &mut p.steps),
                Params::Qsde(p) => (&mut p.tmax, &mut p.steps),
                _ => return Err(invalid("tmax/steps", format!("{} has no time axis", self.experiment.as_str()))),
            };
            if let Some(t) = o.tmax {
                *tmax = t;
            }
            if let Some(s) = o.steps {
                *steps = s;
            }
        }
        if let Some(f) = o.format {
            self.format = f;
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
        self.validate()
    }

    /// Data file path: the configured output, or `<experiment>.<ext>`.
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{}", self.experiment.as_str(), self.format.extension())))
    }

    pub fn grid_spec(&self) -> crate::Result<GridSpec> {
        match &self.grid {
            Some(g) => g.spec(),
            None => Err(crate::Error::InvalidArgument(format!("{} takes no grid", self.experiment.as_str()))),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.grid, self.experiment.needs_grid()) {
            (None, true) => return Err(invalid("grid", "required for this experiment")),
            (Some(_), false) => return Err(invalid("grid", format!("{} takes no grid", self.experiment.as_str()))),
            (Some(g), true) => {
                g.spec().map_err(|e| invalid("grid", e.to_string()))?;
            }
            (None, false) => {}
        }
        let positive = |field: &str, x: f64| if x > 0.0 && x.is_finite() { Ok(()) } else { Err(invalid(field, format!("must be positive, got {x}"))) };
        let nonzero = |field: &str, n: usize| if n > 0 { Ok(()) } else { Err(invalid(field, "must be at least 1")) };
        let state = |s: &StateConfig| {
            positive("state.width", s.width)?;
            if s.center.is_finite() && s.wavenumber.is_finite() {
                Ok(())
            } else {
                Err(invalid("state", "non-finite value"))
            }
        };
        match &self.params {
            Params::Spectrum(p) => {
                if p.resolvent_z.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(invalid("params.resolvent_z", "non-finite value"));
                }
            }
            Params::Flow(p) => {
                if !(p.a > 1.0) {
                    return Err(invalid("params.a", format!("must exceed 1, got {}", p.a)));
                }
                positive("params.tmax", p.tmax)?;
                nonzero("params.steps", p.steps)?;
                positive("params.threshold", p.threshold)?;
                state(&p.state)?;
            }
            Params::Normflow(p) => {
                positive("params.tmax", p.tmax)?;
                nonzero("params.steps", p.steps)?;
                state(&p.state)?;
            }
            Params::Xmu(p) => {
                if p.mu.is_empty() {
                    return Err(invalid("params.mu", "empty list"));
                }
                if let Some(mu) = p.mu.iter().find(|mu| !(mu.im < 0.0) || !mu.re.is_finite()) {
                    return Err(invalid("params.mu", format!("imaginary part must be negative, got {mu}")));
                }
            }
            Params::Intertwine(p) => {
                positive("params.tmax", p.tmax)?;
                nonzero("params.steps", p.steps)?;
                state(&p.state)?;
            }
            Params::Characteristic(p) => {
                if p.lambda.iter().any(|l| !(l.norm() <= crate::contraction::MAX_DISK_RADIUS)) {
                    return Err(invalid("params.lambda", format!("points must lie in |λ| ≤ {}", crate::contraction::MAX_DISK_RADIUS)));
                }
                positive("params.angle_tol", p.angle_tol)?;
            }
            Params::FockCheck(p) => {
                nonzero("params.base_dim", p.base_dim)?;
                if p.n_max < 2 {
                    return Err(invalid("params.n_max", "must be at least 2"));
                }
                nonzero("params.samples", p.samples)?;
            }
            Params::Qsde(p) => {
                let d = p.h.len();
                for (name, m) in [("params.l", &p.l), ("params.s", &p.s), ("params.h", &p.h)] {
                    if m.len() != d || m.iter().any(|row| row.len() != d) || d == 0 {
                        return Err(invalid(name, format!("must be a non-empty square {d}×{d} matrix")));
                    }
                }
                if p.singular_values.is_empty() || p.singular_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
                    return Err(invalid("params.singular_values", "values must lie in [0, 1]"));
                }
                nonzero("params.n_max", p.n_max)?;
                positive("params.tmax", p.tmax)?;
                nonzero("params.steps", p.steps)?;
                nonzero("params.probes", p.probes)?;
            }
        }
        Ok(())
    }
}

fn parse_params(experiment: ExperimentName, value: Value) -> Result<Params, ConfigError> {
    fn typed<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, ConfigError> {
        serde_json::from_value(v).map_err(|e| ConfigError::Parse(format!("params: {e}")))
    }
    Ok(match experiment {
        ExperimentName::Spectrum => Params::Spectrum(typed(value)?),
        ExperimentName::Flow => Params::Flow(typed(value)?),
        ExperimentName::Normflow => Params::Normflow(typed(value)?),
        ExperimentName::Xmu => Params::Xmu(typed(value)?),
        ExperimentName::Intertwine => Params::Intertwine(typed(value)?),
        ExperimentName::Characteristic => Params::Characteristic(typed(value)?),
        ExperimentName::FockCheck => Params::FockCheck(typed(value)?),
        ExperimentName::Qsde => Params::Qsde(typed(value)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const XMU: &str = r#"{"experiment":"xmu","grid":{"n_points":64,"halfwidth":8.0},"params":{"mu":[[0.0,-1.0]]}}"#;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::from_json(XMU).unwrap();
        assert_eq!(c.experiment, ExperimentName::Xmu);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.output_path(), PathBuf::from("xmu.csv"));
    }

    #[test]
    fn rejects_unknown_fields_and_names() {
        let bad = XMU.replace("\"seed\"", "x").replace("\"params\"", "\"paramz\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(ConfigError::Parse(_))));
        let bad = XMU.replace("\"xmu\"", "\"nope\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(ConfigError::UnknownExperiment(_))));
        let bad = XMU.replace("-1.0", "1.0");
        assert!(matches!(RunConfig::from_json(&bad), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn overrides_touch_only_applicable_fields() {
        let mut c = RunConfig::from_json(XMU).unwrap();
        c.apply(&Overrides { n: Some(128), ..Default::default() }).unwrap();
        assert_eq!(c.grid.unwrap().n_points, 128);
        assert!(c.apply(&Overrides { a: Some(2.0), ..Default::default() }).is_err());
        assert!(c.apply(&Overrides { n: Some(7), ..Default::default() }).is_err());
    }
}
