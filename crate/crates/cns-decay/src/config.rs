//! Run configuration: a TOML file with flat dotted keys.
//!
//! ```toml
//! kind = "difference"
//! grid.length_pi = 200      # or grid.length = 628.318...
//! grid.n = 64
//! fluid.mu = 5.0
//! initial.kind = "density-floor"
//! initial.amplitude = 0.1
//! initial.k_cut = 0.1
//! solver.dt = 0.5
//! solver.t_end = 210
//! fit.window = [20, 209]
//! ```
//!
//! Every key has a default; unknown keys are rejected. [`RunConfig::validate`]
//! reports every invalid field at once, before any compute starts.

use std::fmt;
use std::path::{Path, PathBuf};

use cns_decay_core::energy::EnergyConfig;
use cns_decay_core::initial::{resolved_radius, DataKind, InitialDataSpec};
use cns_decay_core::solver::{Form, Integrator, SolverConfig};
use cns_decay_core::{Error as CoreError, FluidParams, SpectralGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LinearDecay,
    Simulate,
    Difference,
    Fit,
    Report,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::LinearDecay => "linear-decay",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Difference => "difference",
            ExperimentKind::Fit => "fit",
            ExperimentKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub length: Option<f64>,
    /// Box length in units of π; exclusive with `length`.
    pub length_pi: Option<f64>,
    pub n: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: None,
            length_pi: None,
            n: 32,
        }
    }
}

impl GridSection {
    pub fn box_length(&self) -> f64 {
        match (self.length, self.length_pi) {
            (Some(l), _) => l,
            (None, Some(lp)) => lp * std::f64::consts::PI,
            (None, None) => 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidSection {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for FluidSection {
    fn default() -> Self {
        let p = FluidParams::default();
        Self {
            mu: p.mu(),
            lambda: p.lambda(),
            gamma: p.gamma(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// `density-floor` (alias `theorem13`), `generic-eta` or `solenoidal`.
    pub kind: String,
    pub amplitude: f64,
    pub c0: f64,
    pub k_cut: f64,
    pub eta: f64,
    pub seed: u64,
    pub width: Option<f64>,
    pub floor: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        let d = InitialDataSpec::default();
        Self {
            kind: d.kind.name().into(),
            amplitude: d.amplitude,
            c0: d.c0,
            k_cut: d.k_cut,
            eta: d.eta,
            seed: d.seed,
            width: d.width,
            floor: d.floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    /// `exp-euler` or `exp-rk2`.
    pub integrator: String,
    pub dealias: bool,
    /// `velocity` or `momentum`.
    pub form: String,
    pub record_every: usize,
    pub nonlinear: bool,
    pub density_floor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            dt: d.dt,
            t_end: d.t_end,
            integrator: "exp-rk2".into(),
            dealias: d.dealias,
            form: "velocity".into(),
            record_every: d.record_every,
            nonlinear: d.nonlinear,
            density_floor: d.density_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub delta0: f64,
    pub p: f64,
    pub r: Option<f64>,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self {
            delta0: EnergyConfig::DEFAULT_DELTA0,
            p: 1.0,
            r: None,
        }
    }
}

/// Sampling of the continuum linear evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearSection {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl Default for LinearSection {
    fn default() -> Self {
        Self {
            t_start: 100.0,
            t_end: 1e4,
            samples: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// `[t_a, t_b]`; without it grid runs produce no fits.
    pub window: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// A checkpoint is written at the first recorded time at or after each entry.
    pub checkpoint_times: Vec<f64>,
    pub dump_initial: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            checkpoint_times: Vec::new(),
            dump_initial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must match the subcommand when present.
    pub kind: Option<ExperimentKind>,
    pub grid: GridSection,
    pub fluid: FluidSection,
    pub initial: InitialSection,
    pub solver: SolverSection,
    pub energy: EnergySection,
    pub linear: LinearSection,
    pub fit: FitSection,
    pub output: OutputSection,
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n  {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n  "))]
    Invalid(Vec<FieldError>),
}

/// Core objects built from a validated configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub grid: SpectralGrid,
    pub params: FluidParams,
    pub initial: InitialDataSpec,
    pub solver: SolverConfig,
    pub energy: EnergyConfig,
}

pub fn parse_data_kind(s: &str) -> Option<DataKind> {
    match s {
        "density-floor" | "theorem13" => Some(DataKind::DensityFloor),
        "generic-eta" => Some(DataKind::GenericEta),
        "solenoidal" => Some(DataKind::Solenoidal),
        _ => None,
    }
}

fn parse_integrator(s: &str) -> Option<Integrator> {
    match s {
        "exp-euler" => Some(Integrator::ExponentialEuler),
        "exp-rk2" => Some(Integrator::ExponentialRk2),
        _ => None,
    }
}

fn parse_form(s: &str) -> Option<Form> {
    match s {
        "velocity" => Some(Form::Velocity),
        "momentum" => Some(Form::Momentum),
        _ => None,
    }
}

fn core_field(section: &str, e: CoreError) -> FieldError {
    match e {
        CoreError::InvalidParameter { field, reason } => FieldError {
            field: if field.contains('.') {
                field.into()
            } else {
                format!("{section}.{field}")
            },
            reason: reason.into(),
        },
        other => FieldError {
            field: section.into(),
            reason: other.to_string(),
        },
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::to_toml`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    /// Checks every field and builds the core objects.
    pub fn validate(&self) -> Result<Resolved, ConfigError> {
        let mut errs = Vec::new();
        let mut bad = |field: &str, reason: &str| {
            errs.push(FieldError {
                field: field.into(),
                reason: reason.into(),
            })
        };

        if self.grid.length.is_some() && self.grid.length_pi.is_some() {
            bad("grid.length", "give either grid.length or grid.length_pi, not both");
        }
        let length = self.grid.box_length();
        if !(length > 0.0 && length.is_finite()) {
            bad("grid.length", "box length must be positive and finite");
        }
        if self.grid.n < 8 || !self.grid.n.is_multiple_of(2) {
            bad("grid.n", "points per axis must be even and at least 8");
        }

        let integrator = parse_integrator(&self.solver.integrator);
        if integrator.is_none() {
            bad("solver.integrator", "expected `exp-euler` or `exp-rk2`");
        }
        let form = parse_form(&self.solver.form);
        if form.is_none() {
            bad("solver.form", "expected `velocity` or `momentum`");
        }
        let kind = parse_data_kind(&self.initial.kind);
        if kind.is_none() {
            bad(
                "initial.kind",
                "expected `density-floor` (or `theorem13`), `generic-eta` or `solenoidal`",
            );
        }

        if !(self.linear.t_start >= 0.0 && self.linear.t_end > self.linear.t_start && self.linear.t_end.is_finite()) {
            bad("linear.t_end", "need 0 <= linear.t_start < linear.t_end < inf");
        }
        if self.linear.samples < cns_decay_core::fit::MIN_SAMPLES {
            bad("linear.samples", "at least 10 samples are needed for a fit");
        }
        if let Some([a, b]) = self.fit.window {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                bad("fit.window", "need 0 <= t_a < t_b < inf");
            }
        }
        if self.output.checkpoint_times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            bad("output.checkpoint_times", "times must be finite and non-negative");
        }

        let params = FluidParams::new(self.fluid.mu, self.fluid.lambda, self.fluid.gamma).map_err(|e| core_field("fluid", e));
        let grid = if errs.is_empty() {
            Some(crate::backend::grid(length, self.grid.n).map_err(|e| core_field("grid", e)))
        } else {
            None
        };

        let solver = SolverConfig {
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            integrator: integrator.unwrap_or(Integrator::ExponentialRk2),
            dealias: self.solver.dealias,
            form: form.unwrap_or(Form::Velocity),
            record_every: self.solver.record_every,
            nonlinear: self.solver.nonlinear,
            density_floor: self.solver.density_floor,
        };
        if let Err(e) = solver.validate() {
            errs.push(core_field("solver", e));
        }

        let i = &self.initial;
        let mut initial_errs = Vec::new();
        let mut ibad = |field: &str, reason: &str| {
            initial_errs.push(FieldError {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if !(i.amplitude >= 0.0 && i.amplitude.is_finite()) {
            ibad("initial.amplitude", "must be non-negative and finite");
        }
        if !(i.eta >= 0.0 && i.eta.is_finite()) {
            ibad("initial.eta", "must be non-negative and finite");
        }
        if !(i.floor >= 0.0 && i.floor < 1.0) {
            ibad("initial.floor", "must lie in [0, 1)");
        }
        if let Some(w) = i.width {
            if !(w > 0.0 && w.is_finite()) {
                ibad("initial.width", "must be positive and finite");
            }
        }
        if matches!(kind, Some(DataKind::DensityFloor)) {
            if i.c0.is_nan() || i.c0 <= 0.0 {
                ibad("initial.c0", "must be positive");
            }
            if let Some(Ok(g)) = &grid {
                if !(i.k_cut >= g.base_wavenumber() && i.k_cut < resolved_radius(g)) {
                    initial_errs.push(FieldError {
                        field: "initial.k_cut".into(),
                        reason: format!(
                            "must lie in [{:.4}, {:.4}): between the first grid shell and the dealiasing radius",
                            g.base_wavenumber(),
                            resolved_radius(g)
                        ),
                    });
                }
            }
        }
        errs.extend(initial_errs);

        let energy = match &params {
            Ok(p) => EnergyConfig::new(*p, self.energy.delta0, self.energy.p, self.energy.r).map_err(|e| core_field("energy", e)),
            Err(_) => Err(FieldError {
                field: "energy".into(),
                reason: "depends on valid fluid parameters".into(),
            }),
        };

        let params = params.map_err(|e| errs.push(e)).ok();
        let energy = match energy {
            Ok(e) => Some(e),
            Err(e) => {
                if params.is_some() {
                    errs.push(e);
                }
                None
            }
        };
        let grid = match grid {
            Some(Ok(g)) => Some(g),
            Some(Err(e)) => {
                errs.push(e);
                None
            }
            None => None,
        };
        match (errs.is_empty(), grid, params, energy, kind) {
            (true, Some(grid), Some(params), Some(energy), Some(kind)) => Ok(Resolved {
                grid,
                params,
                initial: InitialDataSpec {
                    kind,
                    amplitude: i.amplitude,
                    c0: i.c0,
                    k_cut: i.k_cut,
                    eta: i.eta,
                    seed: i.seed,
                    width: i.width,
                    floor: i.floor,
                },
                solver,
                energy,
            }),
            _ => Err(ConfigError::Invalid(errs)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::from_toml("").unwrap();
        let r = cfg.validate().unwrap_err();
        // default k_cut = 0.5 is out of band on the default 2π box
        let ConfigError::Invalid(errs) = r else { panic!() };
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].field, "initial.k_cut");
        let ok = RunConfig::from_toml("initial.kind = \"generic-eta\"").unwrap();
        ok.validate().unwrap();
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = RunConfig::from_toml("grid.n = 16\nfluid.mu = 2.0\nsolver.form = \"momentum\"").unwrap();
        let b = RunConfig::from_toml("[grid]\nn = 16\n[fluid]\nmu = 2.0\n[solver]\nform = \"momentum\"").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn every_bad_field_is_reported() {
        let text = r#"
            grid.n = 7
            fluid.mu = -1.0
            solver.dt = 0.0
            solver.integrator = "rk4"
            initial.kind = "blob"
            initial.amplitude = -1
            fit.window = [5, 1]
        "#;
        let ConfigError::Invalid(errs) = RunConfig::from_toml(text).unwrap().validate().unwrap_err() else {
            panic!()
        };
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        for f in [
            "grid.n",
            "fluid.mu",
            "solver.dt",
            "solver.integrator",
            "initial.kind",
            "initial.amplitude",
            "fit.window",
        ] {
            assert!(fields.contains(&f), "{f} missing from {fields:?}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("grid.size = 3"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn alias_and_length_in_pi() {
        let cfg = RunConfig::from_toml("initial.kind = \"theorem13\"\ninitial.k_cut = 0.1\ngrid.length_pi = 200\ngrid.n = 64").unwrap();
        let r = cfg.validate().unwrap();
        assert!(matches!(r.initial.kind, DataKind::DensityFloor));
        assert!((r.grid.length() - 200.0 * std::f64::consts::PI).abs() < 1e-12);
        let both = RunConfig::from_toml("grid.length = 1.0\ngrid.length_pi = 2.0\ninitial.kind = \"solenoidal\"").unwrap();
        assert!(both.validate().is_err());
    }

    #[test]
    fn shipped_configs_validate() {
        for (text, kind) in [
            (include_str!("../../../configs/difference-large-box.toml"), ExperimentKind::Difference),
            (include_str!("../../../configs/energy-small-box.toml"), ExperimentKind::Simulate),
            (include_str!("../../../configs/linear-density-floor.toml"), ExperimentKind::LinearDecay),
        ] {
            let cfg = RunConfig::from_toml(text).unwrap();
            assert_eq!(cfg.kind, Some(kind));
            cfg.validate().unwrap();
        }
    }
}
