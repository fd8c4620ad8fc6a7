//! Run configuration: TOML schema, defaults and flag overrides.
//!
//! Values are resolved in three layers, later layers winning: built-in
//! defaults for the chosen mode, the config file, then command-line flags.

use std::path::PathBuf;

use clap::ValueEnum;
use lambdaflow::sweep::{linear_spaced, log_spaced};
use lambdaflow::{
    BathSpec, EnsembleOptions, FlowSettings, IntegratorConfig, ModelSpec, SweepAxis, SweepGrid,
    SweepParam,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Sweep,
    Diode,
    Stochastic,
    Validate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Diode => "diode",
            Mode::Stochastic => "stochastic",
            Mode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
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

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// γ₁ × γ₂ duration map with equal couplings.
    #[default]
    DurationMap,
    /// γ₂ × (γ₁ − γ₂) map with Γ₁ = 0.5, Γ₂ = 1.
    DiodeMap,
}

impl Preset {
    fn grid(self) -> SweepGrid {
        match self {
            Preset::DurationMap => SweepGrid::duration_map(),
            Preset::DiodeMap => SweepGrid::diode_map(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

// ---- file schema -------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stochastic: Option<StochasticSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_populations: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho33_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_len: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis1: Option<AxisSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisSection>,
}

/// Either explicit `values` or `start`/`stop`/`count` with a spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub param: SweepParam,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Spacing>,
}

impl AxisSection {
    fn resolve(&self) -> Result<SweepAxis> {
        let range = (self.start, self.stop, self.count);
        let values = match (&self.values, range) {
            (Some(v), (None, None, None)) if self.spacing.is_none() => v.clone(),
            (None, (Some(a), Some(b), Some(n))) => match self.spacing.unwrap_or(Spacing::Linear) {
                Spacing::Linear => linear_spaced(a, b, n),
                Spacing::Log => {
                    if !(a > 0.0 && b > 0.0) {
                        return Err(CliError::Config(format!(
                            "{} axis: log spacing needs positive bounds",
                            self.param
                        )));
                    }
                    log_spaced(a, b, n)
                }
            },
            _ => {
                return Err(CliError::Config(format!(
                    "{} axis: give either `values` or all of `start`, `stop`, `count`",
                    self.param
                )))
            }
        };
        Ok(SweepAxis::new(self.param, values))
    }

    fn explicit(axis: &SweepAxis) -> Self {
        AxisSection {
            param: axis.param,
            values: Some(axis.values.clone()),
            start: None,
            stop: None,
            count: None,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StochasticSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conjugate_noise: Option<bool>,
}

// ---- command-line overrides -------------------------------------------

/// Values given as flags; `None` leaves the lower layers in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub coupling1: Option<f64>,
    pub coupling2: Option<f64>,
    pub t_max: Option<f64>,
    pub dt_out: Option<f64>,
    pub eps: Option<f64>,
    pub min_len: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub preset: Option<Preset>,
}

// ---- resolved configuration -------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub format: Format,
    pub output: PathBuf,
    /// 0 uses every hardware thread.
    pub workers: usize,
    pub model: ModelSpec,
    pub integrator: IntegratorConfig,
    pub flow: FlowSettings,
    pub sweep: Option<SweepGrid>,
    pub stochastic: Option<StochasticOptions>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StochasticOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub conjugate_noise: bool,
}

impl Default for StochasticOptions {
    fn default() -> Self {
        let d = EnsembleOptions::default();
        StochasticOptions {
            n_traj: d.n_traj,
            seed: d.seed,
            conjugate_noise: d.conjugate_noise,
        }
    }
}

impl StochasticOptions {
    pub fn ensemble(&self, workers: usize) -> EnsembleOptions {
        EnsembleOptions {
            n_traj: self.n_traj,
            seed: self.seed,
            workers,
            conjugate_noise: self.conjugate_noise,
        }
    }
}

/// Default model of each mode: the long/short-memory pair for simulate,
/// the asymmetric-coupling pair for diode, identical baths for stochastic.
fn default_model(mode: Mode, preset: Preset) -> ModelSpec {
    let (g1, c1, g2, c2) = match mode {
        Mode::Simulate | Mode::Validate => (0.2, 1.0, 10.0, 1.0),
        Mode::Diode => (5.0, 0.5, 0.2, 1.0),
        Mode::Stochastic => (1.0, 1.0, 1.0, 1.0),
        Mode::Sweep => return preset.grid().base_model,
    };
    ModelSpec::from_rates(g1, c1, g2, c2).expect("valid default model")
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parse a standalone config document; `mode` must be present.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file = parse_file(text)?;
    let mode = file
        .mode
        .ok_or_else(|| CliError::Config("missing key `mode`".into()))?;
    RunConfig::resolve(mode, file, &Overrides::default())
}

/// Parse the TOML layer without resolving it.
pub fn parse_file(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn resolve(mode: Mode, file: ConfigFile, ov: &Overrides) -> Result<RunConfig> {
        if let Some(m) = file.mode {
            if m != mode {
                return Err(CliError::Config(format!(
                    "config file is for mode `{}` but `{}` was requested",
                    m.name(),
                    mode.name()
                )));
            }
        }
        let sweep_section = file.sweep.clone().unwrap_or_default();
        let preset = pick(ov.preset, sweep_section.preset, Preset::default());

        let base = default_model(mode, preset);
        let fm = file.model.clone().unwrap_or_default();
        let (left, right) = (base.bath_left(), base.bath_right());
        let model = ModelSpec::with_options(
            fm.omega.unwrap_or(base.omega()),
            BathSpec::new(
                pick(ov.gamma1, fm.gamma1, left.gamma()),
                pick(ov.coupling1, fm.coupling1, left.coupling()),
            )?,
            BathSpec::new(
                pick(ov.gamma2, fm.gamma2, right.gamma()),
                pick(ov.coupling2, fm.coupling2, right.coupling()),
            )?,
            fm.initial_populations.unwrap_or(base.initial_populations()),
        )?;

        let d = IntegratorConfig::default();
        let fi = file.integrator.clone().unwrap_or_default();
        let integrator = IntegratorConfig {
            dt_out: pick(ov.dt_out, fi.dt_out, d.dt_out),
            rel_tol: fi.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: fi.abs_tol.unwrap_or(d.abs_tol),
            t_max: pick(ov.t_max, fi.t_max, d.t_max),
            rho33_floor: fi.rho33_floor.unwrap_or(d.rho33_floor),
        };
        integrator.validate()?;

        let d = FlowSettings::default();
        let ff = file.flow.clone().unwrap_or_default();
        let flow = FlowSettings {
            eps: pick(ov.eps, ff.eps, d.eps),
            min_len: pick(ov.min_len, ff.min_len, d.min_len),
        };
        flow.validate()?;

        let sweep = if mode == Mode::Sweep || file.sweep.is_some() {
            let preset_grid = preset.grid();
            let grid = SweepGrid {
                axis1: match &sweep_section.axis1 {
                    Some(a) => a.resolve()?,
                    None => preset_grid.axis1,
                },
                axis2: match &sweep_section.axis2 {
                    Some(a) => a.resolve()?,
                    None => preset_grid.axis2,
                },
                base_model: model,
                cfg: integrator,
                flow,
            };
            grid.validate()?;
            Some(grid)
        } else {
            None
        };

        let stochastic = if mode == Mode::Stochastic || file.stochastic.is_some() {
            let d = StochasticOptions::default();
            let fs = file.stochastic.clone().unwrap_or_default();
            let opts = StochasticOptions {
                n_traj: pick(ov.n_traj, fs.n_traj, d.n_traj),
                seed: pick(ov.seed, fs.seed, d.seed),
                conjugate_noise: fs.conjugate_noise.unwrap_or(d.conjugate_noise),
            };
            if opts.n_traj < 2 {
                return Err(CliError::Config(format!(
                    "n_traj must be at least 2, got {}",
                    opts.n_traj
                )));
            }
            Some(opts)
        } else {
            None
        };

        // Without an explicit format, a .json or .csv output name decides.
        let output = ov.output.clone().or(file.output);
        let inferred = output.as_deref().and_then(crate::output::format_of);
        let format = pick(ov.format, file.format.or(inferred), Format::Csv);
        let output = output.unwrap_or_else(|| {
            PathBuf::from(format!("lambdaflow-{}.{}", mode.name(), format.extension()))
        });

        Ok(RunConfig {
            mode,
            format,
            output,
            workers: pick(ov.workers, file.workers, 0),
            model,
            integrator,
            flow,
            sweep,
            stochastic,
        })
    }

    /// Fully explicit file layer that resolves back to `self`.
    pub fn to_file(&self) -> ConfigFile {
        let (l, r) = (self.model.bath_left(), self.model.bath_right());
        ConfigFile {
            mode: Some(self.mode),
            format: Some(self.format),
            output: Some(self.output.clone()),
            workers: Some(self.workers),
            model: Some(ModelSection {
                omega: Some(self.model.omega()),
                gamma1: Some(l.gamma()),
                gamma2: Some(r.gamma()),
                coupling1: Some(l.coupling()),
                coupling2: Some(r.coupling()),
                initial_populations: Some(self.model.initial_populations()),
            }),
            integrator: Some(IntegratorSection {
                dt_out: Some(self.integrator.dt_out),
                rel_tol: Some(self.integrator.rel_tol),
                abs_tol: Some(self.integrator.abs_tol),
                t_max: Some(self.integrator.t_max),
                rho33_floor: Some(self.integrator.rho33_floor),
            }),
            flow: Some(FlowSection {
                eps: Some(self.flow.eps),
                min_len: Some(self.flow.min_len),
            }),
            sweep: self.sweep.as_ref().map(|g| SweepSection {
                preset: None,
                axis1: Some(AxisSection::explicit(&g.axis1)),
                axis2: Some(AxisSection::explicit(&g.axis2)),
            }),
            stochastic: self.stochastic.map(|s| StochasticSection {
                n_traj: Some(s.n_traj),
                seed: Some(s.seed),
                conjugate_noise: Some(s.conjugate_noise),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}
