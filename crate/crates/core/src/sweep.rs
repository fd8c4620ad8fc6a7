//! Two-parameter maps of the first unidirectional-flow duration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coefficients::IntegratorConfig;
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::flow::{direction_code, duration_map_point, FlowSettings};
use crate::model::{BathSpec, ModelSpec};

/// Model parameter carried by a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Gamma1,
    Gamma2,
    Coupling1,
    Coupling2,
    /// γ₁ − γ₂; sets γ₁ after every other axis has been applied.
    GammaDiff,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Gamma1 => "gamma1",
            SweepParam::Gamma2 => "gamma2",
            SweepParam::Coupling1 => "coupling1",
            SweepParam::Coupling2 => "coupling2",
            SweepParam::GammaDiff => "gamma_diff",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::Gamma1,
            SweepParam::Gamma2,
            SweepParam::Coupling1,
            SweepParam::Coupling2,
            SweepParam::GammaDiff,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::invalid("axis", format!("unknown sweep parameter {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Self {
        SweepAxis { param, values }
    }

    fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid(
                "axis",
                format!("{} axis has no values", self.param),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "axis",
                format!("{} axis has non-finite values", self.param),
            ));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "axis",
                format!("{} axis values must be strictly increasing", self.param),
            ));
        }
        Ok(())
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    spaced(n, lo, hi, |x| (a + (b - a) * x).exp())
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    spaced(n, lo, hi, |x| lo + (hi - lo) * x)
}

fn spaced(n: usize, lo: f64, hi: f64, at: impl Fn(f64) -> f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| match k {
                0 => lo,
                k if k == n - 1 => hi,
                k => at(k as f64 / (n - 1) as f64),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub base_model: ModelSpec,
    pub cfg: IntegratorConfig,
    pub flow: FlowSettings,
}

impl SweepGrid {
    /// Symmetric-coupling map over γ₁ × γ₂, 64×64 log-spaced on [0.05, 2].
    pub fn duration_map() -> Self {
        let axis = log_spaced(0.05, 2.0, 64);
        SweepGrid {
            axis1: SweepAxis::new(SweepParam::Gamma1, axis.clone()),
            axis2: SweepAxis::new(SweepParam::Gamma2, axis),
            base_model: ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).expect("valid base model"),
            cfg: IntegratorConfig::default(),
            flow: FlowSettings::default(),
        }
    }

    /// Diode-time map over γ₂ ∈ [0.05, 1] × (γ₁ − γ₂) ∈ [0.5, 8] with Γ₁ = 0.5, Γ₂ = 1.
    pub fn diode_map() -> Self {
        SweepGrid {
            axis1: SweepAxis::new(SweepParam::Gamma2, linear_spaced(0.05, 1.0, 48)),
            axis2: SweepAxis::new(SweepParam::GammaDiff, linear_spaced(0.5, 8.0, 48)),
            base_model: ModelSpec::from_rates(5.0, 0.5, 0.2, 1.0).expect("valid base model"),
            cfg: IntegratorConfig::default(),
            flow: FlowSettings::default(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.values.len())
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        self.axis2.validate()?;
        if self.axis1.param == self.axis2.param {
            return Err(Error::invalid(
                "axis",
                format!("both axes sweep {}", self.axis1.param),
            ));
        }
        self.base_model.validate()?;
        self.cfg.validate()?;
        self.flow.validate()?;
        let (n1, n2) = self.shape();
        for i in 0..n1 {
            for j in 0..n2 {
                self.cell_model(i, j)?;
            }
        }
        Ok(())
    }

    /// Model evaluated at cell (i, j).
    pub fn cell_model(&self, i: usize, j: usize) -> Result<ModelSpec> {
        let base = &self.base_model;
        let (left, right) = (base.bath_left(), base.bath_right());
        let mut p = [
            left.gamma(),
            left.coupling(),
            right.gamma(),
            right.coupling(),
        ];
        let mut diff = None;
        for (param, value) in [
            (self.axis1.param, self.axis1.values[i]),
            (self.axis2.param, self.axis2.values[j]),
        ] {
            match param {
                SweepParam::Gamma1 => p[0] = value,
                SweepParam::Coupling1 => p[1] = value,
                SweepParam::Gamma2 => p[2] = value,
                SweepParam::Coupling2 => p[3] = value,
                SweepParam::GammaDiff => diff = Some(value),
            }
        }
        if let Some(d) = diff {
            p[0] = p[2] + d;
        }
        ModelSpec::with_options(
            base.omega(),
            BathSpec::with_kernel(p[0], p[1], left.kernel())?,
            BathSpec::with_kernel(p[2], p[3], right.kernel())?,
            base.initial_populations(),
        )
    }
}

/// A cell whose evaluation failed; its duration and direction are left at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    /// `durations[i][j]` for axis1 index i and axis2 index j.
    pub durations: Vec<Vec<f64>>,
    /// +1 for L→R, −1 for R→L, 0 for no interval.
    pub directions: Vec<Vec<i8>>,
    pub failures: Vec<CellFailure>,
}

impl SweepResult {
    /// Cells in row-major order with the resolved (γ₁, γ₂) of each.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, ModelSpec)> + '_ {
        let (n1, n2) = self.grid.shape();
        (0..n1).flat_map(move |i| {
            (0..n2).filter_map(move |j| self.grid.cell_model(i, j).ok().map(|m| (i, j, m)))
        })
    }
}

/// Evaluate the first-interval duration at every cell of `grid`.
///
/// `workers == 0` uses every hardware thread. Cells are independent and
/// results are assembled in index order, so the output does not depend on
/// the worker count. Failed cells are recorded and the sweep continues.
pub fn run_sweep(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    grid.validate()?;
    let (n1, n2) = grid.shape();
    let outcomes = map_indexed(n1 * n2, workers, |k| {
        let model = grid.cell_model(k / n2, k % n2)?;
        duration_map_point(&model, &grid.cfg, &grid.flow)
    });

    let mut durations = vec![vec![0.0; n2]; n1];
    let mut directions = vec![vec![0i8; n2]; n1];
    let mut failures = Vec::new();
    for (k, outcome) in outcomes.into_iter().enumerate() {
        let (i, j) = (k / n2, k % n2);
        match outcome {
            Ok((duration, direction)) => {
                durations[i][j] = duration;
                directions[i][j] = direction_code(direction);
            }
            Err(e) => failures.push(CellFailure {
                i,
                j,
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepResult {
        grid: grid.clone(),
        durations,
        directions,
        failures,
    })
}
