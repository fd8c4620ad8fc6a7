//! Instantaneous flow regimes, unidirectional-flow intervals and the
//! forward/reverse diode comparison.
//!
//! Bath 1 is on the left, bath 2 on the right. The sign of Re[Fⱼ] is the
//! direction of energy flow on channel j: positive means the system releases
//! energy into bath j, negative means it absorbs from it.

use serde::{Deserialize, Serialize};

use crate::coefficients::{evolve_coefficients, CoefficientTrajectory, IntegratorConfig};
use crate::dynamics::{populations, DynamicsTrajectory};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowRegime {
    /// (A) releasing into both baths.
    ReleaseBoth,
    /// (B) releasing to the left, absorbing from the right.
    LeftwardFlow,
    /// (C) absorbing from the left, releasing to the right.
    RightwardFlow,
    /// (D) absorbing from both baths.
    AbsorbBoth,
}

impl FlowRegime {
    pub fn letter(self) -> char {
        match self {
            FlowRegime::ReleaseBoth => 'A',
            FlowRegime::LeftwardFlow => 'B',
            FlowRegime::RightwardFlow => 'C',
            FlowRegime::AbsorbBoth => 'D',
        }
    }

    pub fn is_unidirectional(self) -> bool {
        self.direction().is_some()
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            FlowRegime::LeftwardFlow => Some(Direction::RightToLeft),
            FlowRegime::RightwardFlow => Some(Direction::LeftToRight),
            _ => None,
        }
    }
}

/// Regime letter for output columns; `I` marks an indeterminate point.
pub fn regime_letter(regime: Option<FlowRegime>) -> char {
    regime.map_or('I', FlowRegime::letter)
}

/// Net direction of a unidirectional interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "L->R")]
    LeftToRight,
    #[serde(rename = "R->L")]
    RightToLeft,
}

impl Direction {
    /// +1 for L→R, −1 for R→L.
    pub fn code(self) -> i8 {
        match self {
            Direction::LeftToRight => 1,
            Direction::RightToLeft => -1,
        }
    }

    pub fn from_code(code: i8) -> Option<Direction> {
        match code {
            1 => Some(Direction::LeftToRight),
            -1 => Some(Direction::RightToLeft),
            _ => None,
        }
    }

    pub fn flipped(self) -> Direction {
        match self {
            Direction::LeftToRight => Direction::RightToLeft,
            Direction::RightToLeft => Direction::LeftToRight,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::LeftToRight => "L->R",
            Direction::RightToLeft => "R->L",
        }
    }
}

/// `code` of an optional direction, 0 when absent.
pub fn direction_code(direction: Option<Direction>) -> i8 {
    direction.map_or(0, Direction::code)
}

/// Dead band and minimum interval length used by the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSettings {
    pub eps: f64,
    pub min_len: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings {
            eps: 1e-6,
            min_len: 0.01,
        }
    }
}

impl FlowSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps >= 0.0) {
            return Err(Error::invalid(
                "eps",
                format!("eps must be non-negative, got {}", self.eps),
            ));
        }
        if !(self.min_len.is_finite() && self.min_len >= 0.0) {
            return Err(Error::invalid(
                "min_len",
                format!("min_len must be non-negative, got {}", self.min_len),
            ));
        }
        Ok(())
    }
}

/// Regime of one time point, or `None` if either Re[Fⱼ] lies in [−eps, eps].
pub fn classify(re_f1: f64, re_f2: f64, eps: f64) -> Option<FlowRegime> {
    let sign = |x: f64| {
        if x > eps {
            Some(true)
        } else if x < -eps {
            Some(false)
        } else {
            None
        }
    };
    match (sign(re_f1)?, sign(re_f2)?) {
        (true, true) => Some(FlowRegime::ReleaseBoth),
        (true, false) => Some(FlowRegime::LeftwardFlow),
        (false, true) => Some(FlowRegime::RightwardFlow),
        (false, false) => Some(FlowRegime::AbsorbBoth),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub direction: Direction,
    /// Largest min(|Re F₁|, |Re F₂|) on the grid points inside the interval.
    pub peak_magnitude: f64,
    /// Grid indices of the first and last classified points.
    #[serde(skip)]
    pub first_index: usize,
    #[serde(skip)]
    pub last_index: usize,
}

impl FlowInterval {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.t_start <= t && t <= self.t_end
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalReport {
    pub intervals: Vec<FlowInterval>,
}

impl IntervalReport {
    pub fn first(&self) -> Option<&FlowInterval> {
        self.intervals.first()
    }

    /// Duration of the earliest interval, 0 if there is none.
    pub fn first_duration(&self) -> f64 {
        self.first().map_or(0.0, FlowInterval::duration)
    }

    pub fn first_direction(&self) -> Option<Direction> {
        self.first().map(|i| i.direction)
    }

    /// Intervals that begin before `t`.
    pub fn starting_before(&self, t: f64) -> impl Iterator<Item = &FlowInterval> {
        self.intervals.iter().filter(move |i| i.t_start < t)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Zero crossing of `x` between grid points `a` and `a + 1`, if its sign changes there.
fn crossing(times: &[f64], x: &[f64], a: usize) -> Option<f64> {
    let (xa, xb) = (x[a], x[a + 1]);
    let changes = xa * xb < 0.0 || (xa == 0.0 && xb != 0.0) || (xb == 0.0 && xa != 0.0);
    changes.then(|| times[a] + (times[a + 1] - times[a]) * xa / (xa - xb))
}

/// Interval detection on raw sequences; see [`detect_intervals`].
pub fn detect_intervals_in(
    times: &[f64],
    re_f1: &[f64],
    re_f2: &[f64],
    settings: &FlowSettings,
) -> IntervalReport {
    let n = times.len().min(re_f1.len()).min(re_f2.len());
    let labels: Vec<Option<Direction>> = (0..n)
        .map(|k| classify(re_f1[k], re_f2[k], settings.eps).and_then(FlowRegime::direction))
        .collect();

    let mut runs: Vec<FlowInterval> = Vec::new();
    let mut k = 0;
    while k < n {
        let Some(direction) = labels[k] else {
            k += 1;
            continue;
        };
        let first = k;
        while k + 1 < n && labels[k + 1] == Some(direction) {
            k += 1;
        }
        let last = k;
        k += 1;

        let t_start = if first == 0 {
            times[0]
        } else {
            [
                crossing(times, re_f1, first - 1),
                crossing(times, re_f2, first - 1),
            ]
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<f64>, t| {
                Some(acc.map_or(t, |a| a.max(t)))
            })
            .unwrap_or(times[first])
        };
        let t_end = if last + 1 == n {
            times[last]
        } else {
            [crossing(times, re_f1, last), crossing(times, re_f2, last)]
                .into_iter()
                .flatten()
                .fold(None, |acc: Option<f64>, t| {
                    Some(acc.map_or(t, |a| a.min(t)))
                })
                .unwrap_or(times[last])
        };
        let peak_magnitude = (first..=last)
            .map(|i| re_f1[i].abs().min(re_f2[i].abs()))
            .fold(0.0, f64::max);
        runs.push(FlowInterval {
            t_start,
            t_end,
            direction,
            peak_magnitude,
            first_index: first,
            last_index: last,
        });
    }

    // Bridge short indeterminate gaps between runs of the same direction.
    let mut merged: Vec<FlowInterval> = Vec::with_capacity(runs.len());
    for run in runs {
        if let Some(prev) = merged.last_mut() {
            let gap_indeterminate = (prev.last_index + 1..run.first_index)
                .all(|i| classify(re_f1[i], re_f2[i], settings.eps).is_none());
            if prev.direction == run.direction
                && gap_indeterminate
                && run.t_start - prev.t_end < settings.min_len
            {
                prev.t_end = run.t_end;
                prev.last_index = run.last_index;
                prev.peak_magnitude = prev.peak_magnitude.max(run.peak_magnitude);
                continue;
            }
        }
        merged.push(run);
    }

    merged.retain(|i| i.t_end > i.t_start && i.duration() >= settings.min_len);
    IntervalReport { intervals: merged }
}

/// Maximal runs of unidirectional flow, Re[F₁]·Re[F₂] < 0 outside the dead band.
///
/// Boundaries are refined by linearly interpolating the zero crossing of the
/// Re[Fⱼ] that changes sign. Runs separated only by indeterminate points over
/// less than `min_len` are merged; runs shorter than `min_len` are dropped.
pub fn detect_intervals(coeffs: &CoefficientTrajectory, settings: &FlowSettings) -> IntervalReport {
    detect_intervals_in(&coeffs.times, &coeffs.re_f1(), &coeffs.re_f2(), settings)
}

/// Duration and direction of the first unidirectional interval of `model`.
pub fn duration_map_point(
    model: &ModelSpec,
    cfg: &IntegratorConfig,
    settings: &FlowSettings,
) -> Result<(f64, Option<Direction>)> {
    let coeffs = evolve_coefficients(model, cfg)?;
    let report = detect_intervals(&coeffs, settings);
    Ok((report.first_duration(), report.first_direction()))
}

/// One geometry of a diode comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryReport {
    pub model: ModelSpec,
    pub coefficients: CoefficientTrajectory,
    pub dynamics: DynamicsTrajectory,
    pub intervals: IntervalReport,
    /// Peak of min(|Re F₁|, |Re F₂|) within the first interval.
    pub peak_rate: Option<f64>,
    /// Peak of min(|J₁|, |J₂|) within the first interval.
    pub peak_current: Option<f64>,
    /// Peak current into the releasing bath within the first interval.
    pub peak_release_current: Option<f64>,
}

impl GeometryReport {
    fn build(model: ModelSpec, cfg: &IntegratorConfig, settings: &FlowSettings) -> Result<Self> {
        let coefficients = evolve_coefficients(&model, cfg)?;
        let dynamics = populations(&coefficients, &model)?;
        let intervals = detect_intervals(&coefficients, settings);
        let (peak_rate, peak_current, peak_release_current) = match intervals.first() {
            Some(first) => {
                let span = first.first_index..=first.last_index;
                let bottleneck = span
                    .clone()
                    .map(|k| dynamics.j1[k].abs().min(dynamics.j2[k].abs()))
                    .fold(0.0, f64::max);
                let release = match first.direction {
                    Direction::LeftToRight => &dynamics.j2,
                    Direction::RightToLeft => &dynamics.j1,
                };
                let release_peak = span.map(|k| release[k]).fold(0.0, f64::max);
                (
                    Some(first.peak_magnitude),
                    Some(bottleneck),
                    Some(release_peak),
                )
            }
            None => (None, None, None),
        };
        Ok(GeometryReport {
            model,
            coefficients,
            dynamics,
            intervals,
            peak_rate,
            peak_current,
            peak_release_current,
        })
    }
}

/// Forward geometry (i) against the reversed geometry (ii) with γ₁ ↔ γ₂.
#[derive(Debug, Clone, PartialEq)]
pub struct DiodeReport {
    pub forward: GeometryReport,
    pub reverse: GeometryReport,
    /// Reverse over forward peak of min(|J₁|, |J₂|) in the first interval.
    pub asymmetry_ratio: Option<f64>,
    /// Reverse over forward peak of min(|Re F₁|, |Re F₂|) in the first interval.
    pub rate_ratio: Option<f64>,
    /// Reverse over forward peak current into the releasing bath.
    pub release_ratio: Option<f64>,
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => Some(n / d),
        _ => None,
    }
}

/// Run both diode geometries and compare their first unidirectional interval.
pub fn diode_compare(
    model_forward: &ModelSpec,
    cfg: &IntegratorConfig,
    settings: &FlowSettings,
) -> Result<DiodeReport> {
    let forward = GeometryReport::build(*model_forward, cfg, settings)?;
    let reverse = GeometryReport::build(model_forward.swap_baths(), cfg, settings)?;
    Ok(DiodeReport {
        asymmetry_ratio: ratio(reverse.peak_current, forward.peak_current),
        rate_ratio: ratio(reverse.peak_rate, forward.peak_rate),
        release_ratio: ratio(reverse.peak_release_current, forward.peak_release_current),
        forward,
        reverse,
    })
}
