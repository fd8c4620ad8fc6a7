//! Time-local coefficients F₁(t), F₂(t) of the exact master equation.
//!
//! Production values come from a closed ODE ([`evolve_coefficients`]); the
//! two-time quadrature in [`quadrature_oracle`] is the independent reference.

mod closed;
mod quadrature;

pub use closed::{closed_rhs, closed_second_derivative, evolve_coefficients};
pub use quadrature::{quadrature_oracle, QUADRATURE_STEP_BUDGET};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepperConfig;

/// Output grid, tolerances and stopping rule for the coefficient integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt_out: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    /// Stop once exp(−2Re[F̄₁+F̄₂]) drops below this value; 0 disables.
    pub rho33_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt_out: 1e-2,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            t_max: 60.0,
            rho33_floor: 1e-4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("{name} must be positive and finite, got {v}"),
                ))
            }
        };
        positive("dt_out", self.dt_out)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("t_max", self.t_max)?;
        if !(self.rho33_floor.is_finite() && (0.0..1.0).contains(&self.rho33_floor)) {
            return Err(Error::invalid(
                "rho33_floor",
                format!("rho33_floor must lie in [0, 1), got {}", self.rho33_floor),
            ));
        }
        Ok(())
    }

    /// Index of the last grid point, t = n·dt_out ≤ t_max.
    pub fn last_index(&self) -> usize {
        (self.t_max / self.dt_out + 1e-9).floor() as usize
    }

    pub(crate) fn stepper(&self) -> StepperConfig {
        StepperConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            ..StepperConfig::default()
        }
    }
}

/// F₁, F₂ and their running integrals F̄ⱼ(t) = ∫₀ᵗ Fⱼ(s) ds on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub f1: Vec<Complex64>,
    pub f2: Vec<Complex64>,
    pub fbar1: Vec<Complex64>,
    pub fbar2: Vec<Complex64>,
    /// Set when the run ended early on the ρ₃₃ floor.
    pub stop_time: Option<f64>,
}

impl CoefficientTrajectory {
    pub(crate) fn with_capacity(dt: f64, n: usize) -> Self {
        CoefficientTrajectory {
            dt,
            times: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            fbar1: Vec::with_capacity(n),
            fbar2: Vec::with_capacity(n),
            stop_time: None,
        }
    }

    pub(crate) fn push(&mut self, t: f64, f: [Complex64; 2], fbar: [Complex64; 2]) {
        self.times.push(t);
        self.f1.push(f[0]);
        self.f2.push(f[1]);
        self.fbar1.push(fbar[0]);
        self.fbar2.push(fbar[1]);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn f(&self, channel: usize) -> &[Complex64] {
        match channel {
            0 => &self.f1,
            1 => &self.f2,
            _ => panic!("channel index {channel} out of range"),
        }
    }

    pub fn fbar(&self, channel: usize) -> &[Complex64] {
        match channel {
            0 => &self.fbar1,
            1 => &self.fbar2,
            _ => panic!("channel index {channel} out of range"),
        }
    }

    pub fn re_f1(&self) -> Vec<f64> {
        self.f1.iter().map(|z| z.re).collect()
    }

    pub fn re_f2(&self) -> Vec<f64> {
        self.f2.iter().map(|z| z.re).collect()
    }

    /// exp(−2Re[F̄₁(t)+F̄₂(t)]), the decay factor of the excited population.
    pub fn decay_factor(&self, k: usize) -> f64 {
        (-2.0 * (self.fbar1[k].re + self.fbar2[k].re)).exp()
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        let k = (t / self.dt).round().max(0.0) as usize;
        k.min(self.len().saturating_sub(1))
    }

    /// Copy restricted to the first `n` grid points.
    pub fn truncated(&self, n: usize) -> CoefficientTrajectory {
        let n = n.min(self.len());
        CoefficientTrajectory {
            dt: self.dt,
            times: self.times[..n].to_vec(),
            f1: self.f1[..n].to_vec(),
            f2: self.f2[..n].to_vec(),
            fbar1: self.fbar1[..n].to_vec(),
            fbar2: self.fbar2[..n].to_vec(),
            stop_time: self.stop_time,
        }
    }
}
