//! Populations and bath energy currents from the coefficient trajectory.
//!
//! For a diagonal initial state the exact master equation only couples the
//! populations:
//!
//! ```text
//! ρ₃₃(t) = exp(−2Re[F̄₁(t)] − 2Re[F̄₂(t)])·ρ₃₃(0)
//! ρⱼⱼ(t) = ρⱼⱼ(0) + ∫₀ᵗ 2Re[Fⱼ(s)]·ρ₃₃(s) ds
//! Jⱼ(t)  = 2ω·Re[Fⱼ(t)]·ρ₃₃(t)
//! ```
//!
//! Jⱼ > 0 means energy flows from the system into bath j.

use num_complex::Complex64;

use crate::coefficients::CoefficientTrajectory;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrajectory {
    pub times: Vec<f64>,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
    pub rho33: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
}

impl DynamicsTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn current(&self, channel: usize) -> &[f64] {
        match channel {
            0 => &self.j1,
            1 => &self.j2,
            _ => panic!("channel index {channel} out of range"),
        }
    }

    /// First grid time at which ρ₃₃ drops below `threshold`.
    pub fn relaxation_time(&self, threshold: f64) -> Option<f64> {
        self.rho33
            .iter()
            .position(|&p| p < threshold)
            .map(|k| self.times[k])
    }

    /// Largest deviation of ρ₁₁+ρ₂₂+ρ₃₃ from 1.
    pub fn max_trace_error(&self) -> f64 {
        (0..self.len())
            .map(|k| (self.rho11[k] + self.rho22[k] + self.rho33[k] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Seven-point weights for the first derivative at window position 0..=3.
/// Sixth order; positions 4..=6 follow by reflection.
const D1: [[f64; 7]; 4] = [
    [
        -49.0 / 20.0,
        6.0,
        -15.0 / 2.0,
        20.0 / 3.0,
        -15.0 / 4.0,
        6.0 / 5.0,
        -1.0 / 6.0,
    ],
    [
        -1.0 / 6.0,
        -77.0 / 60.0,
        5.0 / 2.0,
        -5.0 / 3.0,
        5.0 / 6.0,
        -1.0 / 4.0,
        1.0 / 30.0,
    ],
    [
        1.0 / 30.0,
        -2.0 / 5.0,
        -7.0 / 12.0,
        4.0 / 3.0,
        -1.0 / 2.0,
        2.0 / 15.0,
        -1.0 / 60.0,
    ],
    [
        -1.0 / 60.0,
        3.0 / 20.0,
        -3.0 / 4.0,
        0.0,
        3.0 / 4.0,
        -3.0 / 20.0,
        1.0 / 60.0,
    ],
];

/// Seven-point weights for the third derivative, fourth order.
const D3: [[f64; 7]; 4] = [
    [
        -49.0 / 8.0,
        29.0,
        -461.0 / 8.0,
        62.0,
        -307.0 / 8.0,
        13.0,
        -15.0 / 8.0,
    ],
    [
        -15.0 / 8.0,
        7.0,
        -83.0 / 8.0,
        8.0,
        -29.0 / 8.0,
        1.0,
        -1.0 / 8.0,
    ],
    [
        -1.0 / 8.0,
        -1.0,
        35.0 / 8.0,
        -6.0,
        29.0 / 8.0,
        -1.0,
        1.0 / 8.0,
    ],
    [
        1.0 / 8.0,
        -1.0,
        13.0 / 8.0,
        0.0,
        -13.0 / 8.0,
        1.0,
        -1.0 / 8.0,
    ],
];

/// Apply a seven-point stencil at index `k`, shifting the window to stay inside `v`.
/// Odd derivatives only, so reflected weights change sign. Needs `v.len() >= 7`.
fn stencil(v: &[f64], k: usize, table: &[[f64; 7]; 4]) -> f64 {
    let s = k.saturating_sub(3).min(v.len() - 7);
    let p = k - s;
    let w = &v[s..s + 7];
    if p <= 3 {
        table[p].iter().zip(w).map(|(a, b)| a * b).sum()
    } else {
        -table[6 - p]
            .iter()
            .zip(w.iter().rev())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }
}

/// Finite-difference derivative of uniformly sampled `v` at index `k`.
fn grid_derivative(v: &[f64], h: f64, k: usize) -> f64 {
    let n = v.len();
    match n {
        0 | 1 => 0.0,
        2 => (v[1] - v[0]) / h,
        _ if n < 7 => match k {
            0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
            k if k == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
            k => (v[k + 1] - v[k - 1]) / (2.0 * h),
        },
        _ => stencil(v, k, &D1) / h,
    }
}

/// Finite-difference third derivative; zero on grids too short to resolve it.
fn grid_third_derivative(v: &[f64], h: f64, k: usize) -> f64 {
    if v.len() < 7 {
        return 0.0;
    }
    stencil(v, k, &D3) / (h * h * h)
}

/// Evaluate populations and currents on the coefficient grid.
///
/// The lower-level populations use the trapezoid rule with Euler–Maclaurin
/// endpoint corrections. Per-interval corrections telescope, so only
/// h²/12·(g'(0) − g'(t)) − h⁴/720·(g'''(0) − g'''(t)) is added, with the
/// derivatives taken from finite differences of the integrand.
pub fn populations(
    coeffs: &CoefficientTrajectory,
    model: &ModelSpec,
) -> Result<DynamicsTrajectory> {
    let n = coeffs.len();
    if [coeffs.f2.len(), coeffs.fbar1.len(), coeffs.fbar2.len()]
        .iter()
        .any(|&len| len != n)
    {
        return Err(Error::GridMismatch(
            "coefficient sequences differ in length".into(),
        ));
    }
    let omega = model.omega();
    let [p1, p2, p3] = model.initial_populations();
    let h = coeffs.dt;

    let rho33: Vec<f64> = (0..n).map(|k| p3 * coeffs.decay_factor(k)).collect();
    let lower = |f: &[Complex64], start: f64| -> Vec<f64> {
        let g: Vec<f64> = (0..n).map(|k| 2.0 * f[k].re * rho33[k]).collect();
        let dg0 = grid_derivative(&g, h, 0);
        let d3g0 = grid_third_derivative(&g, h, 0);
        let mut trap = 0.0;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                trap += 0.5 * h * (g[k - 1] + g[k]);
            }
            let correction = if k > 0 {
                h * h / 12.0 * (dg0 - grid_derivative(&g, h, k))
                    - h.powi(4) / 720.0 * (d3g0 - grid_third_derivative(&g, h, k))
            } else {
                0.0
            };
            out.push(start + trap + correction);
        }
        out
    };
    let rho11 = lower(&coeffs.f1, p1);
    let rho22 = lower(&coeffs.f2, p2);

    let j1 = (0..n)
        .map(|k| 2.0 * omega * coeffs.f1[k].re * rho33[k])
        .collect();
    let j2 = (0..n)
        .map(|k| 2.0 * omega * coeffs.f2[k].re * rho33[k])
        .collect();

    Ok(DynamicsTrajectory {
        times: coeffs.times.clone(),
        rho11,
        rho22,
        rho33,
        j1,
        j2,
    })
}

/// Largest mismatch between central-difference dρₖₖ/dt and the master-equation
/// right-hand side, over the interior grid points and all three populations.
pub fn master_equation_residual(
    dyn_: &DynamicsTrajectory,
    coeffs: &CoefficientTrajectory,
) -> Result<f64> {
    let n = dyn_.len();
    if coeffs.len() != n {
        return Err(Error::GridMismatch(format!(
            "dynamics has {n} points, coefficients have {}",
            coeffs.len()
        )));
    }
    if dyn_
        .times
        .iter()
        .zip(&coeffs.times)
        .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::GridMismatch("time values differ".into()));
    }
    let mut worst: f64 = 0.0;
    for k in 1..n.saturating_sub(1) {
        let span = dyn_.times[k + 1] - dyn_.times[k - 1];
        let d = |v: &[f64]| (v[k + 1] - v[k - 1]) / span;
        let re1 = coeffs.f1[k].re;
        let re2 = coeffs.f2[k].re;
        let p3 = dyn_.rho33[k];
        worst = worst
            .max((d(&dyn_.rho33) + 2.0 * (re1 + re2) * p3).abs())
            .max((d(&dyn_.rho11) - 2.0 * re1 * p3).abs())
            .max((d(&dyn_.rho22) - 2.0 * re2 * p3).abs());
    }
    Ok(worst)
}

/// Finite-difference scheme for time derivatives of sampled populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    /// Second-order central differences over the interior points.
    Central,
    /// Sixth-order seven-point stencils at every point.
    SixthOrder,
}

/// Largest |dρ₃₃/dt + (J₁ + J₂)/ω| over the grid, with dρ₃₃/dt from `scheme`.
///
/// The identity is exact, so the result measures the truncation error of the
/// difference scheme plus the error of the populations themselves.
pub fn flux_residual(dyn_: &DynamicsTrajectory, omega: f64, scheme: Difference) -> f64 {
    let n = dyn_.len();
    let derivative = |k: usize| match scheme {
        Difference::Central => {
            (dyn_.rho33[k + 1] - dyn_.rho33[k - 1]) / (dyn_.times[k + 1] - dyn_.times[k - 1])
        }
        Difference::SixthOrder => grid_derivative(&dyn_.rho33, dyn_.times[1] - dyn_.times[0], k),
    };
    let range = match scheme {
        Difference::Central => 1..n.saturating_sub(1),
        Difference::SixthOrder if n >= 2 => 0..n,
        Difference::SixthOrder => 0..0,
    };
    range
        .map(|k| (derivative(k) + (dyn_.j1[k] + dyn_.j2[k]) / omega).abs())
        .fold(0.0, f64::max)
}
