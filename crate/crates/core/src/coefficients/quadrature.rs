//! Direct two-time evaluation of Fⱼ(t) = ∫₀ᵗ αⱼ(t,s) fⱼ(t,s) ds.
//!
//! The field f(t,s) is kept for every retained s on the grid and advanced in t
//! with ∂ₜf = [iω + F₁(t) + F₂(t)]·f, f(s,s) = 1. Both channels obey the same
//! equation with the same boundary value, so one array serves f₁ and f₂. The
//! memory integral is a Gregory-corrected trapezoid sum over s. Only kernel
//! values are used, never the closed form of their derivative, so this is
//! O(N²) and independent of the closed-ODE path.

use num_complex::Complex64;

use super::CoefficientTrajectory;
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Maximum number of time steps accepted by [`quadrature_oracle`].
pub const QUADRATURE_STEP_BUDGET: usize = 1_000_000;

const MAX_FIXED_POINT_ITERS: usize = 100;

/// Quadrature weight (in units of dt) of node `m` in a rule over `intervals` intervals.
fn gregory_weight(m: usize, intervals: usize) -> f64 {
    if intervals < 6 {
        return if m == 0 || m == intervals { 0.5 } else { 1.0 };
    }
    match m.min(intervals - m) {
        0 => 3.0 / 8.0,
        1 => 7.0 / 6.0,
        2 => 23.0 / 24.0,
        _ => 1.0,
    }
}

/// Ground-truth coefficients on the grid t = n·dt, n = 0..=⌈t_max/dt⌉.
///
/// Assumes stationary kernels, α(t,s) = α(t−s, 0), which holds for every
/// supported kernel family.
pub fn quadrature_oracle(model: &ModelSpec, t_max: f64, dt: f64) -> Result<CoefficientTrajectory> {
    model.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(
            "dt",
            format!("dt must be positive, got {dt}"),
        ));
    }
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::invalid(
            "t_max",
            format!("t_max must be non-negative, got {t_max}"),
        ));
    }
    let steps_f = (t_max / dt - 1e-9).ceil().max(0.0);
    if steps_f > QUADRATURE_STEP_BUDGET as f64 {
        return Err(Error::GridTooLarge {
            steps: steps_f as usize,
            budget: QUADRATURE_STEP_BUDGET,
        });
    }
    let steps = steps_f as usize;

    let zero = Complex64::new(0.0, 0.0);
    let mut out = CoefficientTrajectory::with_capacity(dt, steps + 1);
    out.push(0.0, [zero; 2], [zero; 2]);
    if steps == 0 {
        return Ok(out);
    }

    // Kernel values by lag k·dt.
    let lag_table = |channel: usize| -> Vec<f64> {
        let bath = model.bath(channel);
        (0..=steps)
            .map(|k| bath.correlation(k as f64 * dt, 0.0).re)
            .collect()
    };
    let alpha = [lag_table(0), lag_table(1)];

    let i_omega = Complex64::new(0.0, model.omega());
    // f[m] = f(t_n, s_m) for m = 0..=n.
    let mut field: Vec<Complex64> = Vec::with_capacity(steps + 1);
    field.push(Complex64::new(1.0, 0.0));
    let mut f_prev = [zero; 2];
    let mut f_prev2 = [zero; 2];
    let mut fbar = [zero; 2];

    for n in 0..steps {
        let intervals = n + 1;
        // Sum over the already-known nodes m = 0..=n at time t_{n+1}, before
        // propagating f from t_n to t_{n+1}.
        let mut partial = [zero; 2];
        for (m, f) in field.iter().enumerate() {
            let w = gregory_weight(m, intervals);
            let lag = intervals - m;
            partial[0] += f * (w * alpha[0][lag]);
            partial[1] += f * (w * alpha[1][lag]);
        }
        let w_end = gregory_weight(intervals, intervals);
        let diag = [w_end * alpha[0][0], w_end * alpha[1][0]];
        let total_prev = f_prev[0] + f_prev[1];

        // Implicit trapezoid step for f: g = exp(dt·(iω + (F_n + F_{n+1})/2)).
        let mut total_next = if n == 0 {
            total_prev
        } else {
            2.0 * total_prev - (f_prev2[0] + f_prev2[1])
        };
        let mut growth = Complex64::new(1.0, 0.0);
        let mut f_next = [zero; 2];
        for _ in 0..MAX_FIXED_POINT_ITERS {
            growth = (dt * (i_omega + 0.5 * (total_prev + total_next))).exp();
            f_next = [
                (growth * partial[0] + diag[0]) * dt,
                (growth * partial[1] + diag[1]) * dt,
            ];
            let updated = f_next[0] + f_next[1];
            let delta = (updated - total_next).norm();
            total_next = updated;
            if delta <= 1e-15 * (1.0 + updated.norm()) {
                break;
            }
        }
        if !(f_next[0].re.is_finite()
            && f_next[0].im.is_finite()
            && f_next[1].re.is_finite()
            && f_next[1].im.is_finite())
        {
            return Err(Error::NonFinite {
                t: intervals as f64 * dt,
            });
        }

        for f in field.iter_mut() {
            *f *= growth;
        }
        field.push(Complex64::new(1.0, 0.0));

        for j in 0..2 {
            fbar[j] += 0.5 * dt * (f_prev[j] + f_next[j]);
        }
        out.push(intervals as f64 * dt, f_next, fbar);
        f_prev2 = f_prev;
        f_prev = f_next;
    }
    Ok(out)
}
