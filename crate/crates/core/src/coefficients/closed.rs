use std::ops::ControlFlow;

use num_complex::Complex64;

use super::{CoefficientTrajectory, IntegratorConfig};
use crate::error::Result;
use crate::integrator::{integrate, State};
use crate::model::{KernelFamily, ModelSpec};

/// Right-hand side of the closed coefficient equations.
///
/// Differentiating Fⱼ(t) = ∫₀ᵗ αⱼ(t,s) fⱼ(t,s) ds with αⱼ ∝ exp(−γⱼ(t−s)) gives
/// dFⱼ/dt = Γⱼγⱼ/2 + (iω − γⱼ + F₁ + F₂)·Fⱼ.
pub fn closed_rhs(model: &ModelSpec, f1: Complex64, f2: Complex64) -> [Complex64; 2] {
    let drift = Complex64::new(0.0, model.omega()) + f1 + f2;
    let d = |channel: usize, f: Complex64| {
        let bath = model.bath(channel);
        match bath.kernel() {
            KernelFamily::Exponential => bath.peak_correlation() + (drift - bath.gamma()) * f,
        }
    };
    [d(0, f1), d(1, f2)]
}

/// Second time derivative of (F₁, F₂), from differentiating [`closed_rhs`].
pub fn closed_second_derivative(model: &ModelSpec, f1: Complex64, f2: Complex64) -> [Complex64; 2] {
    let d = closed_rhs(model, f1, f2);
    let drift = Complex64::new(0.0, model.omega()) + f1 + f2;
    let d_drift = d[0] + d[1];
    let dd = |channel: usize, f: Complex64, df: Complex64| {
        let bath = model.bath(channel);
        match bath.kernel() {
            KernelFamily::Exponential => d_drift * f + (drift - bath.gamma()) * df,
        }
    };
    [dd(0, f1, d[0]), dd(1, f2, d[1])]
}

/// Integrate F₁, F₂ (and F̄₁, F̄₂ as two extra components) onto the output grid.
pub fn evolve_coefficients(
    model: &ModelSpec,
    cfg: &IntegratorConfig,
) -> Result<CoefficientTrajectory> {
    model.validate()?;
    cfg.validate()?;
    let last = cfg.last_index();
    let dt = cfg.dt_out;
    let mut out = CoefficientTrajectory::with_capacity(dt, last + 1);
    let zero = Complex64::new(0.0, 0.0);
    out.push(0.0, [zero; 2], [zero; 2]);
    if last == 0 {
        return Ok(out);
    }

    let rhs = |_t: f64, y: &State<4>| {
        let [d1, d2] = closed_rhs(model, y[0], y[1]);
        [d1, d2, y[0], y[1]]
    };
    let floor = cfg.rho33_floor;
    let t_end = last as f64 * dt;
    let mut next = 1usize;
    let mut stop_time = None;

    integrate(rhs, 0.0, [zero; 4], t_end, &cfg.stepper(), |step| {
        while next <= last && next as f64 * dt <= step.t_new() {
            let t = next as f64 * dt;
            let y = if t == step.t_new() {
                *step.y_new()
            } else {
                step.eval(t)
            };
            out.push(t, [y[0], y[1]], [y[2], y[3]]);
            next += 1;
            if floor > 0.0 && (-2.0 * (y[2].re + y[3].re)).exp() < floor {
                stop_time = Some(t);
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    out.stop_time = stop_time;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BathSpec;

    #[test]
    fn second_derivative_matches_differenced_rhs() {
        let m = ModelSpec::from_rates(0.3, 1.0, 4.0, 0.5).unwrap();
        let (f1, f2) = (Complex64::new(0.2, -0.1), Complex64::new(0.4, 0.3));
        let d = closed_rhs(&m, f1, f2);
        let h = 1e-6;
        let fwd = closed_rhs(&m, f1 + d[0] * h, f2 + d[1] * h);
        let bwd = closed_rhs(&m, f1 - d[0] * h, f2 - d[1] * h);
        let dd = closed_second_derivative(&m, f1, f2);
        for j in 0..2 {
            assert!(((fwd[j] - bwd[j]) / (2.0 * h) - dd[j]).norm() < 1e-7);
        }
    }

    fn cfg(t_max: f64) -> IntegratorConfig {
        IntegratorConfig {
            t_max,
            rho33_floor: 0.0,
            ..IntegratorConfig::default()
        }
    }

    #[test]
    fn starts_at_zero_and_fills_grid() {
        let m = ModelSpec::from_rates(0.2, 1.0, 10.0, 1.0).unwrap();
        let c = evolve_coefficients(&m, &cfg(5.0)).unwrap();
        assert_eq!(c.len(), 501);
        assert_eq!(c.f1[0], Complex64::new(0.0, 0.0));
        assert_eq!(c.fbar2[0], Complex64::new(0.0, 0.0));
        assert_eq!(c.times[500], 5.0);
        for (k, t) in c.times.iter().enumerate() {
            assert_eq!(*t, k as f64 * 0.01);
        }
        assert!(c.stop_time.is_none());
    }

    #[test]
    fn symmetric_baths_give_identical_coefficients() {
        let m = ModelSpec::from_rates(0.7, 1.3, 0.7, 1.3).unwrap();
        let c = evolve_coefficients(&m, &cfg(20.0)).unwrap();
        let max =
            c.f1.iter()
                .zip(&c.f2)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
        assert!(max < 1e-10, "{max}");
    }

    #[test]
    fn short_time_slope() {
        // Fⱼ(t) ≈ (Γⱼγⱼ/2)·t for small t.
        let m = ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).unwrap();
        let c = evolve_coefficients(
            &m,
            &IntegratorConfig {
                dt_out: 1e-3,
                t_max: 1e-3,
                rho33_floor: 0.0,
                ..IntegratorConfig::default()
            },
        )
        .unwrap();
        let f = c.f1[1];
        assert!((f.re - 5e-4).abs() < 5e-6, "{f}");
    }

    #[test]
    fn markov_plateau() {
        let m = ModelSpec::from_rates(200.0, 1.0, 200.0, 1.0).unwrap();
        let c = evolve_coefficients(&m, &cfg(3.0)).unwrap();
        for k in c.index_of(0.05)..c.len() {
            assert!(
                (c.f1[k].re - 0.5).abs() < 0.01,
                "t={} F={}",
                c.times[k],
                c.f1[k]
            );
        }
    }

    #[test]
    fn early_stop_on_floor() {
        let m = ModelSpec::from_rates(5.0, 1.0, 5.0, 1.0).unwrap();
        let c = evolve_coefficients(&m, &IntegratorConfig::default()).unwrap();
        let stop = c.stop_time.expect("should stop early");
        assert_eq!(*c.times.last().unwrap(), stop);
        assert!(c.decay_factor(c.len() - 1) < 1e-4);
        assert!(c.decay_factor(c.len() - 2) >= 1e-4);
    }

    #[test]
    fn zero_coupling_stays_zero() {
        let b = BathSpec::new(1.0, 0.0).unwrap();
        let m = ModelSpec::new(b, b).unwrap();
        let c = evolve_coefficients(&m, &cfg(10.0)).unwrap();
        assert!(c.f1.iter().chain(&c.fbar2).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn tiny_horizon_gives_single_point() {
        let m = ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).unwrap();
        let c = evolve_coefficients(
            &m,
            &IntegratorConfig {
                t_max: 0.001,
                ..IntegratorConfig::default()
            },
        )
        .unwrap();
        assert_eq!(c.len(), 1);
    }
}
