use std::ops::ControlFlow;

use num_complex::Complex64;

use super::noise::NoisePath;
use crate::coefficients::{
    closed_rhs, closed_second_derivative, CoefficientTrajectory, IntegratorConfig,
};
use crate::error::{Error, Result};
use crate::integrator::integrate;
use crate::model::ModelSpec;

/// Unnormalized amplitudes (c₁, c₂, c₃) of one stochastic wavefunction.
pub type StochasticState = [Complex64; 3];

/// Value, first and second derivative of a coefficient at a grid point.
type Jet = [Complex64; 3];

/// Quintic Hermite interpolation at s ∈ [0, 1] of an interval of length h.
fn hermite(s: f64, h: f64, a: &Jet, b: &Jet) -> Complex64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h2 = h * h;
    a[0] * (1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5)
        + a[1] * (h * (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5))
        + a[2] * (h2 * 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5))
        + b[0] * (10.0 * s3 - 15.0 * s4 + 6.0 * s5)
        + b[1] * (h * (-4.0 * s3 + 7.0 * s4 - 3.0 * s5))
        + b[2] * (h2 * 0.5 * (s3 - 2.0 * s4 + s5))
}

/// Integrate one noise realization across the coefficient grid.
///
/// dc₃/dt = (−iω − F₁ − F₂)c₃ and dcⱼ/dt = z*ⱼ(t)c₃. Between grid points Fⱼ
/// is the quintic Hermite interpolant built from the coefficient equation's own
/// first and second derivatives, and the noise is linear.
pub fn propagate_trajectory(
    model: &ModelSpec,
    coeffs: &CoefficientTrajectory,
    noise: &NoisePath,
    initial: StochasticState,
    cfg: &IntegratorConfig,
) -> Result<Vec<StochasticState>> {
    let n = coeffs.len();
    if noise.z1.len() != n || noise.z2.len() != n {
        return Err(Error::GridMismatch(format!(
            "noise has {}/{} points, coefficients have {n}",
            noise.z1.len(),
            noise.z2.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(initial);
    let stepper = cfg.stepper();
    let i_omega = Complex64::new(0.0, model.omega());
    let jets: Vec<[Jet; 2]> = (0..n)
        .map(|k| {
            let (f1, f2) = (coeffs.f1[k], coeffs.f2[k]);
            let d = closed_rhs(model, f1, f2);
            let dd = closed_second_derivative(model, f1, f2);
            [[f1, d[0], dd[0]], [f2, d[1], dd[1]]]
        })
        .collect();

    let mut y = initial;
    for k in 0..n - 1 {
        let (t0, t1) = (coeffs.times[k], coeffs.times[k + 1]);
        let h = t1 - t0;
        let (ja, jb) = (&jets[k], &jets[k + 1]);
        let (z1a, z1b, z2a, z2b) = (noise.z1[k], noise.z1[k + 1], noise.z2[k], noise.z2[k + 1]);
        let rhs = |t: f64, c: &StochasticState| -> StochasticState {
            let s = (t - t0) / h;
            let f = hermite(s, h, &ja[0], &jb[0]) + hermite(s, h, &ja[1], &jb[1]);
            let z1 = z1a + (z1b - z1a) * s;
            let z2 = z2a + (z2b - z2a) * s;
            [z1 * c[2], z2 * c[2], -(i_omega + f) * c[2]]
        };
        let mut next = y;
        integrate(rhs, t0, y, t1, &stepper, |step| {
            if step.t_new() >= t1 {
                next = *step.y_new();
            }
            ControlFlow::Continue(())
        })?;
        if next.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { t: t1 });
        }
        y = next;
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::evolve_coefficients;
    use crate::dynamics::populations;
    use crate::stochastic::{sample_noise, trajectory_rng};

    fn cfg(t_max: f64) -> IntegratorConfig {
        IntegratorConfig {
            t_max,
            rho33_floor: 0.0,
            ..IntegratorConfig::default()
        }
    }

    const EXCITED: StochasticState = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];

    #[test]
    fn hermite_is_exact_on_quintics() {
        let p = |t: f64| Complex64::new(t.powi(5) - 2.0 * t * t, 0.5 * t.powi(3));
        let dp = |t: f64| Complex64::new(5.0 * t.powi(4) - 4.0 * t, 1.5 * t * t);
        let ddp = |t: f64| Complex64::new(20.0 * t.powi(3) - 4.0, 3.0 * t);
        let (t0, h) = (0.3, 0.7);
        let a = [p(t0), dp(t0), ddp(t0)];
        let b = [p(t0 + h), dp(t0 + h), ddp(t0 + h)];
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((hermite(s, h, &a, &b) - p(t0 + s * h)).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_noise_reproduces_deterministic_decay() {
        let m = ModelSpec::from_rates(0.2, 1.0, 10.0, 1.0).unwrap();
        let c = cfg(10.0);
        let coeffs = evolve_coefficients(&m, &c).unwrap();
        let dyn_ = populations(&coeffs, &m).unwrap();
        let path =
            propagate_trajectory(&m, &coeffs, &NoisePath::zero(coeffs.len()), EXCITED, &c).unwrap();
        assert_eq!(path[0], EXCITED);
        for (k, s) in path.iter().enumerate() {
            assert_eq!(s[0], Complex64::new(0.0, 0.0));
            assert_eq!(s[1], Complex64::new(0.0, 0.0));
            assert!(
                (s[2].norm_sqr() - dyn_.rho33[k]).abs() < 1e-8,
                "t = {} diff {:e}",
                coeffs.times[k],
                s[2].norm_sqr() - dyn_.rho33[k]
            );
        }
    }

    #[test]
    fn uncoupled_system_only_rotates() {
        let m = ModelSpec::from_rates(1.0, 0.0, 2.0, 0.0).unwrap();
        let c = cfg(5.0);
        let coeffs = evolve_coefficients(&m, &c).unwrap();
        let mut rng = trajectory_rng(3, 0);
        let noise = NoisePath {
            z1: sample_noise(m.bath_left(), &coeffs.times, &mut rng).unwrap(),
            z2: sample_noise(m.bath_right(), &coeffs.times, &mut rng).unwrap(),
        };
        let path = propagate_trajectory(&m, &coeffs, &noise, EXCITED, &c).unwrap();
        for (k, s) in path.iter().enumerate() {
            let t = coeffs.times[k];
            assert!((s[2] - Complex64::new(0.0, -t).exp()).norm() < 1e-8);
            assert_eq!(s[0], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let m = ModelSpec::from_rates(1.0, 1.0, 2.0, 1.0).unwrap();
        let c = cfg(1.0);
        let coeffs = evolve_coefficients(&m, &c).unwrap();
        assert!(matches!(
            propagate_trajectory(&m, &coeffs, &NoisePath::zero(3), EXCITED, &c),
            Err(Error::GridMismatch(_))
        ));
    }
}
