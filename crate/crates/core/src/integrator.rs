//! Adaptive Dormand–Prince 5(4) stepper with 4th-order dense output.
//!
//! States are fixed-size arrays of complex numbers; each component is scaled
//! by its modulus in the error norm.

use std::ops::ControlFlow;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State<const N: usize> = [Complex64; N];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output (Hairer & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Tolerances and step limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            h_max: 1.0,
            max_steps: 10_000_000,
        }
    }
}

/// One accepted step together with its continuous extension.
pub struct DenseStep<const N: usize> {
    t_old: f64,
    t_new: f64,
    y_new: State<N>,
    r: [State<N>; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn t_new(&self) -> f64 {
        self.t_new
    }

    pub fn y_new(&self) -> &State<N> {
        &self.y_new
    }

    /// Interpolated state at `t` in [t_old, t_new].
    pub fn eval(&self, t: f64) -> State<N> {
        let theta = (t - self.t_old) / (self.t_new - self.t_old);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        std::array::from_fn(|i| {
            r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

fn axpy<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    std::array::from_fn(|i| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        y[i] + acc * h
    })
}

fn is_finite<const N: usize>(y: &State<N>) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn initial_step<const N: usize, F>(
    rhs: &F,
    t0: f64,
    y0: &State<N>,
    f0: &State<N>,
    cfg: &StepperConfig,
) -> f64
where
    F: Fn(f64, &State<N>) -> State<N>,
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].norm();
        d0 += y0[i].norm_sqr() / (sc * sc);
        d1 += f0[i].norm_sqr() / (sc * sc);
    }
    let dim = N as f64;
    d0 = (d0 / dim).sqrt();
    d1 = (d1 / dim).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(cfg.h_max);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = rhs(t0 + h0, &y1);
    let mut d2 = 0.0;
    for i in 0..N {
        let diff = f1[i] - f0[i];
        let sc = cfg.abs_tol + cfg.rel_tol * y0[i].norm();
        d2 += diff.norm_sqr() / (sc * sc);
    }
    d2 = (d2 / dim).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.h_max)
}

/// Integrate `rhs` from `t0` to `t_end`, handing every accepted step to `on_step`.
///
/// Returning `ControlFlow::Break` from `on_step` stops the integration early.
pub fn integrate<const N: usize, F, S>(
    rhs: F,
    t0: f64,
    y0: State<N>,
    t_end: f64,
    cfg: &StepperConfig,
    mut on_step: S,
) -> Result<StepStats>
where
    F: Fn(f64, &State<N>) -> State<N>,
    S: FnMut(&DenseStep<N>) -> ControlFlow<()>,
{
    let mut stats = StepStats::default();
    if t_end <= t0 {
        return Ok(stats);
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    stats.rhs_evals += 1;
    let mut h = initial_step(&rhs, t, &y, &k1, cfg);
    stats.rhs_evals += 1;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::StepFailure { t, h });
        }
        let remaining = t_end - t;
        let finishing = h >= remaining * (1.0 - 1e-12);
        if finishing {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepFailure { t, h });
        }

        let k2 = rhs(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = rhs(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(
            t + C4 * h,
            &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = rhs(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let y6 = axpy(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let t_new = if finishing { t_end } else { t + h };
        let k6 = rhs(t_new, &y6);
        let y_new = axpy(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t_new, &y_new);
        stats.rhs_evals += 6;

        if !is_finite(&y_new) {
            return Err(Error::NonFinite { t: t_new });
        }

        let mut err = 0.0;
        for i in 0..N {
            let e =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
            err += e.norm_sqr() / (sc * sc);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            let r2: State<N> = std::array::from_fn(|i| y_new[i] - y[i]);
            let r3: State<N> = std::array::from_fn(|i| k1[i] * h - r2[i]);
            let r4: State<N> = std::array::from_fn(|i| r2[i] - k7[i] * h - r3[i]);
            let r5: State<N> = std::array::from_fn(|i| {
                (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h
            });
            let step = DenseStep {
                t_old: t,
                t_new,
                y_new,
                r: [y, r2, r3, r4, r5],
            };
            if on_step(&step).is_break() || finishing {
                return Ok(stats);
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(cfg.h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_exponential_with_dense_output() {
        // y' = (−0.3 + 2i) y, y(0) = 1.
        let lambda = c(-0.3, 2.0);
        let cfg = StepperConfig::default();
        let mut max_err: f64 = 0.0;
        let mut end = None;
        integrate(
            |_, y: &State<1>| [lambda * y[0]],
            0.0,
            [c(1.0, 0.0)],
            10.0,
            &cfg,
            |step| {
                for k in 0..=4 {
                    let t = step.t_old() + (step.t_new() - step.t_old()) * k as f64 / 4.0;
                    let exact = (lambda * t).exp();
                    max_err = max_err.max((step.eval(t)[0] - exact).norm());
                }
                end = Some((step.t_new(), step.y_new()[0]));
                ControlFlow::Continue(())
            },
        )
        .unwrap();
        assert!(max_err < 1e-8, "dense output error {max_err}");
        let (t_end, y_end) = end.unwrap();
        assert_eq!(t_end, 10.0);
        assert!((y_end - (lambda * 10.0).exp()).norm() < 1e-9);
    }

    #[test]
    fn early_break_stops_integration() {
        let cfg = StepperConfig::default();
        let mut calls = 0;
        let stats = integrate(
            |_, y: &State<1>| [-y[0]],
            0.0,
            [c(1.0, 0.0)],
            100.0,
            &cfg,
            |_| {
                calls += 1;
                if calls == 3 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )
        .unwrap();
        assert_eq!(calls, 3);
        assert_eq!(stats.accepted, 3);
    }

    #[test]
    fn blow_up_is_reported() {
        let cfg = StepperConfig::default();
        let res = integrate(
            |_, y: &State<1>| [y[0] * y[0]],
            0.0,
            [c(1.0, 0.0)],
            2.0,
            &cfg,
            |_| ControlFlow::Continue(()),
        );
        assert!(matches!(
            res,
            Err(Error::NonFinite { .. }) | Err(Error::StepFailure { .. })
        ));
    }
}
