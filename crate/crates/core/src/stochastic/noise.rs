use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::BathSpec;

/// Noise realizations z*ⱼ(t) of both baths on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub z1: Vec<Complex64>,
    pub z2: Vec<Complex64>,
}

impl NoisePath {
    /// Identically zero noise on `n` points.
    pub fn zero(n: usize) -> Self {
        NoisePath {
            z1: vec![Complex64::new(0.0, 0.0); n],
            z2: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.z1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z1.is_empty()
    }

    pub fn channel(&self, j: usize) -> &[Complex64] {
        match j {
            0 => &self.z1,
            1 => &self.z2,
            _ => panic!("channel index {j} out of range"),
        }
    }

    pub fn conjugated(mut self) -> Self {
        for z in self.z1.iter_mut().chain(self.z2.iter_mut()) {
            *z = z.conj();
        }
        self
    }
}

/// RNG stream of trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Spacing of a uniform grid, or `BadGrid` if the grid is not uniform.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Ok(0.0);
    }
    let t0 = times[0];
    let dt = times[1] - t0;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::BadGrid(format!("non-positive spacing {dt}")));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
            return Err(Error::BadGrid(format!(
                "point {k} at t = {t}, expected {expected}"
            )));
        }
    }
    Ok(dt)
}

/// Unit-variance circular complex normal: real and imaginary parts each N(0, 1/2).
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Stationary complex Ornstein–Uhlenbeck path with E[z(t)z*(s)] = (Γγ/2)e^{−γ|t−s|}
/// and E[z(t)z(s)] = 0 on a uniform grid.
///
/// Uses the exact one-step transition of the process, so the covariance is
/// exact at every grid lag regardless of the spacing.
pub fn sample_noise<R: Rng + ?Sized>(
    bath: &BathSpec,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let dt = uniform_step(times)?;
    let variance = bath.peak_correlation();
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return Ok(out);
    }
    let a = (-bath.gamma() * dt).exp();
    let innovation = (variance * (1.0 - a * a)).sqrt();
    let mut z = complex_normal(rng) * variance.sqrt();
    out.push(z);
    for _ in 1..times.len() {
        z = z * a + complex_normal(rng) * innovation;
        out.push(z);
    }
    Ok(out)
}
