use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{sample_noise, trajectory_rng, NoisePath};
use super::trajectory::{propagate_trajectory, StochasticState};
use crate::coefficients::{evolve_coefficients, CoefficientTrajectory, IntegratorConfig};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::model::ModelSpec;

/// Trajectories per work unit. Fixed so the summation order never depends on
/// the number of workers.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub seed: u64,
    /// 0 uses every hardware thread.
    pub workers: usize,
    /// Drive the trajectories with z instead of z*.
    pub conjugate_noise: bool,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            n_traj: 10_000,
            seed: 1,
            workers: 0,
            conjugate_noise: false,
        }
    }
}

/// Ensemble mean of |ψ⟩⟨ψ| with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    pub times: Vec<f64>,
    /// ρ̂(t) indexed `[k][a][b]`, levels in the order |1⟩, |2⟩, |3⟩.
    pub rho: Vec<[[Complex64; 3]; 3]>,
    /// Standard error of each entry of ρ̂.
    pub stderr: Vec<[[f64; 3]; 3]>,
    /// Standard error of the trace.
    pub trace_stderr: Vec<f64>,
    pub n_traj: usize,
    pub seed: u64,
}

impl EnsembleEstimate {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn trace(&self, k: usize) -> f64 {
        (0..3).map(|a| self.rho[k][a][a].re).sum()
    }

    pub fn population(&self, level: usize) -> Vec<f64> {
        self.rho.iter().map(|r| r[level][level].re).collect()
    }

    /// Largest |ρ̂ₐᵦ − ρ̂ᵦₐ*| over the grid.
    pub fn hermiticity_error(&self) -> f64 {
        self.rho
            .iter()
            .flat_map(|r| {
                (0..3).flat_map(move |a| (0..3).map(move |b| (r[a][b] - r[b][a].conj()).norm()))
            })
            .fold(0.0, f64::max)
    }
}

/// Running sums over trajectories at every grid point.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    sum: Vec<[Complex64; 6]>,
    sum_sq: Vec<[f64; 6]>,
    trace: Vec<f64>,
    trace_sq: Vec<f64>,
}

/// Upper-triangle entries (a, b), a ≤ b.
const UPPER: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            count: 0,
            sum: vec![[Complex64::new(0.0, 0.0); 6]; n],
            sum_sq: vec![[0.0; 6]; n],
            trace: vec![0.0; n],
            trace_sq: vec![0.0; n],
        }
    }

    fn add_path(&mut self, path: &[StochasticState]) {
        self.count += 1;
        for (k, c) in path.iter().enumerate() {
            for (e, &(a, b)) in UPPER.iter().enumerate() {
                let x = c[a] * c[b].conj();
                self.sum[k][e] += x;
                self.sum_sq[k][e] += x.norm_sqr();
            }
            let tr = c.iter().map(Complex64::norm_sqr).sum::<f64>();
            self.trace[k] += tr;
            self.trace_sq[k] += tr * tr;
        }
    }

    fn merge(mut self, other: Moments) -> Moments {
        self.count += other.count;
        for k in 0..self.sum.len() {
            for e in 0..6 {
                self.sum[k][e] += other.sum[k][e];
                self.sum_sq[k][e] += other.sum_sq[k][e];
            }
            self.trace[k] += other.trace[k];
            self.trace_sq[k] += other.trace_sq[k];
        }
        self
    }
}

/// Pairwise reduction in index order.
fn reduce(mut parts: Vec<Moments>) -> Option<Moments> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop()
}

fn standard_error(sum_sq: f64, mean_norm_sq: f64, n: f64) -> f64 {
    ((sum_sq - n * mean_norm_sq).max(0.0) / (n * (n - 1.0))).sqrt()
}

/// Initial basis state drawn from the diagonal initial populations.
fn initial_state<R: Rng + ?Sized>(populations: [f64; 3], rng: &mut R) -> StochasticState {
    let u: f64 = rng.random();
    let level = if u < populations[0] {
        0
    } else if u < populations[0] + populations[1] {
        1
    } else {
        2
    };
    let mut c = [Complex64::new(0.0, 0.0); 3];
    c[level] = Complex64::new(1.0, 0.0);
    c
}

fn run_trajectory(
    model: &ModelSpec,
    coeffs: &CoefficientTrajectory,
    cfg: &IntegratorConfig,
    opts: &EnsembleOptions,
    index: usize,
) -> Result<Vec<StochasticState>> {
    let mut rng = trajectory_rng(opts.seed, index as u64);
    let initial = initial_state(model.initial_populations(), &mut rng);
    let mut noise = NoisePath {
        z1: sample_noise(model.bath_left(), &coeffs.times, &mut rng)?,
        z2: sample_noise(model.bath_right(), &coeffs.times, &mut rng)?,
    };
    if opts.conjugate_noise {
        noise = noise.conjugated();
    }
    propagate_trajectory(model, coeffs, &noise, initial, cfg)
}

/// Average |ψ⟩⟨ψ| over `opts.n_traj` independent noise realizations.
///
/// Trajectory i draws from its own stream derived from (seed, i), and chunk
/// sums are combined in a fixed order, so the estimate is bit-identical for
/// any worker count.
pub fn ensemble_average(
    model: &ModelSpec,
    cfg: &IntegratorConfig,
    opts: &EnsembleOptions,
) -> Result<EnsembleEstimate> {
    if opts.n_traj < 2 {
        return Err(Error::invalid(
            "n_traj",
            format!("need at least 2 trajectories, got {}", opts.n_traj),
        ));
    }
    model.validate()?;
    cfg.validate()?;
    let coeffs = evolve_coefficients(model, cfg)?;
    let n = coeffs.len();

    let chunks = opts.n_traj.div_ceil(CHUNK);
    let parts = map_indexed(chunks, opts.workers, |c| -> Result<Moments> {
        let mut m = Moments::new(n);
        for i in c * CHUNK..((c + 1) * CHUNK).min(opts.n_traj) {
            m.add_path(&run_trajectory(model, &coeffs, cfg, opts, i)?);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let total = reduce(parts).expect("at least one chunk");

    let nf = total.count as f64;
    let mut rho = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let mut trace_stderr = Vec::with_capacity(n);
    for k in 0..n {
        let mut r = [[Complex64::new(0.0, 0.0); 3]; 3];
        let mut s = [[0.0; 3]; 3];
        for (e, &(a, b)) in UPPER.iter().enumerate() {
            let mean = total.sum[k][e] / nf;
            let se = standard_error(total.sum_sq[k][e], mean.norm_sqr(), nf);
            r[a][b] = mean;
            r[b][a] = mean.conj();
            s[a][b] = se;
            s[b][a] = se;
        }
        let tr = total.trace[k] / nf;
        trace_stderr.push(standard_error(total.trace_sq[k], tr * tr, nf));
        rho.push(r);
        stderr.push(s);
    }
    Ok(EnsembleEstimate {
        times: coeffs.times,
        rho,
        stderr,
        trace_stderr,
        n_traj: opts.n_traj,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> IntegratorConfig {
        IntegratorConfig {
            t_max: 3.0,
            rho33_floor: 0.0,
            ..IntegratorConfig::default()
        }
    }

    fn opts(n_traj: usize, workers: usize) -> EnsembleOptions {
        EnsembleOptions {
            n_traj,
            seed: 42,
            workers,
            conjugate_noise: false,
        }
    }

    #[test]
    fn two_trajectories_give_hermitian_finite_estimate() {
        let m = ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).unwrap();
        let e = ensemble_average(&m, &short(), &opts(2, 1)).unwrap();
        assert_eq!(e.hermiticity_error(), 0.0);
        assert!((0..e.len()).all(|k| e.trace(k).is_finite()));
        assert_eq!(e.rho[0][2][2], Complex64::new(1.0, 0.0));
        assert!(ensemble_average(&m, &short(), &opts(1, 1)).is_err());
    }

    #[test]
    fn estimate_is_identical_across_worker_counts() {
        let m = ModelSpec::from_rates(0.5, 1.0, 2.0, 0.7).unwrap();
        let serial = ensemble_average(&m, &short(), &opts(200, 1)).unwrap();
        for workers in [2, 3, 0] {
            assert_eq!(
                ensemble_average(&m, &short(), &opts(200, workers)).unwrap(),
                serial
            );
        }
    }

    #[test]
    fn mixed_initial_state_is_sampled() {
        let bath = crate::model::BathSpec::new(1.0, 1.0).unwrap();
        let m = ModelSpec::with_options(1.0, bath, bath, [0.25, 0.25, 0.5]).unwrap();
        let e = ensemble_average(&m, &short(), &opts(4000, 0)).unwrap();
        for level in 0..3 {
            let p = e.rho[0][level][level].re;
            let se = e.stderr[0][level][level];
            let target = m.initial_populations()[level];
            assert!(
                (p - target).abs() < 5.0 * se,
                "level {level}: {p} vs {target}"
            );
        }
    }

    #[test]
    fn standard_error_shrinks_as_inverse_root_n() {
        let m = ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).unwrap();
        let small = ensemble_average(&m, &short(), &opts(500, 0)).unwrap();
        let large = ensemble_average(&m, &short(), &opts(2000, 0)).unwrap();
        let k = small.len() - 1;
        let ratio = small.stderr[k][0][0] / large.stderr[k][0][0];
        assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
    }

    #[test]
    fn conjugated_noise_gives_a_consistent_estimate() {
        let m = ModelSpec::from_rates(1.0, 1.0, 1.0, 1.0).unwrap();
        let plain = ensemble_average(&m, &short(), &opts(2000, 0)).unwrap();
        let conj = ensemble_average(
            &m,
            &short(),
            &EnsembleOptions {
                conjugate_noise: true,
                ..opts(2000, 0)
            },
        )
        .unwrap();
        for k in (0..plain.len()).step_by(50) {
            for level in 0..2 {
                let (a, b) = (plain.rho[k][level][level].re, conj.rho[k][level][level].re);
                let se = plain.stderr[k][level][level].hypot(conj.stderr[k][level][level]);
                assert!((a - b).abs() <= 5.0 * se, "t index {k} level {level}");
            }
            // c₃ ignores the noise; only the adaptive step sequence differs.
            assert!((plain.rho[k][2][2] - conj.rho[k][2][2]).norm() < 1e-8);
        }
    }
}
