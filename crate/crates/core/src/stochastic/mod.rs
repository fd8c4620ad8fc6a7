//! Stochastic-wavefunction cross-check of the deterministic dynamics.
//!
//! Each trajectory integrates the linear diffusion equation for the
//! amplitudes (c₁, c₂, c₃) driven by colored Gaussian noise with the bath
//! correlation function as covariance. The ensemble mean of |ψ⟩⟨ψ| is an
//! unbiased estimate of the density matrix.

mod ensemble;
mod noise;
mod trajectory;

pub use ensemble::{ensemble_average, EnsembleEstimate, EnsembleOptions};
pub use noise::{sample_noise, trajectory_rng, uniform_step, NoisePath};
pub use trajectory::{propagate_trajectory, StochasticState};
