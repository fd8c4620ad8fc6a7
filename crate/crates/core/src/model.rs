//! Physical configuration of the Λ system and its two baths.
//!
//! Units: ω = 1. Rates (γ, Γ) are in units of ω and times in units of 1/ω.
//! Bath 1 sits on the left and drives the channel |1⟩⟨3|; bath 2 sits on the
//! right and drives |2⟩⟨3|.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family of the two-time bath correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Zero-temperature Ornstein–Uhlenbeck kernel (Γγ/2)·exp(−γ|t−s|), a Lorentzian spectrum.
    #[default]
    Exponential,
}

/// Memory rate and coupling strength of one bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    gamma: f64,
    coupling: f64,
    #[serde(default)]
    kernel: KernelFamily,
}

impl BathSpec {
    /// Exponential-kernel bath. `gamma` must be positive, `coupling` non-negative.
    pub fn new(gamma: f64, coupling: f64) -> Result<Self> {
        Self::with_kernel(gamma, coupling, KernelFamily::Exponential)
    }

    pub fn with_kernel(gamma: f64, coupling: f64, kernel: KernelFamily) -> Result<Self> {
        let bath = BathSpec {
            gamma,
            coupling,
            kernel,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::invalid(
                "gamma",
                format!("gamma must be positive and finite, got {}", self.gamma),
            ));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::invalid(
                "coupling",
                format!(
                    "coupling must be non-negative and finite, got {}",
                    self.coupling
                ),
            ));
        }
        Ok(())
    }

    /// Inverse memory time γ.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Coupling strength Γ.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn kernel(&self) -> KernelFamily {
        self.kernel
    }

    /// Equal-time value α(t,t).
    pub fn peak_correlation(&self) -> f64 {
        0.5 * self.coupling * self.gamma
    }

    /// Bath correlation function α(t,s).
    pub fn correlation(&self, t: f64, s: f64) -> Complex64 {
        match self.kernel {
            KernelFamily::Exponential => Complex64::new(
                self.peak_correlation() * (-self.gamma * (t - s).abs()).exp(),
                0.0,
            ),
        }
    }
}

/// Free function form of [`BathSpec::correlation`].
pub fn correlation(bath: &BathSpec, t: f64, s: f64) -> Complex64 {
    bath.correlation(t, s)
}

/// Full physical configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    omega: f64,
    bath_left: BathSpec,
    bath_right: BathSpec,
    initial_populations: [f64; 3],
}

const POPULATION_SUM_TOL: f64 = 1e-12;

impl ModelSpec {
    /// Model with ω = 1, starting in the excited state |3⟩.
    pub fn new(bath_left: BathSpec, bath_right: BathSpec) -> Result<Self> {
        Self::with_options(1.0, bath_left, bath_right, [0.0, 0.0, 1.0])
    }

    /// Shorthand for `new` with exponential baths (γ₁, Γ₁) and (γ₂, Γ₂).
    pub fn from_rates(gamma1: f64, coupling1: f64, gamma2: f64, coupling2: f64) -> Result<Self> {
        Self::new(
            BathSpec::new(gamma1, coupling1)?,
            BathSpec::new(gamma2, coupling2)?,
        )
    }

    pub fn with_options(
        omega: f64,
        bath_left: BathSpec,
        bath_right: BathSpec,
        initial_populations: [f64; 3],
    ) -> Result<Self> {
        let model = ModelSpec {
            omega,
            bath_left,
            bath_right,
            initial_populations,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid(
                "omega",
                format!("omega must be positive, got {}", self.omega),
            ));
        }
        self.bath_left.validate()?;
        self.bath_right.validate()?;
        let p = self.initial_populations;
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid(
                "initial_populations",
                format!("each population must lie in [0, 1], got {p:?}"),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > POPULATION_SUM_TOL {
            return Err(Error::invalid(
                "initial_populations",
                format!("populations must sum to 1, got {sum}"),
            ));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn bath_left(&self) -> &BathSpec {
        &self.bath_left
    }

    pub fn bath_right(&self) -> &BathSpec {
        &self.bath_right
    }

    /// Bath by channel index (0 = left, 1 = right).
    pub fn bath(&self, channel: usize) -> &BathSpec {
        match channel {
            0 => &self.bath_left,
            1 => &self.bath_right,
            _ => panic!("channel index {channel} out of range"),
        }
    }

    /// (ρ₁₁(0), ρ₂₂(0), ρ₃₃(0)).
    pub fn initial_populations(&self) -> [f64; 3] {
        self.initial_populations
    }

    /// Exchange the memory rates γ₁ ↔ γ₂ while each coupling stays on its channel.
    ///
    /// This turns the forward diode geometry into the reversed one.
    pub fn swap_baths(&self) -> ModelSpec {
        let mut out = *self;
        out.bath_left.gamma = self.bath_right.gamma;
        out.bath_right.gamma = self.bath_left.gamma;
        out
    }

    /// Full mirror image: exchange (γ₁, Γ₁) ↔ (γ₂, Γ₂) and the lower-level populations.
    pub fn mirror(&self) -> ModelSpec {
        let [p1, p2, p3] = self.initial_populations;
        ModelSpec {
            omega: self.omega,
            bath_left: self.bath_right,
            bath_right: self.bath_left,
            initial_populations: [p2, p1, p3],
        }
    }

    pub fn with_left(&self, bath: BathSpec) -> Result<ModelSpec> {
        let mut out = *self;
        out.bath_left = bath;
        out.validate()?;
        Ok(out)
    }

    pub fn with_right(&self, bath: BathSpec) -> Result<ModelSpec> {
        let mut out = *self;
        out.bath_right = bath;
        out.validate()?;
        Ok(out)
    }
}

/// Free function form of [`ModelSpec::swap_baths`].
pub fn swap_baths(model: &ModelSpec) -> ModelSpec {
    model.swap_baths()
}
