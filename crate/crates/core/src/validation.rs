//! Self-consistency suite: closed ODE against quadrature, trace and flux
//! identities, and the equal-memory-rate sign property.

use rand::Rng;
use serde::Serialize;

use crate::coefficients::{evolve_coefficients, quadrature_oracle, IntegratorConfig};
use crate::dynamics::{flux_residual, populations, Difference};
use crate::error::Result;
use crate::exec::map_indexed;
use crate::flow::{detect_intervals, FlowSettings};
use crate::model::ModelSpec;
use crate::stochastic::trajectory_rng;

pub const ORACLE_GAMMAS: [f64; 4] = [0.2, 1.0, 5.0, 10.0];
pub const ORACLE_COUPLINGS: [f64; 3] = [0.5, 1.0, 2.0];
pub const ORACLE_T_MAX: f64 = 10.0;
pub const ORACLE_DT: f64 = 1e-3;
pub const ORACLE_TOL: f64 = 1e-5;
pub const TRACE_TOL: f64 = 1e-8;
pub const FLUX_TOL: f64 = 1e-4;
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Oracle parameter matrix γ × Γ. Each point is run once with identical baths
/// and once against a right bath shifted by one step along both lists, so
/// every value also appears in an asymmetric pairing.
pub fn oracle_models() -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for (i, &g) in ORACLE_GAMMAS.iter().enumerate() {
        for (j, &c) in ORACLE_COUPLINGS.iter().enumerate() {
            let g2 = ORACLE_GAMMAS[(i + 1) % ORACLE_GAMMAS.len()];
            let c2 = ORACLE_COUPLINGS[(j + 1) % ORACLE_COUPLINGS.len()];
            out.push(ModelSpec::from_rates(g, c, g, c).expect("valid oracle model"));
            out.push(ModelSpec::from_rates(g, c, g2, c2).expect("valid oracle model"));
        }
    }
    out
}

/// Max |F_closed − F_oracle| over both channels on [0, t_max] with spacing dt.
pub fn oracle_max_error(model: &ModelSpec, t_max: f64, dt: f64) -> Result<f64> {
    let cfg = IntegratorConfig {
        dt_out: dt,
        t_max,
        rho33_floor: 0.0,
        ..IntegratorConfig::default()
    };
    let closed = evolve_coefficients(model, &cfg)?;
    let oracle = quadrature_oracle(model, t_max, dt)?;
    let n = closed.len().min(oracle.len());
    Ok((0..n)
        .map(|k| {
            (closed.f1[k] - oracle.f1[k])
                .norm()
                .max((closed.f2[k] - oracle.f2[k]).norm())
        })
        .fold(0.0, f64::max))
}

pub fn check_oracle_equivalence(workers: usize) -> Result<Check> {
    let models = oracle_models();
    let errors = map_indexed(models.len(), workers, |k| {
        oracle_max_error(&models[k], ORACLE_T_MAX, ORACLE_DT)
    });
    let worst = errors
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Check {
        name: "oracle equivalence",
        passed: worst < ORACLE_TOL,
        detail: format!(
            "{} models, max |dF| = {worst:.3e} (tol {ORACLE_TOL:e})",
            models.len()
        ),
    })
}

/// Reference parameter sets plus the oracle matrix, used for the trace and flux checks.
pub fn dynamics_models() -> Vec<ModelSpec> {
    let mut out = vec![
        ModelSpec::from_rates(0.2, 1.0, 10.0, 1.0).expect("valid model"),
        ModelSpec::from_rates(0.2, 1.0, 1.0, 1.0).expect("valid model"),
        ModelSpec::from_rates(5.0, 0.5, 0.2, 1.0).expect("valid model"),
        ModelSpec::from_rates(0.2, 0.5, 5.0, 1.0).expect("valid model"),
    ];
    out.extend(oracle_models());
    out
}

/// Worst trace error and worst flux residual for `model` under `cfg`.
pub fn trace_and_flux(
    model: &ModelSpec,
    cfg: &IntegratorConfig,
    scheme: Difference,
) -> Result<(f64, f64)> {
    let coeffs = evolve_coefficients(model, cfg)?;
    let dyn_ = populations(&coeffs, model)?;
    Ok((
        dyn_.max_trace_error(),
        flux_residual(&dyn_, model.omega(), scheme),
    ))
}

pub fn check_trace_and_flux(workers: usize) -> Result<Check> {
    let models = dynamics_models();
    let cfg = IntegratorConfig::default();
    let results = map_indexed(models.len(), workers, |k| {
        trace_and_flux(&models[k], &cfg, Difference::SixthOrder)
    });
    let (mut trace, mut flux) = (0.0f64, 0.0f64);
    for r in results {
        let (t, f) = r?;
        trace = trace.max(t);
        flux = flux.max(f);
    }
    Ok(Check {
        name: "trace and flux identities",
        passed: trace < TRACE_TOL && flux < FLUX_TOL,
        detail: format!(
            "{} models, max trace error {trace:.3e} (tol {TRACE_TOL:e}), max flux residual {flux:.3e} (tol {FLUX_TOL:e}, sixth-order differences)",
            models.len()
        ),
    })
}

/// `count` random models with γ₁ = γ₂ and Γ₁ ≠ Γ₂, reproducible from `seed`.
pub fn equal_gamma_models(count: usize, seed: u64) -> Vec<ModelSpec> {
    let mut rng = trajectory_rng(seed, 0);
    (0..count)
        .map(|_| {
            let gamma = 10f64.powf(rng.random_range(-1.3..1.0));
            let c1: f64 = rng.random_range(0.1..3.0);
            let mut c2: f64 = rng.random_range(0.1..3.0);
            if (c1 - c2).abs() < 0.05 {
                c2 = c1 + 0.5;
            }
            ModelSpec::from_rates(gamma, c1, gamma, c2).expect("valid model")
        })
        .collect()
}

/// Most negative Re[F₁]·Re[F₂] over the grid and the first-interval duration.
pub fn sign_product_and_duration(model: &ModelSpec, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let coeffs = evolve_coefficients(model, cfg)?;
    let min_product = coeffs
        .f1
        .iter()
        .zip(&coeffs.f2)
        .map(|(a, b)| a.re * b.re)
        .fold(f64::INFINITY, f64::min);
    let duration = detect_intervals(&coeffs, &FlowSettings::default()).first_duration();
    Ok((min_product, duration))
}

pub fn check_same_spectral_form(seed: u64, workers: usize) -> Result<Check> {
    let models = equal_gamma_models(20, seed);
    let cfg = IntegratorConfig::default();
    let results = map_indexed(models.len(), workers, |k| {
        sign_product_and_duration(&models[k], &cfg)
    });
    let (mut worst, mut longest) = (f64::INFINITY, 0.0f64);
    for r in results {
        let (p, d) = r?;
        worst = worst.min(p);
        longest = longest.max(d);
    }
    Ok(Check {
        name: "equal memory rates share sign",
        passed: worst >= -SIGN_TOL && longest == 0.0,
        detail: format!("20 models, min Re F1 * Re F2 = {worst:.3e}, longest interval {longest}"),
    })
}

/// Run every check.
pub fn run_validation(seed: u64, workers: usize) -> Result<ValidationReport> {
    Ok(ValidationReport {
        checks: vec![
            check_oracle_equivalence(workers)?,
            check_trace_and_flux(workers)?,
            check_same_spectral_form(seed, workers)?,
        ],
    })
}
