//! Transient energy flow through a Λ-type three-level system coupled to two
//! zero-temperature non-Markovian bosonic baths.

pub mod coefficients;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod flow;
pub mod integrator;
pub mod model;
pub mod stochastic;
pub mod sweep;
pub mod validation;

pub use coefficients::{
    evolve_coefficients, quadrature_oracle, CoefficientTrajectory, IntegratorConfig,
};
pub use dynamics::{
    flux_residual, master_equation_residual, populations, Difference, DynamicsTrajectory,
};
pub use error::{Error, Result};
pub use flow::{
    classify, detect_intervals, diode_compare, duration_map_point, DiodeReport, Direction,
    FlowInterval, FlowRegime, FlowSettings, IntervalReport,
};
pub use model::{correlation, swap_baths, BathSpec, KernelFamily, ModelSpec};
pub use stochastic::{ensemble_average, EnsembleEstimate, EnsembleOptions};
pub use sweep::{run_sweep, SweepAxis, SweepGrid, SweepParam, SweepResult};
