//! The stability functional Λ(m), its lattice analogue Λ̃(m, κ) and the
//! critical mass.

pub mod integrate;
pub mod lattice;
pub mod search;

pub use integrate::{aligned_args, integrate_lambda, IntegralEstimate, IntegrationConfig};
pub use lattice::{
    fit_c_lambda, gap_log_slope, hybrid_lattice_sum, lambda_tilde, lattice_lambda_sum, DeltaSup,
    HybridConfig, LatticeSum, SweepRow, TildeConfig, TildeResult,
};
pub use search::{
    critical_mass, lambda_of_m, Argmax, CriticalMass, Gauge, LambdaResult, SupSearchConfig,
};
