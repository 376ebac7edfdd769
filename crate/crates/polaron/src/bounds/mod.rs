//! Constants registry and the assembled lower bounds.

pub mod calculators;
pub mod calibrate;
pub mod registry;

pub use calculators::{
    bound_confined, bound_main, bound_unconfined, choose_ell, default_kappa, mu_apriori, n_zero,
    BoundKind, BoundReport, RegistrySnapshot,
};
pub use calibrate::{
    c_l_prime_mass_spread, c_t_asymptote, c_t_enumeration, calibrate, enumerate_c_t, fit_c_l_prime,
    lper_sweep, unconfined_floor, CalibrationOutput, CalibrationSpec, CtEnumeration, LperSample,
    LperSweepSpec,
};
pub use registry::{
    derive_c_l, sha256_hex, ConstantEntry, ConstantsRegistry, Provenance, SCHEMA_VERSION,
};
