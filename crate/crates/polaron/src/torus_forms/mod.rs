//! Periodic singular quadratic forms on the momentum lattice (2π/ℓ)ℤ³.
//!
//! Lattice momenta are stored as integer triples; the physical momentum is
//! the triple times 2π/ℓ.

pub mod amplitude;
pub mod continuum;
pub mod forms;
pub mod periodic;

pub use amplitude::{random_fermionic, LatticeTuple, SampleManifest, SingularAmplitude, Triple};
pub use continuum::{g_norm_sq_radial, rep_sing_check, RadialProfile, RepSingCheck};
pub use forms::{
    fermionic_components, form_bounds_check, g_norm_sq, l_sum, t_alpha_per, t_dia_per, t_off_per,
    t_off_per_complex, t_tilde_per, FormBoundsCheck, TorusFormBreakdown,
};
pub use periodic::{l_periodic, l_periodic_detail, LPeriodic};
