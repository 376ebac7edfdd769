#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Numerics for an impurity coupled to a Fermi gas by point interactions:
//! the stability functional Λ(m) and critical mass, periodic singular forms,
//! Dirichlet-box Lieb-Thirring checks, the localisation partition and the
//! assembled ground-state lower bounds.

pub mod bounds;
pub mod box_spectra;
pub mod error;
pub mod kernels;
pub mod lambda_functional;
pub mod localization;
pub mod numeric;
pub mod torus_forms;

pub use error::{Error, Result};
