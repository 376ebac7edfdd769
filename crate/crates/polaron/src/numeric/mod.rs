//! Numerical building blocks: compensated sums, adaptive quadrature,
//! derivative-free optimisation and small 3-vector helpers.

pub mod optimize;
pub mod quad;
pub mod sum;
pub mod vec3;

pub use sum::NeumaierSum;
