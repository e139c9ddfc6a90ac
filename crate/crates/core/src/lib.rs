//! Symmetric penalized least squares in the Gaussian sequence model and the
//! Gaussian-design linear model, with effective scalar representations,
//! state-evolution fixed points, and the associated risk diagnostics.

pub mod adaptivity;
pub mod assignment;
pub mod cli;
pub mod io;
pub mod isotonic;
pub mod linear_model;
pub mod measures;
pub mod normal;
pub mod penalties;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod scalar_rep;
pub mod sequence_model;
