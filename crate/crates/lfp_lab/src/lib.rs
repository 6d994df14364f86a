//! Desk-scale numerical laboratory for kinetic equations with heavy-tailed
//! equilibria: the kinetic Levy-Fokker-Planck equation and the heavy-tailed
//! BGK model, together with the weighted bilinear forms, functional-
//! inequality constants and decay diagnostics needed to verify exponential
//! relaxation of the hypocoercive triple norm.

pub mod coeffs;
pub mod config;
pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod fft;
pub mod forms;
pub mod fracops;
pub mod grid;
pub mod params;
pub mod phase;
pub mod solver_bgk;
pub mod solver_lfp;
pub mod specfun;
pub mod spline;

pub use error::{Error, Result};
pub use grid::{VelocityField, VelocityGrid};
pub use params::AlphaParams;
