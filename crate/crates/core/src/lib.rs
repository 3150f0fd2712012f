//! Pseudo-spectral convex integration for the stochastic fractional
//! Navier-Stokes equations on the torus `[-pi, pi]^3`.
//!
//! The crate is organised along the stages of the iteration:
//!
//! * [`spectral`]: grids, FFTs, Fourier multipliers, the inverse divergence,
//!   Hoelder norm estimators and mollifiers.
//! * [`beltrami`]: the two direction families, Beltrami waves and the
//!   geometric lemma.
//! * [`noise`]: Ornstein-Uhlenbeck forcing, geometric Brownian factor and
//!   stopping times.
//! * [`construction`]: schedule, base cases, flow maps, amplitudes,
//!   perturbations and stress assembly.
//! * [`verify`]: residuals, inductive bounds, scaling fits and reports.
//! * [`config`] and [`driver`]: the run configuration and the build, verify
//!   and scaling runs used by the binary.

pub mod beltrami;
pub mod config;
pub mod construction;
pub mod driver;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
