//! Simulation library for Wong-Zakai-type approximations of SDEs driven by
//! Hilbert-space-valued semimartingales, truncated to a finite orthonormal
//! basis.
//!
//! The crate is organized around a small stack:
//!
//! - [`hilbert`]: dense coefficient vectors and Hilbert-Schmidt tensors;
//! - [`grid`] / [`path`]: uniform time grids and cadlag sample paths with
//!   explicit jump bookkeeping;
//! - [`tensor`]: partition-based tensor stochastic integrals, covariations
//!   and total variation, exact as discrete identities on a common grid;
//! - [`drivers`]: sample-path generators (Q-Wiener, Markov-chain drivers,
//!   mollified space-time white noise);
//! - [`approx`]: piecewise-linear interpolation and its step/residual split;
//! - [`sde`]: pathwise Euler solvers for the approximating and corrected
//!   limit equations, plus the correction field;
//! - [`lab`]: scenario configs, Monte Carlo orchestration, rate estimation,
//!   reports, and the exact-identity verification suite.

pub mod approx;
pub mod drivers;
pub mod error;
pub mod grid;
pub mod hilbert;
pub mod lab;
pub mod path;
pub mod sde;
pub mod tensor;

pub use error::{Error, Result};
