//! Two-site random-matrix relaxation toolkit.
//!
//! A particle hops between two sites, each carrying `N` equidistant levels
//! `E_n = n/N`, through a block random matrix `V` whose diagonal blocks are
//! zero. This crate provides:
//!
//! - [`model`]: the unperturbed spectrum, the random interaction and initial states;
//! - [`propagator`]: exact unitary evolution and the truncated Duhamel series;
//! - [`ensemble`]: seeded, parallel ensemble averages and relaxation-rate fits;
//! - [`diagrammatics`]: Wick pairings, their classes, independent-variable counts
//!   and the pairing expansion of `E[Tr V^2k]`;
//! - [`effective`]: the band resolvent and the weak-coupling rate equation;
//! - [`bounds`]: quadrature checks of the integral inequalities used by the
//!   weak-coupling analysis.

pub mod bounds;
pub mod diagrammatics;
pub mod effective;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod propagator;
pub mod quadrature;
pub mod seeds;

pub use error::{Error, Result};
pub use model::{Hamiltonian, Site, SpectrumConfig, WaveVector};

/// Complex scalar used throughout; identical to `faer::c64`.
pub type C64 = num_complex::Complex64;
