//! Phase-space nonclassicality witnesses for single-mode bosonic states.
//!
//! The witness matrix of order `n` is built from an s-parametrized
//! quasiprobability evaluated at the pairwise midpoints of `n` phase-space
//! points. It is positive semidefinite for every classical state, so a
//! negative eigenvalue certifies nonclassicality.

pub mod analytic;
pub mod detector;
pub mod error;
pub mod optimize;
pub mod quasiprob;
mod special;
pub mod states;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use quasiprob::{OrderingParameter, ScaledValue};
pub use states::{FockDensityMatrix, GaussianState, QuantumState, SqueezedFock, StateSpec};

pub use witness::{PhasePointSet, SearchConfig, Verdict, WitnessMatrix, WitnessReport};
