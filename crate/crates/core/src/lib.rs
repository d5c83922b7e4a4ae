//! Forward and backward time observables on discrete Hardy spaces.
//!
//! The crate realizes, on uniform grids and truncated Fock spaces, the
//! quasi-affine maps from a physical Hilbert space with absolutely continuous
//! spectrum `ℝ⁺` into the Hardy spaces ℋ±, the time observables they induce,
//! the associated norm and spectral flows, characteristic functions of the
//! resulting contractions, and Euler integration of unitary quantum stochastic
//! differential equations together with their Hardy-space images.

pub mod error;
pub mod exec;
pub mod cauchyflow;
pub mod cli;
pub mod contraction;
pub mod fock;
pub mod grid;
pub mod hardy;
pub mod linalg;
pub mod qsde;
pub mod quasiaffine;
pub mod timeobs;

pub use error::{Error, Result};
pub use exec::Execution;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
