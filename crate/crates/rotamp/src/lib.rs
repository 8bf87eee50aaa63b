//! Approximate message passing for rotationally invariant random matrices.
//!
//! The crate is organised bottom-up:
//!
//! * [`freeprob`]: moments, free cumulants (square and rectangular), partial-moment
//!   coefficients and transform evaluation.
//! * [`spectra`]: spectral laws, spectrum sampling and empirical moments.
//! * [`ensembles`]: Haar rotations, priors and spiked instances.
//! * [`amp_engine`]: general symmetric and rectangular AMP with cumulant-built
//!   Onsager corrections, plus the partial-moment matrix identities.
//! * [`state_evolution`]: Bayes-AMP state evolution for spiked PCA, fixed points and
//!   spectral-PCA baselines.
//! * [`cli`]: configuration, experiment drivers and output formats used by the binary.

pub mod amp_engine;
pub mod cli;
pub mod ensembles;
pub mod error;
pub mod freeprob;
pub mod quadrature;
pub mod rng;
pub mod spectra;
pub mod state_evolution;

pub use error::{Error, Result};
