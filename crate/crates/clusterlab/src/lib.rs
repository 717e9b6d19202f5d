//! Numerical laboratory for extremal clusters in heavy-tailed stationary time
//! series: block partitioning and exceedance machinery, a catalogue of cluster
//! functionals, tail-process samplers with Monte Carlo oracles, blocks
//! estimators and the associated empirical cluster processes, plus exact
//! enumeration oracles for the iid case.

pub mod config;
pub mod csvio;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod generators;
pub mod iid_oracle;
pub mod processes;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod tail_models;
pub mod window;

pub use error::{Error, Result};
