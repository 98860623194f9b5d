//! Bayesian causal discovery from an essential graph and a budget of
//! interventional samples.

pub mod bench;
pub mod discovery;
pub mod effect;
mod error;
pub mod graph;
pub mod mec;
pub mod scm;
pub mod separating;

pub use error::{Error, Result};
