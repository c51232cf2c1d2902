//! Fairness auditing and mitigation for clinical risk models: group metrics,
//! equalized-odds post-processing, embedding debiasing, score ensembling and
//! synthetic cohorts.

pub mod debias;
pub mod ensemble;
pub mod eo;
pub mod error;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod par;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use par::Execution;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
