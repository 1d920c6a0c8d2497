//! File formats, experiment configuration and orchestration for
//! `cdmalab-core`, plus the `cdmalab` command-line tool.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod formats;
pub mod harness;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{Error, Result};
pub use harness::{run_experiment, RunSummary};
