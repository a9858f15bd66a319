//! Experiment harness for `gdnls-core`: configuration files, the experiment
//! registry, CSV/JSON outputs, convergence studies and parameter sweeps.

pub mod config;
pub mod error;
pub mod experiments;
pub mod mu;
pub mod output;
pub mod sweep;

pub use config::RunConfig;
pub use error::{HarnessError, HarnessResult};
pub use experiments::{run_experiment, RunFailure};
pub use output::RunManifest;
