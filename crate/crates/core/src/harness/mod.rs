//! Configuration-driven sweeps, plots and the verification suite.

pub mod config;
pub mod plot;
pub mod suite;
pub mod sweep;

pub use config::ExperimentConfig;
pub use suite::{verify_suite, SuiteOptions};
pub use sweep::{run_sweep, RunManifest, SweepOptions};
