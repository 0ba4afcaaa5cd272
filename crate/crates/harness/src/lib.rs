//! Monte Carlo size and power studies for the adaptive L-statistic test,
//! plus the probes behind `ltest verify` and the one-shot `ltest test`.
//!
//! A study is described by an [`ExperimentSpec`]; [`run_size_experiment`]
//! and [`run_power_experiment`] turn it into [`ResultRow`]s and
//! [`emit_csv`] writes them in a fixed, byte-reproducible layout.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod output;
pub mod spec;
pub mod verify;

pub use error::{HarnessError, Result};
pub use experiment::{run_power_experiment, run_size_experiment, size_gate, ResultRow, RunOptions};
pub use output::{emit_csv, read_csv, render_csv, Manifest};
pub use spec::{Design, ExperimentSpec};
