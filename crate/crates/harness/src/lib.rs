//! Deterministic experiment sweeps over the `contract-sched` library, written
//! as CSV.

pub mod dist_spec;
pub mod error;
pub mod experiments;
pub mod params;
pub mod seed;
pub mod spec;
pub mod table;

pub use error::{HarnessError, Result};
pub use experiments::{find, list_experiments, registry, run, Experiment};
pub use params::ParamValue;
pub use spec::{ExperimentSpec, SpecOverrides, THREADS_ENV};
pub use table::{Cell, Table};
