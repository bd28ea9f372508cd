//! Command-line front end and benchmark harness for `ctop-core`.
//!
//! [`harness::run_bench`] solves every instance of a directory under a
//! matrix of models and preprocessing flag sets, [`record`] holds the CSV
//! and JSONL row type and [`profile`] turns rows into performance profiles.

pub mod cli;
pub mod harness;
pub mod profile;
pub mod record;

pub use harness::{run_bench, BenchConfig, BenchSpec, FlagSet};
pub use profile::{emit_profile, ProfilePoint};
pub use record::{RunRecord, RunStatus};
