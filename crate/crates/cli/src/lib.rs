//! Library side of the `mono3d` command-line tool.

pub mod commands;
pub mod error;
pub mod format;
pub mod io;
pub mod records;
pub mod synth;

pub use commands::{run, run_args, Cli};
pub use error::{exit_code, MetricFailure};
