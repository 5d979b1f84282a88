//! Library side of the `qgraph` command line tool: scenario files, CSV
//! tables and the command implementations.

pub mod commands;
pub mod error;
pub mod scenario;
pub mod table;

pub use error::{CliError, CliResult};
