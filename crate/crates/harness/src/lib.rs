//! Instance files, generators, the experiment runner and the acceptance suite
//! behind the `vsched` command-line tool.

pub mod acceptance;
pub mod bench;
pub mod error;
pub mod files;
pub mod gen;
pub mod run;

pub use error::{HarnessError, Result};
