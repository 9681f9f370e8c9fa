//! File formats, experiments and the `npef` command-line tool.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod plots;

pub use error::{Error, ErrorClass, Result};
