//! File formats, fit reports and the `smoothcall` command line around
//! [`smoothcall_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod json;
pub mod mps;
pub mod report;

pub use error::{Error, Result};
