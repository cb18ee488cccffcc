#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Config-driven command-line front end for the TBA solver: define
//! instances, run solves and verification suites, emit CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod run;
pub mod scan;
pub mod verify;

pub use error::{CliError, CliResult};
