//! Case files, reports and the `gridseg` command-line tool built on
//! [`gridseg_core`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod casefile;
pub mod cli;
pub mod config;
pub mod output;
pub mod planfile;

pub use casefile::{parse_case, serialize_case, ParsedCase};
pub use config::RunConfig;
