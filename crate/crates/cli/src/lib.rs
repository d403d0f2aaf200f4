//! File formats, configuration, scenario export and the subcommands of the
//! `g2pp` binary. The numerics live in `g2pp-core`.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod scenario;

pub use crate::commands::Context;
pub use crate::error::{CliError, Result};
