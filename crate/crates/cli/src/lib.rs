//! Library side of the `sst` command-line tool: run configuration, data
//! preparation and the subcommands.
//!
//! Exit codes are a stable contract: 0 success, 1 check failure,
//! 2 configuration error, 3 data error, 4 numeric failure.

pub mod bench;
pub mod commands;
pub mod config;
pub mod pipeline;

use sst_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Dimension(_) | Error::Input(_) | Error::Parse { .. } | Error::Io { .. } => EXIT_DATA,
        Error::Numeric(_) | Error::Domain(_) => EXIT_NUMERIC,
    }
}
