//! Configuration-driven sweeps, report artifacts and the self-test.

pub mod config;
pub mod selftest;
pub mod sweep;

pub use config::{Axis, Grid, Numerics, Outputs, Quadrature, Spacing, SweepConfig, SweepSpec};
pub use selftest::{selftest, Check, SelftestReport};
pub use sweep::{emit_report, run_sweep, sweep_report, tool_version, write_csv, SweepReport, SweepRow, CSV_HEADER};

use crate::error::Error;

/// Exit code for success.
pub const EXIT_PASS: i32 = 0;
/// Exit code for an invariant or numerical failure.
pub const EXIT_INVARIANT: i32 = 1;
/// Exit code for a configuration or i/o error.
pub const EXIT_CONFIG: i32 = 2;

/// Maps an error onto the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io { .. }
        | Error::InvalidModel(_)
        | Error::InvalidBeta(_)
        | Error::OutOfRange { .. }
        | Error::ExceedsCap { .. }
        | Error::SiteOutOfRange { .. }
        | Error::InvalidQuadrature(_)
        | Error::InvalidRegion(_)
        | Error::InsufficientFitPoints { .. }
        | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_INVARIANT,
    }
}
