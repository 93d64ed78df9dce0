//! Config-driven experiments and their artefacts.

pub mod commands;
pub mod config;
pub mod output;

use crate::Error;

/// Process exit status for an error: 2 for an infeasible or malformed config,
/// 3 for a tameness failure, 4 for a convergence anomaly, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible(_)
        | Error::Config(_)
        | Error::InvalidGeometry(_)
        | Error::NonIntegerFlux(_)
        | Error::Json(_) => 2,
        Error::NotTame { .. } => 3,
        Error::Convergence(_) => 4,
        _ => 1,
    }
}
