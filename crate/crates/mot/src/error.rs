//! Crate-wide error type.

use thiserror::Error;

use crate::lp::LpStatus;
use crate::marginals::ConvexOrderReport;

#[derive(Debug, Error)]
pub enum Error {
    /// A call curve has a negative discrete second difference: butterfly
    /// arbitrage in the quotes. Detected, never repaired.
    #[error("call curve not convex at strike {strike}: second difference {second_difference:e}")]
    NonConvexCurve { strike: f64, second_difference: f64 },

    /// Calibration produced a negative probability cell beyond tolerance;
    /// renormalising would silently hide it.
    #[error("calibration produced negative mass {mass:e} at strike {strike}")]
    NegativeMass { strike: f64, mass: f64 },

    /// Payoff kind string not recognised.
    #[error("unknown payoff kind `{0}`")]
    UnknownKind(String),

    /// The LP solver broke down (iteration cap, numerical failure, or a
    /// solution that failed its own residual checks).
    #[error("LP solver failure after {iterations} iterations: {detail}")]
    SolverFailure { iterations: usize, detail: String },

    /// A measure or hedge was requested from a non-optimal LP solution.
    #[error("LP solution is not optimal (status {0:?})")]
    NotOptimal(LpStatus),

    /// A path coordinate does not lie on the marginal support grid.
    #[error("coordinate {value} at date {date} is not on the grid")]
    OffGridPath { date: usize, value: f64 },

    /// The market marginals admit no martingale measure (unequal means or a
    /// convex-order violation). Carries the full violation report.
    #[error("no martingale measure is consistent with the marginals ({} mean / {} order violations)",
            .0.mean_violations.len(), .0.order_violations.len())]
    InfeasibleModel(Box<ConvexOrderReport>),

    /// The utility is flat in every neighbourhood of the candidate inverse,
    /// so the strict-increase hypothesis fails at this level.
    #[error("utility has a plateau at level {alpha} (candidate inverse {beta})")]
    PlateauAtLevel { alpha: f64, beta: f64 },

    /// The requested utility level lies outside the closure of the range.
    #[error("utility level {alpha} is outside the attainable range")]
    OutOfRange { alpha: f64 },

    /// Exhaustive success-set enumeration was requested beyond the cap.
    #[error("path space has {paths} paths, beyond the exhaustive cap {cap}")]
    TooLarge { paths: usize, cap: usize },

    /// Structural input problem: shape mismatches, unsorted grids, invalid
    /// probabilities, precondition violations.
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
