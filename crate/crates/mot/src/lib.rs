//! Model-independent pricing and hedging of exotic payoffs on a finite grid.
//!
//! Given the marginal laws of a single asset at `n` future dates (recovered
//! from call quotes or supplied directly), the crate prices exotic payoffs
//! robustly over every martingale measure consistent with those marginals.
//! Pricing is a finite linear program over path probabilities; its dual is a
//! semi-static hedge (static vanilla legs per date plus a dynamic position
//! rebalanced at each date) that dominates the payoff pathwise.
//!
//! On top of the superhedging engine sit two pricing rules:
//!
//! * shortfall-risk pricing: the cheapest hedge keeping worst-case expected
//!   utility of the hedging error above a level `alpha` costs exactly the
//!   superhedging price plus `U^-1(alpha)`;
//! * quantile hedging: superhedging only with probability `alpha` reduces to
//!   knockout superhedging, minimised over feasible success sets.
//!
//! Everything is deterministic: fixed tie-breaking in the solver and in set
//! searches, no randomness anywhere in the pricing path.

pub mod error;
pub mod lp;
pub mod marginals;
pub mod payoffs;
pub mod quantile;
pub mod shortfall;
pub mod superhedge;

pub use error::Error;
pub use lp::{build_primal, extract_measure, solve, LinearProgram, LpSolution, LpStatus, MartingaleMeasure};
pub use marginals::{
    calibrate_from_calls, check_convex_order, synth_call_curve, CallCurve, Calibration,
    ConvexOrderReport, MarginalDistribution, MarketSpec,
};
pub use payoffs::{PathSpace, PayoffKind, PayoffSpec};
pub use quantile::{
    feasible, knockout_price, quantile_lower_bound, quantile_price_exhaustive,
    quantile_price_greedy, QuantileMethod, QuantileProblem, QuantileReport, ScenarioMeasure,
    ScenarioSet, SuccessSet,
};
pub use shortfall::{
    jensen_bound_check, shortfall_price, utility_inverse, utility_value,
    verify_shortfall_feasibility, ShortfallFeasibility, ShortfallReport, UtilityKind, UtilitySpec,
};
pub use superhedge::{superhedge_price, verify_superhedge, HedgePortfolio, PricingReport};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Numerical tolerances shared by validation, the solver, and reports.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Absolute tolerance for input checks: probability masses, means,
    /// convex-order call comparisons, curve convexity.
    pub input: f64,
    /// Feasibility tolerance: constraint residuals, pathwise hedge
    /// domination, success-set probability thresholds.
    pub feas: f64,
    /// Duality-gap tolerance between a primal optimum and its hedge cost.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            input: 1e-9,
            feas: 1e-9,
            gap: 1e-7,
        }
    }
}

impl Tolerances {
    /// Tolerances with a different input-validation threshold.
    pub fn with_input(input: f64) -> Self {
        Self {
            input,
            ..Self::default()
        }
    }
}
