//! Marginal laws: call-curve calibration and the convex-order gate.
//!
//! A discrete marginal at date `i` is equivalent to its call-price curve
//! `C(i, K) = E[(S_i - K)^+]`. Calibration inverts that map on a strike grid
//! by discrete second differences; `check_convex_order` verifies the condition
//! under which a consistent martingale measure exists at all (equal means plus
//! calls nondecreasing in maturity).

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::{Result, Tolerances};

/// Quoted (or synthetic) call prices at one maturity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallCurve {
    /// 1-based maturity index.
    pub time_index: usize,
    /// Strictly ascending, nonnegative strikes.
    pub strikes: Vec<f64>,
    /// One price per strike.
    pub prices: Vec<f64>,
}

impl CallCurve {
    pub fn new(time_index: usize, strikes: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        let curve = Self {
            time_index,
            strikes,
            prices,
        };
        curve.validate_structure()?;
        Ok(curve)
    }

    fn validate_structure(&self) -> Result<()> {
        if self.strikes.len() != self.prices.len() {
            return Err(Error::invalid("strike and price lengths differ"));
        }
        if self.strikes.is_empty() {
            return Err(Error::invalid("call curve has no quotes"));
        }
        ensure_ascending(&self.strikes, "strikes")?;
        if self.strikes[0] < 0.0 {
            return Err(Error::invalid("strikes must be nonnegative"));
        }
        if !self.prices.iter().all(|p| p.is_finite()) {
            return Err(Error::invalid("call prices must be finite"));
        }
        Ok(())
    }

    /// Arbitrage checks on the quotes: prices nonnegative, nonincreasing in
    /// strike, convex in strike, and never decaying faster than cash
    /// (left slope bounded below by -1).
    pub fn validate(&self, tol: f64) -> Result<()> {
        self.validate_structure()?;
        for (k, &p) in self.prices.iter().enumerate() {
            if p < -tol {
                return Err(Error::invalid(format!(
                    "negative call price {p} at strike {}",
                    self.strikes[k]
                )));
            }
        }
        let slopes = self.negated_slopes();
        if let Some(&d1) = slopes.first() {
            if d1 > 1.0 + tol {
                return Err(Error::NonConvexCurve {
                    strike: self.strikes[0],
                    second_difference: 1.0 - d1,
                });
            }
        }
        for k in 1..slopes.len() {
            // Cell mass at the shared strike is d_k - d_{k+1}.
            if slopes[k] - slopes[k - 1] > tol {
                return Err(Error::NonConvexCurve {
                    strike: self.strikes[k],
                    second_difference: slopes[k - 1] - slopes[k],
                });
            }
        }
        if let Some(&dm) = slopes.last() {
            if dm < -tol {
                return Err(Error::invalid(format!(
                    "call prices increase beyond strike {}",
                    self.strikes[self.strikes.len() - 2]
                )));
            }
        }
        Ok(())
    }

    /// Negated chord slopes d_k = (C_{k-1} - C_k) / (K_k - K_{k-1}); for an
    /// arbitrage-free curve these lie in [0, 1] and are nonincreasing.
    fn negated_slopes(&self) -> Vec<f64> {
        self.strikes
            .windows(2)
            .zip(self.prices.windows(2))
            .map(|(k, p)| (p[0] - p[1]) / (k[1] - k[0]))
            .collect()
    }

    /// Price at an arbitrary strike inside the quoted range, by linear
    /// interpolation between quotes. `None` outside the range.
    pub fn price_at(&self, strike: f64) -> Option<f64> {
        let first = *self.strikes.first()?;
        let last = *self.strikes.last()?;
        if strike < first || strike > last {
            return None;
        }
        let pos = self.strikes.partition_point(|&k| k <= strike);
        if pos > 0 && self.strikes[pos - 1] == strike {
            return Some(self.prices[pos - 1]);
        }
        let (lo, hi) = (pos - 1, pos);
        let t = (strike - self.strikes[lo]) / (self.strikes[hi] - self.strikes[lo]);
        Some(self.prices[lo] + t * (self.prices[hi] - self.prices[lo]))
    }
}

/// Discrete law of the asset at one date.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalDistribution {
    /// 1-based maturity index.
    pub time_index: usize,
    /// Strictly ascending, nonnegative support points.
    pub support: Vec<f64>,
    /// Probability per support point.
    pub probs: Vec<f64>,
}

impl MarginalDistribution {
    pub fn new(time_index: usize, support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let m = Self {
            time_index,
            support,
            probs,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.len() != self.probs.len() {
            return Err(Error::invalid("support and probs lengths differ"));
        }
        if self.support.is_empty() {
            return Err(Error::invalid("marginal has empty support"));
        }
        ensure_ascending(&self.support, "support")?;
        if self.support[0] < 0.0 {
            return Err(Error::invalid("support points must be nonnegative"));
        }
        for &p in &self.probs {
            if !(0.0..=1.0 + 1e-12).contains(&p) {
                return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
            }
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| s * p)
            .sum()
    }

    /// E[(S - K)^+] under this law.
    pub fn call_value(&self, strike: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| p * (s - strike).max(0.0))
            .sum()
    }

    /// Copy with zero-probability atoms removed. Zero atoms carry no
    /// constraint information and only inflate the path grid.
    pub fn without_null_atoms(&self) -> Self {
        let (support, probs): (Vec<f64>, Vec<f64>) = self
            .support
            .iter()
            .zip(&self.probs)
            .filter(|(_, &p)| p > 0.0)
            .map(|(&s, &p)| (s, p))
            .unzip();
        Self {
            time_index: self.time_index,
            support,
            probs,
        }
    }
}

/// Spot plus the marginal family: everything the pricing engine consumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketSpec {
    pub spot: f64,
    pub marginals: Vec<MarginalDistribution>,
}

impl MarketSpec {
    /// Build a spec, dropping zero-probability atoms from every marginal.
    pub fn new(spot: f64, marginals: Vec<MarginalDistribution>) -> Result<Self> {
        let spec = Self {
            spot,
            marginals: marginals.iter().map(|m| m.without_null_atoms()).collect(),
        };
        spec.validate_structure()?;
        Ok(spec)
    }

    /// Shape checks only; feasibility (means, convex order) is
    /// [`check_convex_order`]'s job.
    pub fn validate_structure(&self) -> Result<()> {
        if !self.spot.is_finite() || self.spot < 0.0 {
            return Err(Error::invalid("spot must be a nonnegative real"));
        }
        if self.marginals.is_empty() {
            return Err(Error::invalid("market needs at least one marginal"));
        }
        for (i, m) in self.marginals.iter().enumerate() {
            m.validate()?;
            if m.time_index != i + 1 {
                return Err(Error::invalid(format!(
                    "marginal {} has time_index {}, expected {}",
                    i,
                    m.time_index,
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn n_dates(&self) -> usize {
        self.marginals.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: MarketSpec = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("market JSON: {e}")))?;
        let spec = MarketSpec::new(spec.spot, spec.marginals)?;
        Ok(spec)
    }
}

/// Outcome of [`calibrate_from_calls`]: the recovered law plus the grid
/// strikes that had to be filled by interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub marginal: MarginalDistribution,
    pub filled_strikes: Vec<f64>,
}

/// Recover a discrete law from call quotes by second differences in strike.
///
/// Each grid cell receives mass proportional to the slope change
/// `(C(K - h-) - C(K)) / h-  -  (C(K) - C(K + h+)) / h+`. Beyond the first
/// strike the curve is extended with slope -1 (no mass below the grid), beyond
/// the last with slope 0, so the cells telescope to total mass 1 exactly when
/// the quotes come from a law on the grid. Grid points without a quote are
/// filled by linear interpolation between quotes and reported; grid points
/// outside the quoted range are rejected rather than extrapolated.
pub fn calibrate_from_calls(
    curve: &CallCurve,
    grid: &[f64],
    tol: &Tolerances,
) -> Result<Calibration> {
    curve.validate(tol.input)?;
    if grid.is_empty() {
        return Err(Error::invalid("calibration grid is empty"));
    }
    ensure_ascending(grid, "grid")?;
    if grid[0] < 0.0 {
        return Err(Error::invalid("grid strikes must be nonnegative"));
    }
    let (first, last) = (curve.strikes[0], *curve.strikes.last().unwrap());
    if grid[0] < first - tol.input || *grid.last().unwrap() > last + tol.input {
        return Err(Error::invalid(
            "grid extends beyond the quoted strike range; refusing to extrapolate quotes",
        ));
    }
    if grid[0] > first + tol.input || *grid.last().unwrap() < last - tol.input {
        return Err(Error::invalid(
            "grid does not cover the quoted strike range",
        ));
    }

    if grid.len() == 1 {
        // All mass sits at the single grid point.
        let marginal = MarginalDistribution::new(curve.time_index, vec![grid[0]], vec![1.0])?;
        return Ok(Calibration {
            marginal,
            filled_strikes: Vec::new(),
        });
    }

    let mut filled_strikes = Vec::new();
    let prices: Vec<f64> = grid
        .iter()
        .map(|&k| {
            let p = curve.price_at(k).expect("grid inside quoted range");
            let exact = curve.strikes.iter().any(|&s| (s - k).abs() <= tol.input);
            if !exact {
                filled_strikes.push(k);
            }
            p
        })
        .collect();

    let m = grid.len();
    let mut cells = Vec::with_capacity(m);
    for k in 0..m {
        // Slope-change cell; the virtual left point has slope -1, the
        // virtual right point slope 0.
        let left = if k == 0 {
            1.0
        } else {
            (prices[k - 1] - prices[k]) / (grid[k] - grid[k - 1])
        };
        let right = if k == m - 1 {
            0.0
        } else {
            (prices[k] - prices[k + 1]) / (grid[k + 1] - grid[k])
        };
        cells.push(left - right);
    }

    for (k, &c) in cells.iter().enumerate() {
        if c < -tol.input {
            return Err(Error::NegativeMass {
                strike: grid[k],
                mass: c,
            });
        }
    }
    let mut mass: Vec<f64> = cells.iter().map(|&c| c.max(0.0)).collect();
    let total: f64 = mass.iter().sum();
    if total <= tol.input {
        return Err(Error::invalid("calibrated curve carries no mass"));
    }
    for p in &mut mass {
        *p /= total;
    }

    let (support, probs): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(&mass)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&k, &p)| (k, p))
        .unzip();
    let marginal = MarginalDistribution::new(curve.time_index, support, probs)?;
    Ok(Calibration {
        marginal,
        filled_strikes,
    })
}

/// Synthetic call prices of a discrete law at the given strikes.
pub fn synth_call_curve(m: &MarginalDistribution, strikes: &[f64]) -> Result<CallCurve> {
    m.validate()?;
    ensure_ascending(strikes, "strikes")?;
    let prices = strikes.iter().map(|&k| m.call_value(k)).collect();
    CallCurve::new(m.time_index, strikes.to_vec(), prices)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanViolation {
    pub time_index: usize,
    pub mean: f64,
    pub deviation: f64,
}

/// A strike where calls decrease from date `earlier` to `earlier + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderViolation {
    pub earlier: usize,
    pub strike: f64,
    pub earlier_call: f64,
    pub later_call: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvexOrderReport {
    pub passed: bool,
    pub spot: f64,
    pub mean_violations: Vec<MeanViolation>,
    pub order_violations: Vec<OrderViolation>,
}

/// Verify that a martingale measure consistent with the marginals exists:
/// every mean equals spot and consecutive call functions are nondecreasing
/// in maturity. Discrete call functions are piecewise linear with kinks only
/// at support points, so probing the union of all supports is exhaustive.
pub fn check_convex_order(spec: &MarketSpec, tol: &Tolerances) -> Result<ConvexOrderReport> {
    spec.validate_structure()?;

    let mut mean_violations = Vec::new();
    for m in &spec.marginals {
        let mean = m.mean();
        if (mean - spec.spot).abs() > tol.input {
            mean_violations.push(MeanViolation {
                time_index: m.time_index,
                mean,
                deviation: mean - spec.spot,
            });
        }
    }

    let mut probes: Vec<f64> = spec
        .marginals
        .iter()
        .flat_map(|m| m.support.iter().copied())
        .collect();
    probes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    probes.dedup();

    let mut order_violations = Vec::new();
    for pair in spec.marginals.windows(2) {
        for &k in &probes {
            let earlier_call = pair[0].call_value(k);
            let later_call = pair[1].call_value(k);
            if earlier_call > later_call + tol.input {
                order_violations.push(OrderViolation {
                    earlier: pair[0].time_index,
                    strike: k,
                    earlier_call,
                    later_call,
                });
            }
        }
    }

    Ok(ConvexOrderReport {
        passed: mean_violations.is_empty() && order_violations.is_empty(),
        spot: spec.spot,
        mean_violations,
        order_violations,
    })
}

fn ensure_ascending(values: &[f64], what: &str) -> Result<()> {
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("{what} must be strictly ascending")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn uniform(time_index: usize, support: &[f64]) -> MarginalDistribution {
        let p = 1.0 / support.len() as f64;
        MarginalDistribution::new(time_index, support.to_vec(), vec![p; support.len()]).unwrap()
    }

    fn dirac(time_index: usize, s: f64) -> MarginalDistribution {
        MarginalDistribution::new(time_index, vec![s], vec![1.0]).unwrap()
    }

    #[test]
    fn calibrate_recovers_point_mass() {
        let strikes = vec![80.0, 100.0, 120.0];
        let prices: Vec<f64> = strikes.iter().map(|&k| (100.0f64 - k).max(0.0)).collect();
        let curve = CallCurve::new(1, strikes.clone(), prices).unwrap();
        let cal = calibrate_from_calls(&curve, &strikes, &tol()).unwrap();
        assert_eq!(cal.marginal.support, vec![100.0]);
        assert_eq!(cal.marginal.probs, vec![1.0]);
    }

    #[test]
    fn calibrate_recovers_uniform_law() {
        // Forward-expectation oracle: E[(S-K)^+] under uniform{80,100,120}
        // gives C(80)=20, C(100)=20/3, C(120)=0.
        let strikes = vec![80.0, 100.0, 120.0];
        let curve = CallCurve::new(1, strikes.clone(), vec![20.0, 20.0 / 3.0, 0.0]).unwrap();
        let cal = calibrate_from_calls(&curve, &strikes, &tol()).unwrap();
        assert_eq!(cal.marginal.support, strikes);
        for &p in &cal.marginal.probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12, "prob {p}");
        }
        assert!(cal.filled_strikes.is_empty());
    }

    #[test]
    fn calibrate_rejects_concave_kink() {
        let curve = CallCurve::new(1, vec![80.0, 100.0, 120.0], vec![20.0, 15.0, 0.0]).unwrap();
        let err = calibrate_from_calls(&curve, &[80.0, 100.0, 120.0], &tol()).unwrap_err();
        assert!(matches!(err, Error::NonConvexCurve { .. }), "{err}");
    }

    #[test]
    fn calibrate_rejects_extrapolation() {
        let curve = CallCurve::new(1, vec![80.0, 100.0, 120.0], vec![20.0, 20.0 / 3.0, 0.0]).unwrap();
        let err = calibrate_from_calls(&curve, &[60.0, 80.0, 100.0, 120.0], &tol()).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)), "{err}");
    }

    #[test]
    fn calibrate_fills_missing_interior_strikes() {
        // Quotes from uniform{80,100,120} with the 100 strike missing from
        // the quote set but present on the grid: the interpolated fill sits
        // on the chord, which shifts mass but stays a valid pmf.
        let curve = CallCurve::new(1, vec![80.0, 120.0], vec![20.0, 0.0]).unwrap();
        let cal = calibrate_from_calls(&curve, &[80.0, 100.0, 120.0], &tol()).unwrap();
        assert_eq!(cal.filled_strikes, vec![100.0]);
        let total: f64 = cal.marginal.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synth_matches_direct_expectation() {
        let m = uniform(1, &[80.0, 100.0, 120.0]);
        let curve = synth_call_curve(&m, &[100.0]).unwrap();
        assert!((curve.prices[0] - 20.0 / 3.0).abs() < 1e-12);
        // Strike 0 returns the mean; a strike beyond the support returns 0.
        let curve = synth_call_curve(&m, &[0.0, 500.0]).unwrap();
        assert!((curve.prices[0] - 100.0).abs() < 1e-12);
        assert_eq!(curve.prices[1], 0.0);
    }

    #[test]
    fn round_trip_on_grid_pmf() {
        let m = MarginalDistribution::new(
            1,
            vec![70.0, 95.0, 110.0, 130.0],
            vec![0.2, 0.3, 0.4, 0.1],
        )
        .unwrap();
        let grid = m.support.clone();
        let curve = synth_call_curve(&m, &grid).unwrap();
        let cal = calibrate_from_calls(&curve, &grid, &tol()).unwrap();
        assert_eq!(cal.marginal.support, m.support);
        for (a, b) in cal.marginal.probs.iter().zip(&m.probs) {
            assert!((a - b).abs() < 1e-12);
        }
        // Synthetic prices off the recovered law reproduce the inputs.
        let back = synth_call_curve(&cal.marginal, &grid).unwrap();
        for (a, b) in back.prices.iter().zip(&curve.prices) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn convex_order_passes_dirac_then_uniform() {
        let spec = MarketSpec::new(100.0, vec![dirac(1, 100.0), uniform(2, &[80.0, 120.0])]).unwrap();
        let report = check_convex_order(&spec, &tol()).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn convex_order_fails_when_reversed() {
        let spec = MarketSpec::new(100.0, vec![uniform(1, &[80.0, 120.0]), dirac(2, 100.0)]).unwrap();
        let report = check_convex_order(&spec, &tol()).unwrap();
        assert!(!report.passed);
        let v = report
            .order_violations
            .iter()
            .find(|v| v.strike == 100.0)
            .expect("violation at K=100");
        assert!((v.earlier_call - 10.0).abs() < 1e-12);
        assert!(v.later_call.abs() < 1e-12);
    }

    #[test]
    fn convex_order_two_uniforms() {
        // Call values at K in {80,90,100,110,120}:
        //   uniform{90,110}:      20, 10, 5, 0, 0
        //   uniform{80,100,120}:  20, 40/3, 20/3, 10/3, 0
        let spec = MarketSpec::new(
            100.0,
            vec![uniform(1, &[90.0, 110.0]), uniform(2, &[80.0, 100.0, 120.0])],
        )
        .unwrap();
        let report = check_convex_order(&spec, &tol()).unwrap();
        assert!(report.passed, "{report:?}");
        let early = &spec.marginals[0];
        let late = &spec.marginals[1];
        for (k, (ce, cl)) in [
            (80.0, (20.0, 20.0)),
            (90.0, (10.0, 40.0 / 3.0)),
            (100.0, (5.0, 20.0 / 3.0)),
            (110.0, (0.0, 10.0 / 3.0)),
            (120.0, (0.0, 0.0)),
        ] {
            assert!((early.call_value(k) - ce).abs() < 1e-12);
            assert!((late.call_value(k) - cl).abs() < 1e-12);
        }
    }

    #[test]
    fn convex_order_mean_mismatch_is_reported() {
        let spec = MarketSpec::new(101.0, vec![dirac(1, 100.0), uniform(2, &[80.0, 120.0])]).unwrap();
        let report = check_convex_order(&spec, &tol()).unwrap();
        assert!(!report.passed);
        assert_eq!(report.mean_violations.len(), 2);
    }

    #[test]
    fn probing_refinement_does_not_change_outcome() {
        // Calls are piecewise linear with kinks only at support points, so
        // adding probe strikes between supports can never flip the report.
        let spec = MarketSpec::new(
            100.0,
            vec![uniform(1, &[90.0, 110.0]), uniform(2, &[80.0, 100.0, 120.0])],
        )
        .unwrap();
        let report = check_convex_order(&spec, &tol()).unwrap();
        let mut probes: Vec<f64> = (0..200).map(|i| 70.0 + 0.3 * i as f64).collect();
        probes.extend(spec.marginals.iter().flat_map(|m| m.support.clone()));
        let refined_ok = spec.marginals.windows(2).all(|pair| {
            probes
                .iter()
                .all(|&k| pair[0].call_value(k) <= pair[1].call_value(k) + 1e-9)
        });
        assert_eq!(report.passed, refined_ok);
    }

    #[test]
    fn market_spec_drops_null_atoms() {
        let m = MarginalDistribution::new(1, vec![80.0, 100.0, 120.0], vec![0.5, 0.0, 0.5]).unwrap();
        let spec = MarketSpec::new(100.0, vec![m]).unwrap();
        assert_eq!(spec.marginals[0].support, vec![80.0, 120.0]);
    }

    #[test]
    fn zero_strike_price_equals_mean_when_curve_spans_support() {
        let m = uniform(1, &[80.0, 100.0, 120.0]);
        let curve = synth_call_curve(&m, &[0.0, 80.0, 100.0, 120.0]).unwrap();
        assert!((curve.prices[0] - m.mean()).abs() < 1e-12);
        curve.validate(1e-9).unwrap();
    }
}
