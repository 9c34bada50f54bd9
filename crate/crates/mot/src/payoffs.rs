//! Exotic payoffs on the finite path grid.
//!
//! The path space is the product of the marginal supports, enumerated in
//! lexicographic order (first date most significant). Payoffs are either
//! analytic families evaluated from path coordinates or an explicit value
//! table indexed by lexicographic path index.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::marginals::MarketSpec;
use crate::Result;

/// Product grid of the marginal supports.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpace {
    axes: Vec<Vec<f64>>,
}

impl PathSpace {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("path space needs at least one date"));
        }
        for axis in &axes {
            if axis.is_empty() {
                return Err(Error::invalid("path-space axis is empty"));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("path-space axis must be strictly ascending"));
            }
            if axis[0] < 0.0 || !axis.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid("path coordinates must be finite and >= 0"));
            }
        }
        Ok(Self { axes })
    }

    pub fn from_market(spec: &MarketSpec) -> Result<Self> {
        spec.validate_structure()?;
        Self::new(spec.marginals.iter().map(|m| m.support.clone()).collect())
    }

    /// Number of dates.
    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, date: usize) -> &[f64] {
        &self.axes[date]
    }

    /// Total number of paths.
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of distinct prefixes of the first `j` dates (1 <= j <= n).
    pub fn prefix_len(&self, j: usize) -> usize {
        self.axes[..j].iter().map(Vec::len).product()
    }

    /// Lexicographic index of the first-`j` prefix of a path.
    pub fn prefix_index(&self, path_index: usize, j: usize) -> usize {
        let suffix: usize = self.axes[j..].iter().map(Vec::len).product();
        path_index / suffix
    }

    /// Per-axis indices of a path.
    pub fn multi_index(&self, path_index: usize) -> Vec<usize> {
        debug_assert!(path_index < self.len());
        let mut rem = path_index;
        let mut out = vec![0usize; self.n()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = rem % axis.len();
            rem /= axis.len();
        }
        out
    }

    pub fn index_of_multi(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.n());
        let mut idx = 0;
        for (k, axis) in self.axes.iter().enumerate() {
            idx = idx * axis.len() + multi[k];
        }
        idx
    }

    /// Coordinates of a path.
    pub fn coords(&self, path_index: usize) -> Vec<f64> {
        self.multi_index(path_index)
            .iter()
            .zip(&self.axes)
            .map(|(&i, axis)| axis[i])
            .collect()
    }

    /// Path index of on-grid coordinates.
    pub fn locate(&self, coords: &[f64]) -> Result<usize> {
        if coords.len() != self.n() {
            return Err(Error::invalid(format!(
                "path has {} coordinates, expected {}",
                coords.len(),
                self.n()
            )));
        }
        let mut multi = Vec::with_capacity(self.n());
        for (date, (&value, axis)) in coords.iter().zip(&self.axes).enumerate() {
            let pos = axis
                .iter()
                .position(|&s| (s - value).abs() <= 1e-9 * (1.0 + value.abs()))
                .ok_or(Error::OffGridPath {
                    date: date + 1,
                    value,
                })?;
            multi.push(pos);
        }
        Ok(self.index_of_multi(&multi))
    }

    /// Iterate paths as `(index, coordinates)` in lexicographic order.
    pub fn paths(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        (0..self.len()).map(move |i| (i, self.coords(i)))
    }
}

/// Payoff families. `CustomTable` holds one value per lexicographic path
/// index and is the escape hatch for adversarial tests.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffKind {
    /// max(mean(s_1..s_n) - strike, 0)
    AsianCall { strike: f64 },
    /// max(s_1, ..., s_n)
    LookbackMax,
    /// max(s_1 + ... + s_n - strike, 0)
    BasketTimeCall { strike: f64 },
    /// 1 when the final price is at or above the level
    DigitalAbove { level: f64 },
    /// max(s_n - multiplier * s_1, 0)
    ForwardStartCall { multiplier: f64 },
    /// Explicit value per path, lexicographic order
    CustomTable { values: Vec<f64> },
}

/// A payoff together with its declared linear-growth constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PayoffWire", into = "PayoffWire")]
pub struct PayoffSpec {
    pub kind: PayoffKind,
    pub growth_constant: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, growth_constant: f64) -> Result<Self> {
        if !(growth_constant > 0.0) {
            return Err(Error::invalid("growth_constant must be positive"));
        }
        Ok(Self {
            kind,
            growth_constant,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: PayoffWire = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("payoff JSON: {e}")))?;
        PayoffSpec::try_from(wire)
    }

    /// Evaluate an analytic payoff at arbitrary coordinates. `CustomTable`
    /// is defined by path index, not by coordinates; use [`Self::evaluate_on`].
    pub fn evaluate(&self, path: &[f64]) -> Result<f64> {
        if path.is_empty() {
            return Err(Error::invalid("empty path"));
        }
        if path.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::invalid("path coordinates must be finite and >= 0"));
        }
        let n = path.len() as f64;
        Ok(match &self.kind {
            PayoffKind::AsianCall { strike } => {
                (path.iter().sum::<f64>() / n - strike).max(0.0)
            }
            PayoffKind::LookbackMax => path.iter().copied().fold(f64::MIN, f64::max),
            PayoffKind::BasketTimeCall { strike } => (path.iter().sum::<f64>() - strike).max(0.0),
            PayoffKind::DigitalAbove { level } => {
                if path[path.len() - 1] >= *level {
                    1.0
                } else {
                    0.0
                }
            }
            PayoffKind::ForwardStartCall { multiplier } => {
                (path[path.len() - 1] - multiplier * path[0]).max(0.0)
            }
            PayoffKind::CustomTable { .. } => {
                return Err(Error::invalid(
                    "custom_table is indexed by path; evaluate it through a PathSpace",
                ))
            }
        })
    }

    /// Evaluate at a lexicographic path index of `space`.
    pub fn evaluate_on(&self, space: &PathSpace, path_index: usize) -> Result<f64> {
        match &self.kind {
            PayoffKind::CustomTable { values } => {
                if values.len() != space.len() {
                    return Err(Error::invalid(format!(
                        "custom_table has {} values for {} paths",
                        values.len(),
                        space.len()
                    )));
                }
                Ok(values[path_index])
            }
            _ => self.evaluate(&space.coords(path_index)),
        }
    }

    /// All payoff values in lexicographic path order.
    pub fn tabulate(&self, space: &PathSpace) -> Result<Vec<f64>> {
        (0..space.len())
            .map(|i| self.evaluate_on(space, i))
            .collect()
    }

    /// Smallest K with payoff <= K * (1 + s_1 + ... + s_n) across the grid.
    pub fn check_growth_bound(&self, space: &PathSpace) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, coords) in space.paths() {
            let value = self.evaluate_on(space, i)?;
            let ratio = value / (1.0 + coords.iter().sum::<f64>());
            worst = worst.max(ratio);
        }
        Ok(worst)
    }

    /// Enforce the declared growth bound on this grid.
    pub fn validate_on(&self, space: &PathSpace) -> Result<()> {
        let needed = self.check_growth_bound(space)?;
        if needed > self.growth_constant + 1e-12 {
            return Err(Error::invalid(format!(
                "payoff needs growth constant {needed}, declared {}",
                self.growth_constant
            )));
        }
        Ok(())
    }

    /// Minimum payoff value over the grid (the quantile module requires >= 0).
    pub fn min_on(&self, space: &PathSpace) -> Result<f64> {
        let mut min = f64::INFINITY;
        for i in 0..space.len() {
            min = min.min(self.evaluate_on(space, i)?);
        }
        Ok(min)
    }
}

/// Wire format: `{"kind": "...", "params": {...}, "growth_constant": K}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PayoffWire {
    kind: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    growth_constant: f64,
}

impl TryFrom<PayoffWire> for PayoffSpec {
    type Error = Error;

    fn try_from(wire: PayoffWire) -> Result<Self> {
        let num = |key: &str| -> Result<f64> {
            wire.params
                .get(key)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| Error::invalid(format!("missing numeric param `{key}`")))
        };
        let kind = match wire.kind.as_str() {
            "asian_call" => PayoffKind::AsianCall { strike: num("strike")? },
            "lookback_max" => PayoffKind::LookbackMax,
            "basket_time_call" => PayoffKind::BasketTimeCall { strike: num("strike")? },
            "digital_above" => PayoffKind::DigitalAbove { level: num("level")? },
            "forward_start_call" => PayoffKind::ForwardStartCall {
                multiplier: wire
                    .params
                    .get("multiplier")
                    .and_then(serde_json::Value::as_f64)
                    .unwrap_or(1.0),
            },
            "custom_table" => {
                let values = wire
                    .params
                    .get("values")
                    .and_then(serde_json::Value::as_array)
                    .ok_or_else(|| Error::invalid("custom_table needs `values`"))?
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| Error::invalid("non-numeric table value")))
                    .collect::<Result<Vec<f64>>>()?;
                PayoffKind::CustomTable { values }
            }
            other => return Err(Error::UnknownKind(other.to_string())),
        };
        PayoffSpec::new(kind, wire.growth_constant)
    }
}

impl From<PayoffSpec> for PayoffWire {
    fn from(spec: PayoffSpec) -> Self {
        let mut params = serde_json::Map::new();
        let mut put = |key: &str, v: f64| {
            params.insert(key.to_string(), serde_json::json!(v));
        };
        let kind = match &spec.kind {
            PayoffKind::AsianCall { strike } => {
                put("strike", *strike);
                "asian_call"
            }
            PayoffKind::LookbackMax => "lookback_max",
            PayoffKind::BasketTimeCall { strike } => {
                put("strike", *strike);
                "basket_time_call"
            }
            PayoffKind::DigitalAbove { level } => {
                put("level", *level);
                "digital_above"
            }
            PayoffKind::ForwardStartCall { multiplier } => {
                put("multiplier", *multiplier);
                "forward_start_call"
            }
            PayoffKind::CustomTable { values } => {
                params.insert("values".to_string(), serde_json::json!(values));
                "custom_table"
            }
        };
        PayoffWire {
            kind: kind.to_string(),
            params,
            growth_constant: spec.growth_constant,
        }
    }
}
