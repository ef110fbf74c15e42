//! Discrete optimal transport: cost matrices, the entropic solver and an
//! exhaustive assignment oracle for tiny uniform problems.

mod cost;
mod exact;
mod sinkhorn;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cost::{build_cost_matrix, CostMatrix};
pub use exact::{exact_assignment_oracle, optimal_permutation, MAX_ORACLE_SIZE};
pub use sinkhorn::{sinkhorn, sinkhorn_log_domain, SinkhornConfig};

/// Tolerance on `|sum(weights) - 1|` for probability vectors.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A finite point cloud with a probability vector attached to its support.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    support: Array2<f64>,
    weights: Array1<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Array2<f64>, weights: Array1<f64>) -> Result<Self> {
        if support.nrows() == 0 {
            return Err(Error::invalid("measure support is empty"));
        }
        if support.nrows() != weights.len() {
            return Err(Error::invalid(format!(
                "support has {} points but {} weights were given",
                support.nrows(),
                weights.len()
            )));
        }
        if support.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("measure support contains a non-finite feature"));
        }
        check_probability_vector(weights.view(), "measure weights", false)?;
        Ok(Self { support, weights })
    }

    /// Empirical measure with weight `1/n` on every point.
    pub fn uniform(support: Array2<f64>) -> Result<Self> {
        let n = support.nrows();
        if n == 0 {
            return Err(Error::invalid("measure support is empty"));
        }
        Self::new(support, uniform_weights(n))
    }

    pub fn support(&self) -> ArrayView2<'_, f64> {
        self.support.view()
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn uniform_weights(n: usize) -> Array1<f64> {
    Array1::from_elem(n, 1.0 / n as f64)
}

/// Checks nonnegativity, finiteness and unit mass. With `strictly_positive`
/// a zero entry is rejected as well.
pub(crate) fn check_probability_vector(
    w: ArrayView1<'_, f64>,
    what: &str,
    strictly_positive: bool,
) -> Result<()> {
    if w.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    for (i, &x) in w.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::invalid(format!("{what}[{i}] = {x} is not a nonnegative finite number")));
        }
        if strictly_positive && x == 0.0 {
            return Err(Error::invalid(format!("{what}[{i}] is zero; zero-weight supports are not supported")));
        }
    }
    let total: f64 = w.sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::invalid(format!("{what} sums to {total}, expected 1")));
    }
    Ok(())
}

/// A coupling between two discrete measures together with solver diagnostics.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub coupling: Array2<f64>,
    /// Regularization strength used to produce the plan; `0.0` for exact plans.
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute deviation of a row or column sum from its marginal.
    pub marginal_error: f64,
}

impl TransportPlan {
    pub fn shape(&self) -> (usize, usize) {
        self.coupling.dim()
    }

    /// Frobenius product `<T, C>`.
    pub fn transport_cost(&self, cost: &CostMatrix) -> f64 {
        (&self.coupling * &cost.values()).sum()
    }

    pub fn entropy(&self) -> f64 {
        plan_entropy(self.coupling.view())
    }

    /// Entropic objective `<T, C> - eps * H(T)` at the plan's own epsilon.
    pub fn regularized_objective(&self, cost: &CostMatrix) -> f64 {
        self.transport_cost(cost) - self.epsilon * self.entropy()
    }

    /// Divides each column by its sum so every column is a probability
    /// vector over the source points. A column with zero mass maps to the
    /// uniform vector.
    pub fn column_normalized(&self) -> Array2<f64> {
        let mut out = self.coupling.clone();
        let n = out.nrows() as f64;
        for mut col in out.axis_iter_mut(Axis(1)) {
            let total = col.sum();
            if total > 0.0 {
                col.mapv_inplace(|v| v / total);
            } else {
                col.fill(1.0 / n);
            }
        }
        out
    }
}

/// Max absolute deviation of the row sums from `a` and column sums from `b`.
pub fn marginal_error(coupling: ArrayView2<'_, f64>, a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let rows = coupling.sum_axis(Axis(1));
    let cols = coupling.sum_axis(Axis(0));
    let row_err = rows.iter().zip(a.iter()).fold(0.0f64, |m, (r, t)| m.max((r - t).abs()));
    cols.iter().zip(b.iter()).fold(row_err, |m, (c, t)| m.max((c - t).abs()))
}

/// `H(T) = -sum t (ln t - 1)`, with zero entries contributing nothing.
pub fn plan_entropy(coupling: ArrayView2<'_, f64>) -> f64 {
    coupling
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| -t * (t.ln() - 1.0))
        .sum()
}

/// How the regularization strength is chosen for a given cost matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `scale * median(C)`.
    Auto { scale: f64 },
    Fixed(f64),
}

impl EpsilonRule {
    pub const DEFAULT_SCALE: f64 = 0.01;

    pub fn resolve(&self, cost: &CostMatrix) -> f64 {
        match *self {
            EpsilonRule::Fixed(eps) => eps,
            EpsilonRule::Auto { scale } => {
                // degenerate clouds (median zero) fall back to the mean, then to 1
                let median = cost.median();
                let reference = if median > 0.0 { median } else { cost.mean() };
                if reference > 0.0 {
                    scale * reference
                } else {
                    1.0
                }
            }
        }
    }
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::Auto { scale: Self::DEFAULT_SCALE }
    }
}

impl fmt::Display for EpsilonRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonRule::Auto { scale } if *scale == Self::DEFAULT_SCALE => write!(f, "auto"),
            EpsilonRule::Auto { scale } => write!(f, "auto:{scale}"),
            EpsilonRule::Fixed(eps) => write!(f, "{eps}"),
        }
    }
}

impl FromStr for EpsilonRule {
    type Err = Error;

    /// Accepts `auto`, `auto:<scale>` or a positive number.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::invalid(format!("{what} must be a positive number, got {v}")))
            }
        };
        if s.eq_ignore_ascii_case("auto") {
            return Ok(EpsilonRule::default());
        }
        if let Some(rest) = s.strip_prefix("auto:") {
            let scale: f64 = rest.parse().map_err(|_| Error::invalid(format!("bad epsilon scale `{rest}`")))?;
            return Ok(EpsilonRule::Auto { scale: positive(scale, "epsilon scale")? });
        }
        let eps: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("epsilon must be `auto` or a number, got `{s}`")))?;
        Ok(EpsilonRule::Fixed(positive(eps, "epsilon")?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn entropy_of_point_mass() {
        assert_eq!(plan_entropy(array![[1.0]].view()), 1.0);
    }

    #[test]
    fn entropy_of_independent_coupling() {
        let h = plan_entropy(array![[0.25, 0.25], [0.25, 0.25]].view());
        // four identical terms 0.25 * (ln 4 + 1)
        let expected = 4.0 * 0.25 * (4f64.ln() + 1.0);
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 2.386294361119891).abs() < 1e-12);
    }

    #[test]
    fn entropy_skips_zero_entries() {
        let h = plan_entropy(array![[0.5, 0.0], [0.0, 0.5]].view());
        assert!((h - (2f64.ln() + 1.0)).abs() < 1e-15);
        assert!((h - 1.6931471805599454).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_permutation_invariant() {
        let t = array![[0.1, 0.2, 0.05], [0.3, 0.0, 0.35]];
        let swapped = array![[0.35, 0.0, 0.3], [0.05, 0.2, 0.1]];
        assert!((plan_entropy(t.view()) - plan_entropy(swapped.view())).abs() < 1e-15);
    }

    #[test]
    fn measure_rejects_bad_weights() {
        let pts = array![[0.0], [1.0]];
        assert!(DiscreteMeasure::new(pts.clone(), array![0.6, 0.6]).is_err());
        assert!(DiscreteMeasure::new(pts.clone(), array![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(pts.clone(), array![1.0]).is_err());
        assert!(DiscreteMeasure::new(array![[f64::NAN], [0.0]], array![0.5, 0.5]).is_err());
        let m = DiscreteMeasure::uniform(pts).unwrap();
        assert_eq!(m.weights(), array![0.5, 0.5]);
    }

    #[test]
    fn epsilon_rule_parsing() {
        assert_eq!("auto".parse::<EpsilonRule>().unwrap(), EpsilonRule::default());
        assert_eq!("auto:0.05".parse::<EpsilonRule>().unwrap(), EpsilonRule::Auto { scale: 0.05 });
        assert_eq!("0.5".parse::<EpsilonRule>().unwrap(), EpsilonRule::Fixed(0.5));
        assert!("-1".parse::<EpsilonRule>().is_err());
        assert!("zero".parse::<EpsilonRule>().is_err());
        assert_eq!(EpsilonRule::default().to_string(), "auto");
    }

    #[test]
    fn epsilon_auto_uses_median() {
        let c = CostMatrix::new(array![[1.0, 2.0], [3.0, 100.0]]).unwrap();
        assert!((EpsilonRule::default().resolve(&c) - 0.025).abs() < 1e-15);
        let zero = CostMatrix::new(array![[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(EpsilonRule::default().resolve(&zero), 1.0);
    }

    #[test]
    fn column_normalization() {
        let plan = TransportPlan {
            coupling: array![[0.2, 0.0], [0.2, 0.6]],
            epsilon: 1.0,
            iterations: 0,
            converged: true,
            marginal_error: 0.0,
        };
        let w = plan.column_normalized();
        assert_eq!(w, array![[0.5, 0.0], [0.5, 1.0]]);
    }
}
