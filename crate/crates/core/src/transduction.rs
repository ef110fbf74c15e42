//! Transductive stage: labels flow from a labeled pool to unlabeled points
//! along a bipartite graph whose edge weights are a column-normalized
//! entropic transport plan.
//!
//! Each round computes the plan between the current labeled pool and the
//! points still unlabeled, turns every column into a class distribution,
//! and absorbs the points whose distribution is confident enough (one minus
//! normalized Shannon entropy at least `alpha`) into the pool with their
//! argmax label. Rounds stop once a round absorbs nothing or `max_rounds`
//! is reached; stragglers then take their argmax label so every unlabeled
//! point ends up with a class. The original labels are never revisited.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot::{build_cost_matrix, sinkhorn, uniform_weights, EpsilonRule, SinkhornConfig, TransportPlan};

/// Labeled training points with classes in `0..num_classes`, each class
/// represented at least once.
#[derive(Clone, Debug)]
pub struct LabeledPool {
    points: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledPool {
    pub fn new(points: Array2<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {num_classes}")));
        }
        if points.nrows() != labels.len() {
            return Err(Error::invalid(format!(
                "{} labeled points but {} labels",
                points.nrows(),
                labels.len()
            )));
        }
        if labels.len() < num_classes {
            return Err(Error::invalid(format!(
                "{} labeled points cannot cover {num_classes} classes",
                labels.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("labeled points contain a non-finite feature"));
        }
        let mut seen = vec![false; num_classes];
        for &y in &labels {
            *seen.get_mut(y).ok_or_else(|| Error::invalid(format!("label {y} is outside 0..{num_classes}")))? = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("class {missing} has no labeled representative")));
        }
        Ok(Self { points, labels, num_classes })
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Probability vector over the classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    probabilities: Vec<f64>,
}

impl LabelDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::invalid("label distribution is empty"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("label distribution has a negative or non-finite entry"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid(format!("label distribution sums to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Most probable class; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.probabilities)
    }

    /// `1 - H(p) / ln K`: 1 for a one-hot vector, 0 for the uniform one.
    pub fn certainty(&self) -> f64 {
        certainty(&self.probabilities)
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// One minus the Shannon entropy of `p` normalized by `ln(len)`.
pub fn certainty(p: &[f64]) -> f64 {
    if p.len() < 2 {
        return 1.0;
    }
    let h: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    (1.0 - h / (p.len() as f64).ln()).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub epsilon: EpsilonRule,
    /// Certainty a point needs to join the labeled pool.
    pub alpha: f64,
    pub max_rounds: usize,
    pub solver: SinkhornConfig,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { epsilon: EpsilonRule::default(), alpha: 0.8, max_rounds: 20, solver: SinkhornConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    /// Class assigned to each unlabeled point, in input order.
    pub predicted_labels: Vec<usize>,
    /// Distribution each point had when it was labeled.
    pub distributions: Vec<LabelDistribution>,
    pub certainty: Vec<f64>,
    /// Round in which each point was labeled (1-based). Points labeled by the
    /// forced final pass carry `rounds`.
    pub labeled_in_round: Vec<usize>,
    /// Number of transport plans solved.
    pub rounds: usize,
    /// Labeled pool size after each threshold round, starting with the
    /// initial size.
    pub pool_sizes: Vec<usize>,
    /// False if any plan hit the iteration cap before reaching tolerance.
    pub all_plans_converged: bool,
}

/// Affinities from labeled to unlabeled points: the entropic plan between
/// the two uniform empirical measures, normalized so every column sums to 1.
#[derive(Clone, Debug)]
pub struct BipartiteAffinities {
    pub weights: Array2<f64>,
    pub plan: TransportPlan,
}

pub fn bipartite_affinities(
    labeled: ArrayView2<'_, f64>,
    unlabeled: ArrayView2<'_, f64>,
    epsilon: EpsilonRule,
    solver: &SinkhornConfig,
) -> Result<BipartiteAffinities> {
    let cost = build_cost_matrix(labeled, unlabeled)?;
    let eps = epsilon.resolve(&cost);
    let a = uniform_weights(labeled.nrows());
    let b = uniform_weights(unlabeled.nrows());
    let plan = sinkhorn(a.view(), b.view(), &cost, eps, solver)?;
    Ok(BipartiteAffinities { weights: plan.column_normalized(), plan })
}

/// Per-column class mass: `p_j(k) = sum of weights[i, j] over i with label k`.
pub fn class_distributions(weights: ArrayView2<'_, f64>, labels: &[usize], num_classes: usize) -> Vec<LabelDistribution> {
    weights
        .axis_iter(Axis(1))
        .map(|col| {
            let mut p = vec![0.0; num_classes];
            for (w, &y) in col.iter().zip(labels) {
                p[y] += w;
            }
            LabelDistribution { probabilities: p }
        })
        .collect()
}

pub fn propagate(pool: &LabeledPool, unlabeled: ArrayView2<'_, f64>, config: &PropagationConfig) -> Result<PropagationResult> {
    let n_u = unlabeled.nrows();
    if n_u == 0 {
        return Err(Error::invalid("no unlabeled points to propagate to"));
    }
    if unlabeled.ncols() != pool.points.ncols() {
        return Err(Error::invalid(format!(
            "unlabeled points have {} features, labeled points {}",
            unlabeled.ncols(),
            pool.points.ncols()
        )));
    }
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {}", config.alpha)));
    }
    let k = pool.num_classes;

    let mut pool_points = pool.points.clone();
    let mut pool_labels = pool.labels.clone();
    let mut remaining: Vec<usize> = (0..n_u).collect();
    let mut outcome: Vec<Option<(usize, LabelDistribution, usize)>> = vec![None; n_u];
    let mut pool_sizes = vec![pool_labels.len()];
    let mut rounds = 0;
    let mut all_converged = true;
    // distributions of `remaining` against the current pool, if still valid
    let mut current: Option<Vec<LabelDistribution>> = None;

    while !remaining.is_empty() && rounds < config.max_rounds {
        rounds += 1;
        let targets = unlabeled.select(Axis(0), &remaining);
        let aff = bipartite_affinities(pool_points.view(), targets.view(), config.epsilon, &config.solver)?;
        all_converged &= aff.plan.converged;
        let dists = class_distributions(aff.weights.view(), &pool_labels, k);

        let mut keep = Vec::with_capacity(remaining.len());
        let mut kept_dists = Vec::with_capacity(remaining.len());
        let mut absorbed = Vec::new();
        for (&idx, dist) in remaining.iter().zip(dists) {
            if dist.certainty() >= config.alpha {
                let label = dist.argmax();
                absorbed.push(idx);
                pool_labels.push(label);
                outcome[idx] = Some((label, dist, rounds));
            } else {
                keep.push(idx);
                kept_dists.push(dist);
            }
        }
        if absorbed.is_empty() {
            current = Some(kept_dists);
            break;
        }
        let new_rows = unlabeled.select(Axis(0), &absorbed);
        pool_points = ndarray::concatenate(Axis(0), &[pool_points.view(), new_rows.view()])
            .expect("pool and absorbed rows share the feature dimension");
        pool_sizes.push(pool_labels.len());
        remaining = keep;
    }

    if !remaining.is_empty() {
        let dists = match current {
            Some(d) => d,
            None => {
                rounds += 1;
                let targets = unlabeled.select(Axis(0), &remaining);
                let aff = bipartite_affinities(pool_points.view(), targets.view(), config.epsilon, &config.solver)?;
                all_converged &= aff.plan.converged;
                class_distributions(aff.weights.view(), &pool_labels, k)
            }
        };
        for (&idx, dist) in remaining.iter().zip(dists) {
            outcome[idx] = Some((dist.argmax(), dist, rounds));
        }
    }

    let mut predicted_labels = Vec::with_capacity(n_u);
    let mut distributions = Vec::with_capacity(n_u);
    let mut certainty = Vec::with_capacity(n_u);
    let mut labeled_in_round = Vec::with_capacity(n_u);
    for entry in outcome {
        let (label, dist, round) = entry.expect("every unlabeled point is assigned");
        certainty.push(dist.certainty());
        predicted_labels.push(label);
        distributions.push(dist);
        labeled_in_round.push(round);
    }
    Ok(PropagationResult {
        predicted_labels,
        distributions,
        certainty,
        labeled_in_round,
        rounds,
        pool_sizes,
        all_plans_converged: all_converged,
    })
}

/// One-hot rows for class indices.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), num_classes));
    for (i, &y) in labels.iter().enumerate() {
        out[[i, y]] = 1.0;
    }
    out
}

/// `sum_ij W[i, j] * |target_i - prediction_j|^2` for labeled targets and
/// unlabeled predictions encoded as rows of the same width (one-hot for
/// classes, a single ±1 column for the binary case).
pub fn transductive_objective(
    weights: ArrayView2<'_, f64>,
    labeled_targets: ArrayView2<'_, f64>,
    predictions: ArrayView2<'_, f64>,
) -> Result<f64> {
    let (n_l, n_u) = weights.dim();
    if labeled_targets.nrows() != n_l || predictions.nrows() != n_u {
        return Err(Error::invalid(format!(
            "weights are {n_l}x{n_u} but there are {} targets and {} predictions",
            labeled_targets.nrows(),
            predictions.nrows()
        )));
    }
    if labeled_targets.ncols() != predictions.ncols() {
        return Err(Error::invalid("targets and predictions use different encodings"));
    }
    let mut total = 0.0;
    for (target, row) in labeled_targets.outer_iter().zip(weights.outer_iter()) {
        for (pred, w) in predictions.outer_iter().zip(row) {
            let loss: f64 = target.iter().zip(pred.iter()).map(|(t, p)| (t - p) * (t - p)).sum();
            total += w * loss;
        }
    }
    Ok(total)
}
