//! Out-of-sample prediction. One entropic plan is solved between the
//! uniform measure on the training set (labeled plus propagated points) and
//! the uniform measure on the batch of new points; each new point's column,
//! normalized, weights a vote over the training labels.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ot::{build_cost_matrix, sinkhorn, uniform_weights, EpsilonRule, SinkhornConfig, TransportPlan};
use crate::transduction::{argmax_lowest, propagate, LabeledPool, PropagationConfig, PropagationResult};

/// Normalized affinities from every training point to one new point.
#[derive(Clone, Debug, PartialEq)]
pub struct InductionWeights(Array1<f64>);

impl InductionWeights {
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(weights: Array1<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("induction weights are empty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("induction weights must be nonnegative and finite"));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::invalid(format!("induction weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    /// Normalizes a raw transport column (any positive total mass).
    pub fn from_column(column: ArrayView1<'_, f64>) -> Result<Self> {
        let total = column.sum();
        if !(total.is_finite() && total > 0.0) || column.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("transport column must be nonnegative with positive mass"));
        }
        Self::new(column.mapv(|w| w / total))
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.0.view()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Two class indices mapped to `+1` and `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryEncoding {
    pub positive: usize,
    pub negative: usize,
}

impl Default for BinaryEncoding {
    /// Class 0 is `+1`, so the zero-score tie resolves to the same class as
    /// the multi-class vote's lowest-index rule.
    fn default() -> Self {
        Self { positive: 0, negative: 1 }
    }
}

impl BinaryEncoding {
    pub fn new(positive: usize, negative: usize) -> Result<Self> {
        if positive == negative {
            return Err(Error::invalid("binary encoding needs two distinct classes"));
        }
        Ok(Self { positive, negative })
    }

    pub fn encode(&self, class: usize) -> Result<f64> {
        match class {
            c if c == self.positive => Ok(1.0),
            c if c == self.negative => Ok(-1.0),
            c => Err(Error::invalid(format!("class {c} is not part of the binary encoding"))),
        }
    }

    pub fn encode_all(&self, classes: &[usize]) -> Result<Vec<f64>> {
        classes.iter().map(|&c| self.encode(c)).collect()
    }

    /// Maps `+1` back to the positive class; anything else to the negative one.
    pub fn decode(&self, value: i8) -> usize {
        if value == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// Weights of one batch of new points together with the shared plan.
#[derive(Clone, Debug)]
pub struct InductionBatch {
    pub weights: Vec<InductionWeights>,
    pub plan: TransportPlan,
}

/// Solves one plan between the training points and the whole batch and
/// normalizes each new point's column.
pub fn induction_weights(
    train: ArrayView2<'_, f64>,
    new_points: ArrayView2<'_, f64>,
    epsilon: EpsilonRule,
    solver: &SinkhornConfig,
) -> Result<InductionBatch> {
    let cost = build_cost_matrix(train, new_points)?;
    let eps = epsilon.resolve(&cost);
    let a = uniform_weights(train.nrows());
    let b = uniform_weights(new_points.nrows());
    let plan = sinkhorn(a.view(), b.view(), &cost, eps, solver)?;
    let weights = plan
        .coupling
        .axis_iter(Axis(1))
        .map(InductionWeights::from_column)
        .collect::<Result<Vec<_>>>()?;
    Ok(InductionBatch { weights, plan })
}

/// Weighted squared loss `sum_i w_i (y_i - candidate)^2`.
pub fn inductive_objective(weights: &InductionWeights, labels: &[f64], candidate: f64) -> f64 {
    weights.0.iter().zip(labels).map(|(w, y)| w * (y - candidate) * (y - candidate)).sum()
}

/// Weighted mean of the labels, the minimizer of [`inductive_objective`].
///
/// Positive and negative label mass are accumulated separately so that for
/// ±1 labels the sign is exactly that of `S(+1) - S(-1)`.
pub fn predict_regression_value(weights: &InductionWeights, labels: &[f64]) -> f64 {
    let (mut pos, mut neg, mut total) = (0.0, 0.0, 0.0);
    for (w, y) in weights.0.iter().zip(labels) {
        if *y >= 0.0 {
            pos += w * y;
        } else {
            neg -= w * y;
        }
        total += w;
    }
    (pos - neg) / total
}

/// `+1` when the regression value is nonnegative, `-1` otherwise.
pub fn predict_binary(weights: &InductionWeights, labels: &[f64]) -> i8 {
    if predict_regression_value(weights, labels) >= 0.0 {
        1
    } else {
        -1
    }
}

/// Class with the largest total weight; the lowest index wins ties.
pub fn predict_multiclass(weights: &InductionWeights, labels: &[usize], num_classes: usize) -> usize {
    let mut votes = vec![0.0; num_classes];
    for (w, &y) in weights.0.iter().zip(labels) {
        votes[y] += w;
    }
    argmax_lowest(&votes)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteRule {
    #[default]
    Multiclass,
    /// Sign of the ±1 regression value; needs exactly two classes.
    Binary(BinaryEncoding),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InductionConfig {
    pub epsilon: EpsilonRule,
    pub solver: SinkhornConfig,
    pub rule: VoteRule,
}

fn check_labels(labels: &[usize], num_classes: usize) -> Result<()> {
    match labels.iter().find(|&&y| y >= num_classes) {
        Some(y) => Err(Error::invalid(format!("training label {y} is outside 0..{num_classes}"))),
        None => Ok(()),
    }
}

/// Labels for a batch of new points from a fully labeled training set.
pub fn predict_batch(
    train: ArrayView2<'_, f64>,
    train_labels: &[usize],
    new_points: ArrayView2<'_, f64>,
    num_classes: usize,
    config: &InductionConfig,
) -> Result<Vec<usize>> {
    if train.nrows() != train_labels.len() {
        return Err(Error::invalid(format!(
            "{} training points but {} labels",
            train.nrows(),
            train_labels.len()
        )));
    }
    check_labels(train_labels, num_classes)?;
    let batch = induction_weights(train, new_points, config.epsilon, &config.solver)?;
    match config.rule {
        VoteRule::Multiclass => Ok(batch
            .weights
            .iter()
            .map(|w| predict_multiclass(w, train_labels, num_classes))
            .collect()),
        VoteRule::Binary(enc) => {
            if num_classes != 2 {
                return Err(Error::invalid(format!("binary vote needs 2 classes, got {num_classes}")));
            }
            let signs = enc.encode_all(train_labels)?;
            Ok(batch.weights.iter().map(|w| enc.decode(predict_binary(w, &signs))).collect())
        }
    }
}

/// Training set after propagation, ready to label unseen points without
/// revisiting the transductive stage.
#[derive(Clone, Debug)]
pub struct InductiveModel {
    train: ndarray::Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    config: InductionConfig,
}

impl InductiveModel {
    /// Propagates labels to `unlabeled` and keeps `X_L ∪ X_U` with `Y_L ∪ Y_U`.
    pub fn fit(
        pool: &LabeledPool,
        unlabeled: ArrayView2<'_, f64>,
        propagation: &PropagationConfig,
        config: InductionConfig,
    ) -> Result<(Self, PropagationResult)> {
        let result = propagate(pool, unlabeled, propagation)?;
        let train = ndarray::concatenate(Axis(0), &[pool.points(), unlabeled.view()])
            .map_err(|e| Error::invalid(format!("cannot stack training points: {e}")))?;
        let mut labels = pool.labels().to_vec();
        labels.extend_from_slice(&result.predicted_labels);
        let model = Self { train, labels, num_classes: pool.num_classes(), config };
        Ok((model, result))
    }

    pub fn from_labeled(
        train: ndarray::Array2<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        config: InductionConfig,
    ) -> Result<Self> {
        if train.nrows() != labels.len() || train.nrows() == 0 {
            return Err(Error::invalid("training points and labels must be nonempty and aligned"));
        }
        check_labels(&labels, num_classes)?;
        Ok(Self { train, labels, num_classes, config })
    }

    pub fn train_points(&self) -> ArrayView2<'_, f64> {
        self.train.view()
    }

    pub fn train_labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Labels a batch of new points with one shared plan.
    pub fn predict(&self, new_points: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        predict_batch(self.train.view(), &self.labels, new_points, self.num_classes, &self.config)
    }

    /// Labels points one at a time, each as its own singleton batch.
    pub fn predict_streaming(&self, new_points: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        new_points
            .axis_chunks_iter(Axis(0), 1)
            .map(|row| self.predict(row).map(|v| v[0]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn w(values: &[f64]) -> InductionWeights {
        InductionWeights::new(Array1::from_vec(values.to_vec())).unwrap()
    }

    #[test]
    fn weight_normalization() {
        let iw = InductionWeights::from_column(array![0.2, 0.2].view()).unwrap();
        assert_eq!(iw.values(), array![0.5, 0.5]);
        assert!(InductionWeights::new(array![0.5, 0.6]).is_err());
        assert!(InductionWeights::from_column(array![0.0, 0.0].view()).is_err());
    }

    #[test]
    fn single_training_point() {
        let batch = induction_weights(array![[1.0, 2.0]].view(), array![[5.0, 5.0]].view(), EpsilonRule::default(), &SinkhornConfig::default()).unwrap();
        assert_eq!(batch.weights[0].values(), array![1.0]);
    }

    #[test]
    fn objective_values() {
        assert_eq!(inductive_objective(&w(&[1.0]), &[1.0], 1.0), 0.0);
        assert_eq!(inductive_objective(&w(&[0.5, 0.5]), &[1.0, -1.0], 0.0), 1.0);
    }

    #[test]
    fn regression_values() {
        assert_eq!(predict_regression_value(&w(&[1.0]), &[1.0]), 1.0);
        assert!((predict_regression_value(&w(&[0.7, 0.3]), &[1.0, -1.0]) - 0.4).abs() < 1e-15);
        assert_eq!(predict_regression_value(&w(&[0.5, 0.5]), &[1.0, -1.0]), 0.0);
    }

    #[test]
    fn binary_sign_rule() {
        assert_eq!(predict_binary(&w(&[0.7, 0.3]), &[1.0, -1.0]), 1);
        assert_eq!(predict_binary(&w(&[0.3, 0.7]), &[1.0, -1.0]), -1);
        assert_eq!(predict_binary(&w(&[0.5, 0.5]), &[1.0, -1.0]), 1);
    }

    #[test]
    fn multiclass_vote() {
        assert_eq!(predict_multiclass(&w(&[0.2, 0.3, 0.5]), &[0, 0, 1], 2), 0);
        assert_eq!(predict_multiclass(&w(&[1.0]), &[2], 3), 2);
        assert_eq!(predict_multiclass(&w(&[0.5, 0.5]), &[2, 1], 3), 1);
    }

    #[test]
    fn encoding_round_trip() {
        let enc = BinaryEncoding::new(3, 1).unwrap();
        for class in [3, 1] {
            let v = enc.encode(class).unwrap() as i8;
            assert_eq!(enc.decode(v), class);
        }
        assert!(enc.encode(0).is_err());
        assert!(BinaryEncoding::new(2, 2).is_err());
    }

    #[test]
    fn single_new_point_weights_follow_source_marginal() {
        let batch = induction_weights(array![[0.0], [10.0]].view(), array![[0.0]].view(), EpsilonRule::default(), &SinkhornConfig::default()).unwrap();
        let v = batch.weights[0].values();
        assert!((v[0] - 0.5).abs() < 1e-12 && (v[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn batch_weights_concentrate_at_zero_cost() {
        let batch = induction_weights(
            array![[0.0], [10.0]].view(),
            array![[0.0], [10.0]].view(),
            EpsilonRule::default(),
            &SinkhornConfig::default(),
        )
        .unwrap();
        assert!(batch.weights[0].values()[0] > 0.99);
        assert!(batch.weights[1].values()[1] > 0.99);
    }

    #[test]
    fn predict_batch_recovers_training_labels() {
        let train = array![[0.0, 0.0], [0.2, 0.1], [10.0, 10.0], [10.1, 9.9], [-10.0, 5.0]];
        let labels = [0, 0, 1, 1, 2];
        let new = train.clone();
        let got = predict_batch(train.view(), &labels, new.view(), 3, &InductionConfig::default()).unwrap();
        assert_eq!(got, labels);
    }

    #[test]
    fn binary_rule_requires_two_classes() {
        let cfg = InductionConfig { rule: VoteRule::Binary(BinaryEncoding::default()), ..Default::default() };
        let train = array![[0.0], [1.0], [2.0]];
        assert!(predict_batch(train.view(), &[0, 1, 2], train.view(), 3, &cfg).is_err());
        let got = predict_batch(train.view(), &[0, 1, 1], array![[0.0], [2.0]].view(), 2, &cfg).unwrap();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn rejects_misaligned_inputs() {
        let train = array![[0.0], [1.0]];
        assert!(predict_batch(train.view(), &[0], train.view(), 2, &InductionConfig::default()).is_err());
        assert!(predict_batch(train.view(), &[0, 5], train.view(), 2, &InductionConfig::default()).is_err());
    }
}
