use serde::{Deserialize, Serialize};

use super::{make_split, Dataset, Split};
use crate::error::Result;
use crate::evaluation::{adjusted_rand_index, normalized_mutual_information};
use crate::induction::{InductionConfig, InductiveModel};
use crate::transduction::{propagate, LabeledPool, PropagationConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub zetas: Vec<f64>,
    pub repetitions: usize,
    /// Run `r` uses seed `seed + r` for every zeta.
    pub seed: u64,
    pub standardize: bool,
    pub propagation: PropagationConfig,
    pub induction: InductionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            zetas: vec![0.05, 0.15, 0.25],
            repetitions: 10,
            seed: 0,
            standardize: false,
            propagation: PropagationConfig::default(),
            induction: InductionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub ari: f64,
    pub nmi: f64,
}

impl Scores {
    fn of(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        Ok(Self { ari: adjusted_rand_index(truth, predicted)?, nmi: normalized_mutual_information(truth, predicted)? })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub labeled: usize,
    pub unlabeled: usize,
    pub new: usize,
    /// Induction on `X_new` after propagation over `X_L ∪ X_U`.
    pub inductive: Scores,
    /// Propagation over `X_U ∪ X_new`, scored on `X_new`.
    pub transductive: Scores,
    /// Propagation rounds of the inductive pipeline's training stage.
    pub propagation_rounds: usize,
    pub all_plans_converged: bool,
    /// Share of `X_new` that gets the same label when each point is
    /// predicted as a singleton batch instead of with the whole batch.
    pub singleton_agreement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub ari: Stat,
    pub nmi: Stat,
}

impl MethodSummary {
    fn of(scores: impl Iterator<Item = Scores> + Clone) -> Self {
        let ari: Vec<f64> = scores.clone().map(|s| s.ari).collect();
        let nmi: Vec<f64> = scores.map(|s| s.nmi).collect();
        Self { ari: Stat::of(&ari), nmi: Stat::of(&nmi) }
    }
}

/// Results for one (dataset, zeta) configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub samples: usize,
    pub features: usize,
    pub classes: usize,
    pub zeta: f64,
    pub repetitions: usize,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    /// False when fewer than `repetitions` runs succeeded.
    pub complete: bool,
    /// `None` when no run succeeded.
    pub inductive: Option<MethodSummary>,
    pub transductive: Option<MethodSummary>,
    pub config: ExperimentConfig,
}

/// One seeded run on a prepared split. Labels of `X_new` are read only when
/// scoring.
pub fn run_single(dataset: &Dataset, split: &Split, config: &ExperimentConfig, run: usize) -> Result<RunRecord> {
    let k = dataset.num_classes();
    let pool = LabeledPool::new(dataset.rows(&split.labeled), dataset.labels_at(&split.labeled), k)?;
    let x_u = dataset.rows(&split.unlabeled);
    let x_new = dataset.rows(&split.new);

    let (model, propagation) = InductiveModel::fit(&pool, x_u.view(), &config.propagation, config.induction)?;
    let predicted = model.predict(x_new.view())?;
    let streamed = model.predict_streaming(x_new.view())?;

    let merged: Vec<usize> = split.unlabeled.iter().chain(&split.new).copied().collect();
    let reference = propagate(&pool, dataset.rows(&merged).view(), &config.propagation)?;
    let reference_new = &reference.predicted_labels[split.unlabeled.len()..];

    let truth = dataset.labels_at(&split.new);
    let agree = predicted.iter().zip(&streamed).filter(|(a, b)| a == b).count();
    Ok(RunRecord {
        run,
        seed: split.seed,
        labeled: split.labeled.len(),
        unlabeled: split.unlabeled.len(),
        new: split.new.len(),
        inductive: Scores::of(&truth, &predicted)?,
        transductive: Scores::of(&truth, reference_new)?,
        propagation_rounds: propagation.rounds,
        all_plans_converged: propagation.all_plans_converged && reference.all_plans_converged,
        singleton_agreement: agree as f64 / predicted.len() as f64,
    })
}

/// Runs every zeta for `config.repetitions` seeded splits. A failing run is
/// recorded and the report marked incomplete.
pub fn run_experiment(dataset: &Dataset, config: &ExperimentConfig) -> Vec<ExperimentReport> {
    let prepared;
    let data = if config.standardize {
        prepared = dataset.standardized();
        &prepared
    } else {
        dataset
    };
    config
        .zetas
        .iter()
        .map(|&zeta| {
            let mut runs = Vec::with_capacity(config.repetitions);
            let mut failures = Vec::new();
            for run in 0..config.repetitions {
                let seed = config.run_seed(run);
                match make_split(data, zeta, seed).and_then(|split| run_single(data, &split, config, run)) {
                    Ok(record) => runs.push(record),
                    Err(e) => failures.push(RunFailure { run, seed, error: e.to_string() }),
                }
            }
            ExperimentReport {
                dataset: dataset.name.clone(),
                samples: dataset.len(),
                features: dataset.num_features(),
                classes: dataset.num_classes(),
                zeta,
                repetitions: config.repetitions,
                complete: runs.len() == config.repetitions,
                inductive: (!runs.is_empty()).then(|| MethodSummary::of(runs.iter().map(|r| r.inductive))),
                transductive: (!runs.is_empty()).then(|| MethodSummary::of(runs.iter().map(|r| r.transductive))),
                runs,
                failures,
                config: config.clone(),
            }
        })
        .collect()
}
