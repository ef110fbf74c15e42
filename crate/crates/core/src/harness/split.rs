use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Share of the non-labeled remainder that becomes the unlabeled set; the
/// rest is held out as out-of-sample data.
pub const UNLABELED_FRACTION: f64 = 0.4;
/// Labeled draws attempted before a split is declared infeasible.
pub const MAX_SPLIT_ATTEMPTS: usize = 1000;

/// Disjoint labeled / unlabeled / out-of-sample index sets covering a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub new: Vec<usize>,
    pub zeta: f64,
    pub seed: u64,
}

fn round_half_up(x: f64) -> usize {
    // guards against 7.4999999999 from products like 0.05 * 150
    (x + 0.5 + 1e-9).floor() as usize
}

/// `(labeled, unlabeled, new)` set sizes for `n` points.
pub fn split_sizes(n: usize, zeta: f64) -> (usize, usize, usize) {
    let labeled = round_half_up(zeta * n as f64).min(n);
    let rest = n - labeled;
    let unlabeled = round_half_up(UNLABELED_FRACTION * rest as f64).min(rest);
    (labeled, unlabeled, rest - unlabeled)
}

/// Seeded random split. The labeled draw is repeated until every class has a
/// representative; each index set is returned in ascending order.
pub fn make_split(dataset: &Dataset, zeta: f64, seed: u64) -> Result<Split> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::invalid(format!("zeta must lie in (0, 1), got {zeta}")));
    }
    let n = dataset.len();
    let k = dataset.num_classes();
    let (n_l, n_u, _) = split_sizes(n, zeta);
    if n_l < k {
        return Err(Error::InfeasibleSplit(format!(
            "zeta = {zeta} labels {n_l} of {n} points, fewer than the {k} classes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        order.shuffle(&mut rng);
        let mut seen = vec![false; k];
        for &i in &order[..n_l] {
            seen[dataset.labels[i]] = true;
        }
        if seen.iter().all(|&s| s) {
            let sorted = |s: &[usize]| {
                let mut v = s.to_vec();
                v.sort_unstable();
                v
            };
            return Ok(Split {
                labeled: sorted(&order[..n_l]),
                unlabeled: sorted(&order[n_l..n_l + n_u]),
                new: sorted(&order[n_l + n_u..]),
                zeta,
                seed,
            });
        }
    }
    Err(Error::InfeasibleSplit(format!(
        "no labeled draw of {n_l} points covered all {k} classes in {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}
