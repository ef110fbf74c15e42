//! Partition-agreement scores: Adjusted Rand Index and Normalized Mutual
//! Information (arithmetic-mean normalization, natural log).

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Cross-tabulation of two labelings over the same items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[r][c]` = items with the r-th true class and c-th predicted class,
    /// classes numbered in order of first appearance.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

fn dense_ids<T: Eq + Hash + Clone>(labels: &[T]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let mapped = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(l.clone()).or_insert(next)
        })
        .collect();
    (mapped, ids.len())
}

impl ContingencyTable {
    pub fn new<T: Eq + Hash + Clone, U: Eq + Hash + Clone>(y_true: &[T], y_pred: &[U]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::invalid(format!(
                "label vectors differ in length: {} vs {}",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::invalid("label vectors are empty"));
        }
        let (rows, n_rows) = dense_ids(y_true);
        let (cols, n_cols) = dense_ids(y_pred);
        let mut counts = vec![vec![0u64; n_cols]; n_rows];
        for (&r, &c) in rows.iter().zip(&cols) {
            counts[r][c] += 1;
        }
        let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums = (0..n_cols).map(|c| counts.iter().map(|row| row[c]).sum()).collect();
        Ok(Self { counts, row_sums, col_sums, total: y_true.len() as u64 })
    }
}

fn pairs(k: u64) -> u64 {
    k * k.saturating_sub(1) / 2
}

fn require_two<T>(y: &[T]) -> Result<()> {
    if y.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 labeled items, got {}", y.len())));
    }
    Ok(())
}

/// Hubert-Arabie adjusted Rand index, in `[-1, 1]`.
///
/// When both labelings are trivial in the same way (single cluster, or all
/// singletons) the chance-corrected ratio is 0/0; that case scores 1.
pub fn adjusted_rand_index<T: Eq + Hash + Clone, U: Eq + Hash + Clone>(y_true: &[T], y_pred: &[U]) -> Result<f64> {
    require_two(y_true)?;
    let table = ContingencyTable::new(y_true, y_pred)?;
    let index: u64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_rows: u64 = table.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_cols: u64 = table.col_sums.iter().map(|&c| pairs(c)).sum();
    let all = pairs(table.total) as f64;
    let expected = sum_rows as f64 * sum_cols as f64 / all;
    let max = 0.5 * (sum_rows + sum_cols) as f64;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index as f64 - expected) / (max - expected))
}

fn entropy_of(counts: &[u64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the mean of the two marginal entropies.
///
/// Two constant labelings score 1; exactly one constant labeling scores 0.
pub fn normalized_mutual_information<T: Eq + Hash + Clone, U: Eq + Hash + Clone>(
    y_true: &[T],
    y_pred: &[U],
) -> Result<f64> {
    require_two(y_true)?;
    let table = ContingencyTable::new(y_true, y_pred)?;
    let n = table.total as f64;
    let (k_true, k_pred) = (table.row_sums.len(), table.col_sums.len());
    match (k_true == 1, k_pred == 1) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let h_true = entropy_of(&table.row_sums, n);
    let h_pred = entropy_of(&table.col_sums, n);
    let mut mi = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let joint = count as f64;
            mi += joint / n * (joint * n / (table.row_sums[r] as f64 * table.col_sums[c] as f64)).ln();
        }
    }
    // rounding can push MI a hair past the normalizer or below zero
    Ok((mi / (0.5 * (h_true + h_pred))).clamp(0.0, 1.0))
}
