use ndarray::Array2;

use super::{CostMatrix, TransportPlan};
use crate::error::{Error, Result};

/// Largest `n` accepted by the exhaustive oracle (8! = 40 320 permutations).
pub const MAX_ORACLE_SIZE: usize = 8;

/// Lexicographically next permutation in place; `false` once `perm` is the
/// last (descending) permutation.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(pivot) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let successor = perm.iter().rposition(|&x| x > perm[pivot]).expect("pivot has a successor");
    perm.swap(pivot, successor);
    perm[pivot + 1..].reverse();
    true
}

/// Minimum-cost assignment `i -> perm[i]` by enumerating all `n!`
/// permutations. Returns the permutation and the uniform-weight cost
/// `sum_i C[i, perm[i]] / n`. Ties keep the lexicographically smallest.
pub fn optimal_permutation(cost: &CostMatrix) -> Result<(Vec<usize>, f64)> {
    let (n, m) = cost.shape();
    if n != m {
        return Err(Error::UnsupportedSize(format!("assignment oracle needs a square matrix, got {n}x{m}")));
    }
    if n > MAX_ORACLE_SIZE {
        return Err(Error::UnsupportedSize(format!(
            "assignment oracle enumerates n! plans; n = {n} exceeds {MAX_ORACLE_SIZE}"
        )));
    }
    let c = cost.values();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum();
        if total < best_cost {
            best_cost = total;
            best.copy_from_slice(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok((best, best_cost / n as f64))
}

/// Exact unregularized plan for uniform square problems: the optimal
/// permutation coupling with entries `0` or `1/n`.
pub fn exact_assignment_oracle(cost: &CostMatrix) -> Result<TransportPlan> {
    let (perm, _) = optimal_permutation(cost)?;
    let n = perm.len();
    let mut coupling = Array2::zeros((n, n));
    for (i, &j) in perm.iter().enumerate() {
        coupling[[i, j]] = 1.0 / n as f64;
    }
    Ok(TransportPlan { coupling, epsilon: 0.0, iterations: 0, converged: true, marginal_error: 0.0 })
}
