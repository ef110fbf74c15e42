use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Nonnegative, finite `n x m` ground-cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix(Array2<f64>);

impl CostMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("cost matrix is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("cost entry {bad} is not a nonnegative finite number")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn median(&self) -> f64 {
        let mut v: Vec<f64> = self.0.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let mid = v.len() / 2;
        if v.len() % 2 == 1 {
            v[mid]
        } else {
            0.5 * (v[mid - 1] + v[mid])
        }
    }

    pub fn mean(&self) -> f64 {
        self.0.sum() / self.0.len() as f64
    }

    /// Same costs with rows reordered so that row `i` of the result is row
    /// `order[i]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> CostMatrix {
        CostMatrix(self.0.select(ndarray::Axis(0), order))
    }
}

/// Squared Euclidean distances between every source and target point.
pub fn build_cost_matrix(source: ArrayView2<'_, f64>, target: ArrayView2<'_, f64>) -> Result<CostMatrix> {
    let (n, d) = source.dim();
    let (m, d2) = target.dim();
    if n == 0 || m == 0 {
        return Err(Error::invalid("cost matrix needs nonempty point sets"));
    }
    if d != d2 {
        return Err(Error::invalid(format!(
            "feature dimension mismatch: source has {d}, target has {d2}"
        )));
    }
    if source.iter().chain(target.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite feature in cost matrix input"));
    }
    let mut out = Array2::<f64>::zeros((n, m));
    for (i, x) in source.outer_iter().enumerate() {
        for (j, y) in target.outer_iter().enumerate() {
            out[[i, j]] = x.iter().zip(y.iter()).map(|(p, q)| (p - q) * (p - q)).sum();
        }
    }
    Ok(CostMatrix(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_points() {
        let c = build_cost_matrix(array![[0.0]].view(), array![[0.0]].view()).unwrap();
        assert_eq!(c.values(), array![[0.0]]);
    }

    #[test]
    fn one_dimensional() {
        let c = build_cost_matrix(array![[0.0], [1.0]].view(), array![[2.0]].view()).unwrap();
        assert_eq!(c.values(), array![[4.0], [1.0]]);
    }

    #[test]
    fn two_dimensional() {
        let c = build_cost_matrix(array![[1.0, 0.0]].view(), array![[0.0, 1.0]].view()).unwrap();
        assert_eq!(c.values(), array![[2.0]]);
    }

    #[test]
    fn symmetric_for_same_cloud() {
        let x = array![[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]];
        let c = build_cost_matrix(x.view(), x.view()).unwrap();
        assert_eq!(c.values(), c.values().t());
        assert!(c.values().diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_mismatch_and_nan() {
        assert!(build_cost_matrix(array![[0.0, 1.0]].view(), array![[0.0]].view()).is_err());
        assert!(build_cost_matrix(array![[f64::INFINITY]].view(), array![[0.0]].view()).is_err());
        assert!(build_cost_matrix(Array2::zeros((0, 1)).view(), array![[0.0]].view()).is_err());
        assert!(CostMatrix::new(array![[-1.0]]).is_err());
    }

    #[test]
    fn median_odd_and_even() {
        assert_eq!(CostMatrix::new(array![[3.0, 1.0, 2.0]]).unwrap().median(), 2.0);
        assert_eq!(CostMatrix::new(array![[4.0, 1.0], [2.0, 3.0]]).unwrap().median(), 2.5);
    }
}
