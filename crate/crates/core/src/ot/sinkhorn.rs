//! Entropic OT by Sinkhorn-Knopp scaling.
//!
//! The exp-domain iterations run on a kernel `exp((f_i + g_j - C_ij) / eps)`
//! whose dual offsets `f`, `g` start at the row/column minima, so every row
//! and column of the initial kernel contains an entry equal to one. Scalings
//! drifting past `1e±100` are absorbed into the offsets and the kernel is
//! rebuilt. If a scaling still leaves `[1e-300, 1e300]` or a kernel sum
//! underflows, the solve continues with log-sum-exp updates on the duals.

use ndarray::{Array2, ArrayView1};

use super::{check_probability_vector, marginal_error, CostMatrix, TransportPlan};
use crate::error::{Error, Result};

const ABSORB_BOUND: f64 = 1e100;
const SCALING_MIN: f64 = 1e-300;
const SCALING_MAX: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SinkhornConfig {
    /// Target L-infinity marginal violation.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 10_000 }
    }
}

struct Problem<'a> {
    a: ArrayView1<'a, f64>,
    b: ArrayView1<'a, f64>,
    /// Row-major `n * m` costs.
    cost: Vec<f64>,
    n: usize,
    m: usize,
    eps: f64,
}

impl<'a> Problem<'a> {
    fn new(
        a: ArrayView1<'a, f64>,
        b: ArrayView1<'a, f64>,
        cost: &CostMatrix,
        epsilon: f64,
        config: &SinkhornConfig,
    ) -> Result<Self> {
        check_probability_vector(a, "source weights", true)?;
        check_probability_vector(b, "target weights", true)?;
        let (n, m) = cost.shape();
        if a.len() != n || b.len() != m {
            return Err(Error::invalid(format!(
                "cost matrix is {n}x{m} but marginals have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if !(config.tolerance.is_finite() && config.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", config.tolerance)));
        }
        let cost = cost.values().iter().copied().collect();
        Ok(Self { a, b, cost, n, m, eps: epsilon })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.m..(i + 1) * self.m]
    }

    /// Offsets with `f_i + g_j <= C_ij` and equality somewhere in every row
    /// and every column.
    fn initial_duals(&self) -> (Vec<f64>, Vec<f64>) {
        let f: Vec<f64> = (0..self.n)
            .map(|i| self.row(i).iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let mut g = vec![f64::INFINITY; self.m];
        for (i, fi) in f.iter().enumerate() {
            for (gj, c) in g.iter_mut().zip(self.row(i)) {
                *gj = gj.min(c - fi);
            }
        }
        (f, g)
    }

    fn kernel(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.n * self.m);
        for (i, fi) in f.iter().enumerate() {
            k.extend(self.row(i).iter().zip(g).map(|(c, gj)| ((fi + gj - c) / self.eps).exp()));
        }
        k
    }

    fn plan_from_duals(&self, f: &[f64], g: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((self.n, self.m), self.kernel(f, g)).expect("kernel has n*m entries")
    }

    fn finish(&self, coupling: Array2<f64>, iterations: usize, tolerance: f64) -> Result<TransportPlan> {
        if coupling.iter().any(|t| !t.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "transport plan is not finite at epsilon = {}",
                self.eps
            )));
        }
        let err = marginal_error(coupling.view(), self.a, self.b);
        Ok(TransportPlan {
            coupling,
            epsilon: self.eps,
            iterations,
            converged: err <= tolerance,
            marginal_error: err,
        })
    }
}

/// Solves `min <T, C> - eps * H(T)` over couplings with marginals `a`, `b`.
///
/// Running out of iterations is not an error: the iterate with the smallest
/// marginal violation is returned with `converged == false`.
pub fn sinkhorn<'a>(
    a: ArrayView1<'a, f64>,
    b: ArrayView1<'a, f64>,
    cost: &CostMatrix,
    epsilon: f64,
    config: &SinkhornConfig,
) -> Result<TransportPlan> {
    let p = Problem::new(a, b, cost, epsilon, config)?;
    let (n, m, eps) = (p.n, p.m, p.eps);
    let (mut f, mut g) = p.initial_duals();
    let mut kernel = p.kernel(&f, &g);
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    let mut ktu = vec![0.0; m];
    let mut kv = vec![0.0; n];

    let mut best_err = f64::INFINITY;
    let mut best = (f.clone(), g.clone());

    for it in 1..=config.max_iterations {
        ktu.iter_mut().for_each(|x| *x = 0.0);
        for (ui, row) in u.iter().zip(kernel.chunks_exact(m)) {
            for (acc, k) in ktu.iter_mut().zip(row) {
                *acc += ui * k;
            }
        }
        for ((vj, bj), s) in v.iter_mut().zip(p.b.iter()).zip(&ktu) {
            *vj = bj / s;
        }
        for (out, row) in kv.iter_mut().zip(kernel.chunks_exact(m)) {
            *out = row.iter().zip(&v).map(|(k, vj)| k * vj).sum();
        }
        let in_range = |x: &f64| (SCALING_MIN..=SCALING_MAX).contains(x);
        if !v.iter().all(in_range) || !kv.iter().all(|x| x.is_finite() && *x > 0.0) {
            return log_domain_from(&p, best.0, best.1, it - 1, config);
        }
        let err = u
            .iter()
            .zip(&kv)
            .zip(p.a.iter())
            .fold(0.0f64, |acc, ((ui, s), ai)| acc.max((ui * s - ai).abs()));
        if err < best_err {
            best_err = err;
            best = (
                f.iter().zip(&u).map(|(fi, ui)| fi + eps * ui.ln()).collect(),
                g.iter().zip(&v).map(|(gj, vj)| gj + eps * vj.ln()).collect(),
            );
        }
        if err <= config.tolerance {
            let mut coupling = Array2::from_shape_vec((n, m), kernel).expect("kernel has n*m entries");
            for (mut row, ui) in coupling.outer_iter_mut().zip(&u) {
                for (t, vj) in row.iter_mut().zip(&v) {
                    *t *= ui * vj;
                }
            }
            return p.finish(coupling, it, config.tolerance);
        }
        for ((ui, ai), s) in u.iter_mut().zip(p.a.iter()).zip(&kv) {
            *ui = ai / s;
        }
        if !u.iter().all(in_range) {
            return log_domain_from(&p, best.0, best.1, it, config);
        }
        let drifted = |x: &f64| !(1.0 / ABSORB_BOUND..=ABSORB_BOUND).contains(x);
        if u.iter().any(drifted) || v.iter().any(drifted) {
            for (fi, ui) in f.iter_mut().zip(u.iter_mut()) {
                *fi += eps * ui.ln();
                *ui = 1.0;
            }
            for (gj, vj) in g.iter_mut().zip(v.iter_mut()) {
                *gj += eps * vj.ln();
                *vj = 1.0;
            }
            kernel = p.kernel(&f, &g);
        }
    }
    p.finish(p.plan_from_duals(&best.0, &best.1), config.max_iterations, config.tolerance)
}

/// Sinkhorn with every update carried out on the dual potentials through
/// log-sum-exp. Slower than [`sinkhorn`] but immune to kernel underflow.
pub fn sinkhorn_log_domain<'a>(
    a: ArrayView1<'a, f64>,
    b: ArrayView1<'a, f64>,
    cost: &CostMatrix,
    epsilon: f64,
    config: &SinkhornConfig,
) -> Result<TransportPlan> {
    let p = Problem::new(a, b, cost, epsilon, config)?;
    let (f, g) = p.initial_duals();
    log_domain_from(&p, f, g, 0, config)
}

fn log_domain_from(
    p: &Problem<'_>,
    mut f: Vec<f64>,
    mut g: Vec<f64>,
    iterations_done: usize,
    config: &SinkhornConfig,
) -> Result<TransportPlan> {
    let (n, m, eps) = (p.n, p.m, p.eps);
    let log_a: Vec<f64> = p.a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = p.b.iter().map(|x| x.ln()).collect();
    let mut col_max = vec![0.0; m];
    let mut col_sum = vec![0.0; m];
    let mut row_lse = vec![0.0; n];

    let mut best_err = f64::INFINITY;
    let mut best = (f.clone(), g.clone());
    let mut it = iterations_done;

    while it < config.max_iterations {
        it += 1;
        // g_j = eps ln b_j - eps LSE_i((f_i - C_ij) / eps)
        col_max.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        for (i, fi) in f.iter().enumerate() {
            for (mx, c) in col_max.iter_mut().zip(p.row(i)) {
                *mx = mx.max((fi - c) / eps);
            }
        }
        col_sum.iter_mut().for_each(|x| *x = 0.0);
        for (i, fi) in f.iter().enumerate() {
            for ((s, c), mx) in col_sum.iter_mut().zip(p.row(i)).zip(&col_max) {
                *s += ((fi - c) / eps - mx).exp();
            }
        }
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = eps * (log_b[j] - (col_max[j] + col_sum[j].ln()));
        }

        for (i, lse) in row_lse.iter_mut().enumerate() {
            let row = p.row(i);
            let mx = row.iter().zip(&g).fold(f64::NEG_INFINITY, |acc, (c, gj)| acc.max((gj - c) / eps));
            let s: f64 = row.iter().zip(&g).map(|(c, gj)| ((gj - c) / eps - mx).exp()).sum();
            *lse = mx + s.ln();
        }
        let err = f
            .iter()
            .zip(&row_lse)
            .zip(p.a.iter())
            .fold(0.0f64, |acc, ((fi, lse), ai)| acc.max(((fi / eps + lse).exp() - ai).abs()));
        if !err.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "log-domain Sinkhorn diverged at epsilon = {eps}; increase epsilon"
            )));
        }
        if err < best_err {
            best_err = err;
            best = (f.clone(), g.clone());
        }
        if err <= config.tolerance {
            break;
        }
        for ((fi, la), lse) in f.iter_mut().zip(&log_a).zip(&row_lse) {
            *fi = eps * (la - lse);
        }
    }
    p.finish(p.plan_from_duals(&best.0, &best.1), it, config.tolerance)
}
