//! Closed-form projections used as proximal steps.
//!
//! * [`top_k_unit`]: nearest unit vector with at most `k` nonzeros.
//! * [`clamp_box`]: entrywise projection onto `[0, 1]`.
//! * [`project_weight`]: nearest vector in `[0, 1]^n` with at most `k` nonzeros.
//! * [`l1_unit_project`]: normalized soft-thresholding to an l1 bound, used by
//!   the penalized matrix decomposition baseline.
//!
//! Ties between equal magnitudes always keep the lower index.

use std::cmp::Ordering;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::stats::support;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub vector: Array1<f64>,
    /// Sorted positions of the nonzero entries of `vector`.
    pub support: Vec<usize>,
}

impl ProjectionResult {
    fn new(vector: Array1<f64>) -> Self {
        let support = support(vector.view());
        ProjectionResult { vector, support }
    }
}

fn check_budget(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::BadBudget { budget: k, len });
    }
    Ok(())
}

/// Indices of the `k` largest keys, ties to the lower index. Returned sorted.
fn top_k_indices(len: usize, k: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    let cmp = |a: &usize, b: &usize| -> Ordering {
        key(*b)
            .partial_cmp(&key(*a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(b))
    };
    if k < len {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// `T_k(z) / ||T_k(z)||`: keep the `k` largest-magnitude entries and rescale
/// to unit norm. This is the exact minimizer of `||x - z||` over unit vectors
/// with at most `k` nonzeros.
pub fn top_k_unit(z: ArrayView1<'_, f64>, k: usize) -> Result<ProjectionResult> {
    check_budget(k, z.len())?;
    if z.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroInput);
    }
    let keep = top_k_indices(z.len(), k, |i| z[i].abs());
    let mut out = Array1::zeros(z.len());
    for &i in &keep {
        out[i] = z[i];
    }
    let norm = out.dot(&out).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroInput);
    }
    out /= norm;
    Ok(ProjectionResult::new(out))
}

pub fn clamp_box(w: ArrayView1<'_, f64>) -> Array1<f64> {
    w.mapv(|x| x.clamp(0.0, 1.0))
}

/// Nearest point of `{w : 0 <= w <= 1, ||w||_0 <= k}` to `w_bar`.
///
/// Equals `T_k(clamp_box(w_bar))` without renormalization. Entries clamped to
/// the same value 1 are ranked by their unclamped value: keeping coordinate
/// `i` saves `2 w_i - 1` in squared distance when `w_i >= 1`, so the larger
/// pre-clamp value must win.
pub fn project_weight(w_bar: ArrayView1<'_, f64>, k: usize) -> Result<ProjectionResult> {
    check_budget(k, w_bar.len())?;
    let keep = top_k_indices(w_bar.len(), k, |i| w_bar[i]);
    let mut out = Array1::zeros(w_bar.len());
    for &i in &keep {
        out[i] = w_bar[i].clamp(0.0, 1.0);
    }
    Ok(ProjectionResult::new(out))
}

/// Relative l1 tolerance and minimum bracket width for the threshold search.
const L1_TOL: f64 = 1e-6;
const LAMBDA_TOL: f64 = 1e-12;

fn soft_threshold_unit(a: ArrayView1<'_, f64>, lambda: f64) -> (Array1<f64>, f64) {
    let mut s = a.mapv(|x| x.signum() * (x.abs() - lambda).max(0.0));
    let norm = s.dot(&s).sqrt();
    if norm == 0.0 {
        return (s, 0.0);
    }
    s /= norm;
    let l1 = s.iter().map(|x| x.abs()).sum();
    (s, l1)
}

fn first_max_coordinate(a: ArrayView1<'_, f64>) -> Array1<f64> {
    let max = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let i = a.iter().position(|x| x.abs() == max).unwrap_or(0);
    let mut e = Array1::zeros(a.len());
    e[i] = a[i].signum();
    e
}

/// `S(a, lambda) / ||S(a, lambda)||` with `lambda >= 0` found by bisection so
/// that the l1 norm of the result is at most `c`.
pub fn l1_unit_project(a: ArrayView1<'_, f64>, c: f64) -> Result<Array1<f64>> {
    if !(c >= 1.0) {
        return Err(Error::Infeasible(c));
    }
    let max = a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max == 0.0 {
        return Err(Error::ZeroInput);
    }
    let (dense, l1) = soft_threshold_unit(a, 0.0);
    if l1 <= c {
        return Ok(dense);
    }
    // As lambda approaches the largest magnitude only the tied maxima survive,
    // with l1 norm sqrt(#ties). Below that no threshold is feasible.
    let ties = a.iter().filter(|x| x.abs() == max).count();
    if c < (ties as f64).sqrt() {
        return Ok(first_max_coordinate(a));
    }
    let (mut lo, mut hi) = (0.0, max);
    let mut best: Option<Array1<f64>> = None;
    while hi - lo > LAMBDA_TOL {
        let mid = 0.5 * (lo + hi);
        let (s, l1) = soft_threshold_unit(a, mid);
        if l1 == 0.0 || l1 <= c {
            hi = mid;
            if l1 > 0.0 {
                let done = c - l1 < L1_TOL;
                best = Some(s);
                if done {
                    break;
                }
            }
        } else {
            lo = mid;
        }
    }
    Ok(best.unwrap_or_else(|| first_max_coordinate(a)))
}
