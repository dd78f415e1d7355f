//! Comparison methods without sample weights: rank-one PLS, l0-constrained
//! sparse PLS and the l1-constrained penalized matrix decomposition.
//!
//! All three maximize `u^T X^T Y v` over unit vectors and never form the
//! `p x q` cross-product; products with it are evaluated as `X^T (Y v)` and
//! `Y^T (X u)`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::StandardizedMatrix;
use crate::projections::{l1_unit_project, top_k_unit};
use crate::rng::{random_unit, restart_rng};
use crate::stats::{neg_weighted_inner, FactorVector};
use crate::wspls::{best_of, check_budget, diff_norm, relative_change, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMethod {
    Pls,
    L0Spls,
    PmdSpls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSolution {
    pub u: FactorVector,
    pub v: FactorVector,
    /// `u^T X^T Y v`
    pub objective: f64,
    pub method: PairMethod,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `u^T X^T Y v` evaluated on the latent scores.
fn cross_objective(xu: &Array1<f64>, yv: &Array1<f64>) -> f64 {
    let ones = Array1::ones(xu.len());
    -neg_weighted_inner(ones.view(), xu.view(), yv.view())
}

fn check_rows(x: &StandardizedMatrix, y: &StandardizedMatrix) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    Ok(())
}

fn normalized(mut a: Array1<f64>) -> Option<Array1<f64>> {
    let norm = a.dot(&a).sqrt();
    if norm > 0.0 && norm.is_finite() {
        a /= norm;
        Some(a)
    } else {
        None
    }
}

/// Leading singular pair of `X^T Y` by alternating power iteration.
///
/// Iterates `u <- Mv / ||Mv||`, `v <- M^T u / ||M^T u||` until
/// `||u_t - u_{t-1}|| + ||v_t - v_{t-1}|| < tol`. Signs are fixed so that the
/// returned objective is non-negative.
pub fn pls_rank1(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<PairSolution> {
    check_rows(x, y)?;
    let (xm, ym) = (x.view(), y.view());
    let mut rng = restart_rng(seed, 0);
    let mut v = random_unit(&mut rng, ym.ncols());
    let mut u = Array1::zeros(xm.ncols());
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=max_iter.max(1) {
        let u_next = normalized(xm.t().dot(&ym.dot(&v))).ok_or(Error::ZeroMatrix)?;
        let v_next = normalized(ym.t().dot(&xm.dot(&u_next))).ok_or(Error::ZeroMatrix)?;
        let moved = diff_norm(&u_next, &u) + diff_norm(&v_next, &v);
        u = u_next;
        v = v_next;
        trace.push(cross_objective(&xm.dot(&u), &ym.dot(&v)));
        iterations = t;
        if moved < tol {
            converged = true;
            break;
        }
    }
    let mut objective = *trace.last().unwrap_or(&0.0);
    if objective < 0.0 {
        u.mapv_inplace(|a| -a);
        objective = -objective;
    }
    let (p, q) = (u.len(), v.len());
    Ok(PairSolution {
        u: FactorVector {
            values: u,
            budget: p,
        },
        v: FactorVector {
            values: v,
            budget: q,
        },
        objective,
        method: PairMethod::Pls,
        objective_trace: trace,
        iterations,
        converged,
    })
}

fn l0_run(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    k_u: usize,
    k_v: usize,
    config: &SolverConfig,
    restart: usize,
) -> Result<PairSolution> {
    let mut rng = restart_rng(config.seed, restart);
    let mut u = random_unit(&mut rng, x.ncols());
    let mut v = random_unit(&mut rng, y.ncols());
    let mut trace: Vec<f64> = Vec::with_capacity(config.max_iter);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        // u <- T_k(u + X^T Y v / L_u), then the same for v with the new u
        let ascent = x.t().dot(&y.dot(&v));
        let bar = &u + &(&ascent * (1.0 / config.l_u));
        u = top_k_unit(bar.view(), k_u)
            .map_err(|_| Error::DegenerateStep("u"))?
            .vector;
        let xu = x.dot(&u);
        let ascent = y.t().dot(&xu);
        let bar = &v + &(&ascent * (1.0 / config.l_v));
        v = top_k_unit(bar.view(), k_v)
            .map_err(|_| Error::DegenerateStep("v"))?
            .vector;
        let obj = cross_objective(&xu, &y.dot(&v));
        let rel = trace.last().map(|prev| relative_change(obj, *prev));
        trace.push(obj);
        iterations = t;
        if rel.is_some_and(|r| r < config.tol) {
            converged = true;
            break;
        }
    }
    Ok(PairSolution {
        objective: *trace.last().unwrap_or(&f64::NEG_INFINITY),
        u: FactorVector {
            values: u,
            budget: k_u,
        },
        v: FactorVector {
            values: v,
            budget: k_v,
        },
        method: PairMethod::L0Spls,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Sparse PLS with `||u||_0 <= k_u`, `||v||_0 <= k_v`.
///
/// Alternates sparse-unit projections of `u + X^T Y v / L_u` and
/// `v + Y^T X u / L_v`; with the step constants in `config` this is the
/// weighted solver with `w` pinned to all-ones. Uses `config`'s iteration
/// limit, tolerance (relative objective change), restarts and seed.
pub fn l0_spls(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    k_u: usize,
    k_v: usize,
    config: &SolverConfig,
) -> Result<PairSolution> {
    check_rows(x, y)?;
    config.validate_common()?;
    check_budget(k_u, x.ncols())?;
    check_budget(k_v, y.ncols())?;
    let (xv, yv) = (x.view(), y.view());
    let runs: Vec<Result<PairSolution>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| l0_run(xv, yv, k_u, k_v, config, r))
        .collect();
    best_of(runs, |s| -s.objective)
}

fn pmd_run(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    c1: f64,
    c2: f64,
    config: &SolverConfig,
    restart: usize,
) -> Result<PairSolution> {
    let mut rng = restart_rng(config.seed, restart);
    let _ = random_unit(&mut rng, x.ncols());
    let mut v = random_unit(&mut rng, y.ncols());
    let mut u = Array1::zeros(x.ncols());
    let mut trace: Vec<f64> = Vec::with_capacity(config.max_iter);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        u = l1_unit_project(x.t().dot(&y.dot(&v)).view(), c1).map_err(|e| degenerate(e, "u"))?;
        let xu = x.dot(&u);
        v = l1_unit_project(y.t().dot(&xu).view(), c2).map_err(|e| degenerate(e, "v"))?;
        let obj = cross_objective(&xu, &y.dot(&v));
        let rel = trace.last().map(|prev| relative_change(obj, *prev));
        trace.push(obj);
        iterations = t;
        if rel.is_some_and(|r| r < config.tol) {
            converged = true;
            break;
        }
    }
    let (p, q) = (u.len(), v.len());
    Ok(PairSolution {
        objective: *trace.last().unwrap_or(&f64::NEG_INFINITY),
        u: FactorVector {
            values: u,
            budget: p,
        },
        v: FactorVector {
            values: v,
            budget: q,
        },
        method: PairMethod::PmdSpls,
        objective_trace: trace,
        iterations,
        converged,
    })
}

fn degenerate(e: Error, block: &'static str) -> Error {
    match e {
        Error::ZeroInput => Error::DegenerateStep(block),
        other => other,
    }
}

/// Penalized matrix decomposition: unit vectors with `||u||_1 <= c1`,
/// `||v||_1 <= c2`, by alternating normalized soft-thresholding.
pub fn pmd_spls(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    c1: f64,
    c2: f64,
    config: &SolverConfig,
) -> Result<PairSolution> {
    check_rows(x, y)?;
    config.validate_common()?;
    for c in [c1, c2] {
        if !(c >= 1.0) {
            return Err(Error::Infeasible(c));
        }
    }
    let (xv, yv) = (x.view(), y.view());
    let runs: Vec<Result<PairSolution>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| pmd_run(xv, yv, c1, c2, config, r))
        .collect();
    best_of(runs, |s| -s.objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
    pub nnz_u: usize,
    pub nnz_v: usize,
}

const CALIBRATION_STEPS: usize = 60;
const CALIBRATION_RTOL: f64 = 0.05;

fn within(nnz: usize, target: usize) -> bool {
    (nnz as f64 - target as f64).abs() <= CALIBRATION_RTOL * target as f64
}

fn nnz(a: ArrayView1<'_, f64>) -> usize {
    a.iter().filter(|x| **x != 0.0).count()
}

/// Finds `(c1, c2)` whose PMD fit has about `target_u` / `target_v` nonzeros.
///
/// Runs a joint bisection of both bounds on `[1, sqrt(d)]`, each bracket
/// steered by its own nonzero count, until both counts are within 5% of the
/// targets. Probing fits use a single restart. Returns
/// [`Error::CannotMatch`] with the closest pair seen when the targets cannot
/// be met.
pub fn calibrate_c(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    target_u: usize,
    target_v: usize,
    config: &SolverConfig,
) -> Result<Calibration> {
    check_rows(x, y)?;
    check_budget(target_u, x.ncols())?;
    check_budget(target_v, y.ncols())?;
    let probe = SolverConfig {
        restarts: 1,
        ..config.clone()
    };
    let bracket = |target: usize, d: usize| -> (f64, f64, Option<f64>) {
        let hi = (d as f64).sqrt();
        // one nonzero forces c = 1; full density leaves the bound inactive
        let pinned = if target == 1 {
            Some(1.0)
        } else if target == d {
            Some(hi)
        } else {
            None
        };
        (1.0, hi, pinned)
    };
    let (mut lo_u, mut hi_u, pin_u) = bracket(target_u, x.ncols());
    let (mut lo_v, mut hi_v, pin_v) = bracket(target_v, y.ncols());

    let mut best: Option<(f64, Calibration)> = None;
    for _ in 0..CALIBRATION_STEPS {
        let c1 = pin_u.unwrap_or(0.5 * (lo_u + hi_u));
        let c2 = pin_v.unwrap_or(0.5 * (lo_v + hi_v));
        let sol = pmd_spls(x, y, c1, c2, &probe)?;
        let (nu, nv) = (nnz(sol.u.values.view()), nnz(sol.v.values.view()));
        let err = (nu as f64 - target_u as f64).abs() / target_u as f64
            + (nv as f64 - target_v as f64).abs() / target_v as f64;
        let cal = Calibration {
            c1,
            c2,
            nnz_u: nu,
            nnz_v: nv,
        };
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, cal));
        }
        if within(nu, target_u) && within(nv, target_v) {
            return Ok(cal);
        }
        if pin_u.is_none() {
            if nu > target_u {
                hi_u = c1;
            } else {
                lo_u = c1;
            }
        }
        if pin_v.is_none() {
            if nv > target_v {
                hi_v = c2;
            } else {
                lo_v = c2;
            }
        }
    }
    let (_, near) = best.expect("at least one calibration step");
    Err(Error::CannotMatch {
        want_u: target_u,
        want_v: target_v,
        got_u: near.nnz_u,
        got_v: near.nnz_v,
        c1: near.c1,
        c2: near.c2,
    })
}
