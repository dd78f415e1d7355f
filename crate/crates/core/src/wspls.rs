//! Block proximal gradient solver for weighted sparse PLS.
//!
//! Minimizes `f(u, v, w) = -w^T [(Xu) .* (Yv)]` subject to
//! `||u|| = ||v|| = 1`, `||u||_0 <= k_u`, `||v||_0 <= k_v`,
//! `0 <= w <= 1`, `||w||_0 <= k_w`.
//!
//! Each sweep takes one proximal gradient step per block in the order
//! `u`, `v`, `w`. Because `f` is linear in every block, each step is a
//! descent step for any positive step constant and the objective trace is
//! non-increasing.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::StandardizedMatrix;
use crate::projections::{project_weight, top_k_unit};
use crate::rng::{random_unit, restart_rng};
use crate::stats::{check_pair_dims, neg_weighted_inner, FactorVector, WeightVector};

/// Which convergence test ends a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `||u_t - u_{t-1}|| + ||v_t - v_{t-1}|| + ||w_t - w_{t-1}|| < tol`.
    IterateChange,
    /// `|f_t - f_{t-1}| / |f_{t-1}| < tol`.
    ObjectiveChange,
    /// Whichever of the two fires first.
    #[default]
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub k_u: usize,
    pub k_v: usize,
    pub k_w: usize,
    pub l_u: f64,
    pub l_v: f64,
    pub l_w: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub stop_rule: StopRule,
    /// When false, `w` stays at all-ones and the weight step is skipped.
    pub update_weights: bool,
}

impl SolverConfig {
    pub fn new(k_u: usize, k_v: usize, k_w: usize) -> Self {
        SolverConfig {
            k_u,
            k_v,
            k_w,
            l_u: 1.0,
            l_v: 1.0,
            l_w: 1.0,
            max_iter: 20,
            tol: 1e-5,
            restarts: 5,
            seed: 0,
            stop_rule: StopRule::Both,
            update_weights: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_stop_rule(mut self, rule: StopRule) -> Self {
        self.stop_rule = rule;
        self
    }

    pub fn with_steps(mut self, l_u: f64, l_v: f64, l_w: f64) -> Self {
        self.l_u = l_u;
        self.l_v = l_v;
        self.l_w = l_w;
        self
    }

    pub(crate) fn validate_common(&self) -> Result<()> {
        for (name, l) in [("L_u", self.l_u), ("L_v", self.l_v), ("L_w", self.l_w)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive, got {l}"
                )));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn validate(&self, n: usize, p: usize, q: usize) -> Result<()> {
        self.validate_common()?;
        check_budget(self.k_u, p)?;
        check_budget(self.k_v, q)?;
        if self.update_weights {
            check_budget(self.k_w, n)?;
        }
        Ok(())
    }
}

pub(crate) fn check_budget(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::BadBudget { budget: k, len });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsplsSolution {
    pub u: FactorVector,
    pub v: FactorVector,
    pub w: WeightVector,
    /// Objective after each completed sweep.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restart_index: usize,
}

impl WsplsSolution {
    pub fn objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    }
}

/// Iterate of the pairwise solver, borrowed together with its data.
#[derive(Debug, Clone)]
pub struct PairState<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView2<'a, f64>,
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub w: Array1<f64>,
}

impl<'a> PairState<'a> {
    pub fn new(
        x: &'a StandardizedMatrix,
        y: &'a StandardizedMatrix,
        u: Array1<f64>,
        v: Array1<f64>,
        w: Array1<f64>,
    ) -> Result<Self> {
        check_pair_dims(u.view(), v.view(), w.view(), x.view(), y.view())?;
        Ok(PairState {
            x: x.view(),
            y: y.view(),
            u,
            v,
            w,
        })
    }
}

/// `-X^T [w .* (Yv)]`
pub fn grad_u(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    check_pair_dims(u, v, w, x, y)?;
    Ok(weighted_back_projection(x, w, y.dot(&v).view()))
}

/// `-Y^T [w .* (Xu)]`
pub fn grad_v(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    check_pair_dims(u, v, w, x, y)?;
    Ok(weighted_back_projection(y, w, x.dot(&u).view()))
}

/// `-(Xu) .* (Yv)`
pub fn grad_w(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    check_pair_dims(u, v, w, x, y)?;
    Ok(-(&x.dot(&u) * &y.dot(&v)))
}

/// `-M^T (w .* s)`, the shared shape of every factor gradient.
pub(crate) fn weighted_back_projection(
    m: ArrayView2<'_, f64>,
    w: ArrayView1<'_, f64>,
    s: ArrayView1<'_, f64>,
) -> Array1<f64> {
    -m.t().dot(&(&w * &s))
}

/// Gradient step followed by the sparse unit-sphere projection.
pub(crate) fn factor_step(
    current: ArrayView1<'_, f64>,
    grad: &Array1<f64>,
    step: f64,
    budget: usize,
    block: &'static str,
) -> Result<Array1<f64>> {
    let bar = &current - &(grad * (1.0 / step));
    top_k_unit(bar.view(), budget)
        .map(|r| r.vector)
        .map_err(|e| match e {
            Error::ZeroInput => Error::DegenerateStep(block),
            other => other,
        })
}

/// How the weight block is constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WeightRule {
    /// `0 <= w <= 1`, `||w||_0 <= k_w`.
    Box,
    /// `||w|| = 1`, `||w||_0 <= k_w`.
    Sphere,
}

pub(crate) fn weight_step(
    current: ArrayView1<'_, f64>,
    grad: &Array1<f64>,
    step: f64,
    budget: usize,
    rule: WeightRule,
) -> Result<Array1<f64>> {
    let bar = &current - &(grad * (1.0 / step));
    match rule {
        WeightRule::Box => Ok(project_weight(bar.view(), budget)?.vector),
        WeightRule::Sphere => factor_step(current, grad, step, budget, "w"),
    }
}

/// `u^{t+1} = T_{k_u}(u_bar) / ||T_{k_u}(u_bar)||`, `u_bar = u - grad_u / L_u`.
pub fn step_u(state: &PairState<'_>, config: &SolverConfig) -> Result<FactorVector> {
    let g = weighted_back_projection(state.x, state.w.view(), state.y.dot(&state.v).view());
    let values = factor_step(state.u.view(), &g, config.l_u, config.k_u, "u")?;
    Ok(FactorVector {
        values,
        budget: config.k_u,
    })
}

/// Mirror of [`step_u`] for `v`, using the current `u`.
pub fn step_v(state: &PairState<'_>, config: &SolverConfig) -> Result<FactorVector> {
    let g = weighted_back_projection(state.y, state.w.view(), state.x.dot(&state.u).view());
    let values = factor_step(state.v.view(), &g, config.l_v, config.k_v, "v")?;
    Ok(FactorVector {
        values,
        budget: config.k_v,
    })
}

/// `w^{t+1} = T_{k_w}(clamp(w_bar))`, `w_bar = w - grad_w / L_w`.
pub fn step_w(state: &PairState<'_>, config: &SolverConfig) -> Result<WeightVector> {
    let g = -(&state.x.dot(&state.u) * &state.y.dot(&state.v));
    let values = weight_step(state.w.view(), &g, config.l_w, config.k_w, WeightRule::Box)?;
    Ok(WeightVector {
        values,
        budget: config.k_w,
    })
}

pub(crate) fn diff_norm(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn relative_change(current: f64, previous: f64) -> f64 {
    let delta = (current - previous).abs();
    if delta == 0.0 {
        0.0
    } else {
        delta / previous.abs()
    }
}

/// Snapshot handed to an observer after every sweep.
pub struct Iterate<'s> {
    pub iteration: usize,
    pub u: &'s Array1<f64>,
    pub v: &'s Array1<f64>,
    pub w: &'s Array1<f64>,
    pub objective: f64,
}

/// A single run from the restart-`restart` initial point, reporting every
/// sweep to `observer`.
pub fn run_single(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
    restart: usize,
    observer: &mut dyn FnMut(&Iterate<'_>),
) -> Result<WsplsSolution> {
    check_inputs(x, y, config)?;
    run(
        x.view(),
        y.view(),
        config,
        restart,
        WeightRule::Box,
        observer,
    )
}

fn run(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    config: &SolverConfig,
    restart: usize,
    rule: WeightRule,
    observer: &mut dyn FnMut(&Iterate<'_>),
) -> Result<WsplsSolution> {
    let n = x.nrows();
    let mut rng = restart_rng(config.seed, restart);
    let mut u = random_unit(&mut rng, x.ncols());
    let mut v = random_unit(&mut rng, y.ncols());
    let mut w = Array1::<f64>::ones(n);

    let mut trace = Vec::with_capacity(config.max_iter);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        let yv = y.dot(&v);
        let g = weighted_back_projection(x, w.view(), yv.view());
        let u_next = factor_step(u.view(), &g, config.l_u, config.k_u, "u")?;
        let xu = x.dot(&u_next);
        let g = weighted_back_projection(y, w.view(), xu.view());
        let v_next = factor_step(v.view(), &g, config.l_v, config.k_v, "v")?;
        let yv = y.dot(&v_next);
        let w_next = if config.update_weights {
            let g = -(&xu * &yv);
            weight_step(w.view(), &g, config.l_w, config.k_w, rule)?
        } else {
            w.clone()
        };
        let obj = neg_weighted_inner(w_next.view(), xu.view(), yv.view());

        let moved = diff_norm(&u_next, &u) + diff_norm(&v_next, &v) + diff_norm(&w_next, &w);
        let obj_rel = trace.last().map(|prev| relative_change(obj, *prev));
        u = u_next;
        v = v_next;
        w = w_next;
        trace.push(obj);
        iterations = t;
        observer(&Iterate {
            iteration: t,
            u: &u,
            v: &v,
            w: &w,
            objective: obj,
        });

        let by_iterate = moved < config.tol;
        let by_objective = obj_rel.is_some_and(|r| r < config.tol);
        let fired = match config.stop_rule {
            StopRule::IterateChange => by_iterate,
            StopRule::ObjectiveChange => by_objective,
            StopRule::Both => by_iterate || by_objective,
        };
        if fired {
            converged = true;
            break;
        }
    }

    let k_w = if config.update_weights { config.k_w } else { n };
    Ok(WsplsSolution {
        u: FactorVector {
            values: u,
            budget: config.k_u,
        },
        v: FactorVector {
            values: v,
            budget: config.k_v,
        },
        w: WeightVector {
            values: w,
            budget: k_w,
        },
        objective_trace: trace,
        converged,
        iterations,
        restart_index: restart,
    })
}

fn check_inputs(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    config.validate(x.nrows(), x.ncols(), y.ncols())
}

/// Lowest final objective wins; ties go to the earlier restart. Failed
/// restarts are skipped, and if every restart failed the first error is
/// returned.
pub(crate) fn best_of<T>(runs: Vec<Result<T>>, objective: impl Fn(&T) -> f64) -> Result<T> {
    let mut best: Option<T> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(sol) => {
                let better = best.as_ref().is_none_or(|b| objective(&sol) < objective(b));
                if better {
                    best = Some(sol);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match (best, first_err) {
        (Some(b), _) => Ok(b),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::InvalidConfig("no restarts were run".into())),
    }
}

fn fit_with(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
    rule: WeightRule,
) -> Result<WsplsSolution> {
    check_inputs(x, y, config)?;
    let (xv, yv) = (x.view(), y.view());
    let runs: Vec<Result<WsplsSolution>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run(xv, yv, config, r, rule, &mut |_| {}))
        .collect();
    best_of(runs, WsplsSolution::objective)
}

/// Weighted sparse PLS with box/l0 sample weights.
pub fn fit(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
) -> Result<WsplsSolution> {
    fit_with(x, y, config, WeightRule::Box)
}

/// Variant whose weight vector lives on the unit sphere with at most `k_w`
/// nonzeros (no box or sign constraint). Weights may be negative.
pub fn fit_l2_variant(
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
) -> Result<WsplsSolution> {
    fit_with(x, y, config, WeightRule::Sphere)
}
