//! Multi-view weighted sparse PLS.
//!
//! Two ways of coupling `m >= 2` views that share their samples:
//!
//! * [`Scheme::Sum`]: `f = -sum_{i<j} w^T [(X_i u_i) .* (X_j u_j)]`
//! * [`Scheme::Product`]: `f = -w^T [(X_1 u_1) .* ... .* (X_m u_m)]`
//!
//! Both are solved by Gauss-Seidel block proximal gradient sweeps: views in
//! input order, then `w`. View 0 uses step constant `L_u`, every later view
//! uses `L_v`, and `w` uses `L_w`, so at `m = 2` both schemes replay
//! [`crate::wspls::fit`] exactly. Runs stop on the relative objective change.

use ndarray::{Array1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::StandardizedMatrix;
use crate::rng::{random_unit, restart_rng};
use crate::stats::{neg_weighted_inner, FactorVector, WeightVector};
use crate::wspls::{
    best_of, check_budget, factor_step, relative_change, weight_step, weighted_back_projection,
    SolverConfig, WeightRule,
};

/// Callback receiving `(iteration, us, w, objective)` after every sweep.
pub type SweepObserver<'a> = dyn FnMut(usize, &[Array1<f64>], &Array1<f64>, f64) + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Sum,
    Product,
}

/// Two or more standardized views over the same samples.
#[derive(Debug, Clone)]
pub struct MultiViewData {
    views: Vec<StandardizedMatrix>,
}

impl MultiViewData {
    pub fn new(views: Vec<StandardizedMatrix>) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need at least 2 views, got {}",
                views.len()
            )));
        }
        let n = views[0].nrows();
        if let Some((i, v)) = views.iter().enumerate().find(|(_, v)| v.nrows() != n) {
            return Err(Error::DimensionMismatch(format!(
                "view {i} has {} rows, view 0 has {n}",
                v.nrows()
            )));
        }
        Ok(MultiViewData { views })
    }

    pub fn views(&self) -> &[StandardizedMatrix] {
        &self.views
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].nrows()
    }

    fn arrays(&self) -> Vec<ArrayView2<'_, f64>> {
        self.views.iter().map(|v| v.view()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwsplsSolution {
    pub us: Vec<FactorVector>,
    pub w: WeightVector,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub restart_index: usize,
    pub scheme: Scheme,
}

impl MwsplsSolution {
    pub fn objective(&self) -> f64 {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(f64::INFINITY)
    }
}

/// Loadings and weights of the multi-view problem, borrowed with the data.
#[derive(Debug, Clone)]
pub struct MultiViewState<'a> {
    pub data: &'a MultiViewData,
    pub us: Vec<Array1<f64>>,
    pub w: Array1<f64>,
}

impl<'a> MultiViewState<'a> {
    pub fn new(data: &'a MultiViewData, us: Vec<Array1<f64>>, w: Array1<f64>) -> Result<Self> {
        if us.len() != data.n_views() {
            return Err(Error::DimensionMismatch(format!(
                "{} loading vectors for {} views",
                us.len(),
                data.n_views()
            )));
        }
        for (i, (u, x)) in us.iter().zip(data.views()).enumerate() {
            if u.len() != x.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "u_{i} has length {}, view has {} columns",
                    u.len(),
                    x.ncols()
                )));
            }
        }
        if w.len() != data.n_samples() {
            return Err(Error::DimensionMismatch(format!(
                "w has length {}, expected {}",
                w.len(),
                data.n_samples()
            )));
        }
        Ok(MultiViewState { data, us, w })
    }

    fn scores(&self) -> Vec<Array1<f64>> {
        self.data
            .views()
            .iter()
            .zip(&self.us)
            .map(|(x, u)| x.data().dot(u))
            .collect()
    }
}

fn check_view(i: usize, m: usize) -> Result<()> {
    if i >= m {
        return Err(Error::DimensionMismatch(format!("view {i} of {m}")));
    }
    Ok(())
}

/// `sum_{j != i} X_j u_j`
fn partner_sum(scores: &[Array1<f64>], i: usize) -> Array1<f64> {
    let mut acc = Array1::zeros(scores[0].len());
    for (j, s) in scores.iter().enumerate() {
        if j != i {
            acc += s;
        }
    }
    acc
}

/// `prod_{j != i} X_j u_j`
fn partner_product(scores: &[Array1<f64>], i: usize) -> Array1<f64> {
    let mut acc = Array1::ones(scores[0].len());
    for (j, s) in scores.iter().enumerate() {
        if j != i {
            acc *= s;
        }
    }
    acc
}

fn sum_weight_gradient(scores: &[Array1<f64>]) -> Array1<f64> {
    let mut acc = Array1::zeros(scores[0].len());
    for i in 0..scores.len() {
        for j in i + 1..scores.len() {
            acc += &(&scores[i] * &scores[j]);
        }
    }
    -acc
}

fn product_weight_gradient(scores: &[Array1<f64>]) -> Array1<f64> {
    -(&scores[0] * &partner_product(scores, 0))
}

/// `-X_i^T sum_{j != i} [w .* (X_j u_j)]`
pub fn grad_sum_u(i: usize, state: &MultiViewState<'_>) -> Result<Array1<f64>> {
    check_view(i, state.data.n_views())?;
    let scores = state.scores();
    Ok(weighted_back_projection(
        state.data.views()[i].view(),
        state.w.view(),
        partner_sum(&scores, i).view(),
    ))
}

/// `-sum_{i<j} (X_i u_i) .* (X_j u_j)`
pub fn grad_sum_w(state: &MultiViewState<'_>) -> Array1<f64> {
    sum_weight_gradient(&state.scores())
}

/// `-X_i^T (w .* z_i)` with `z_i = prod_{j != i} X_j u_j`.
pub fn grad_prod_u(i: usize, state: &MultiViewState<'_>) -> Result<Array1<f64>> {
    check_view(i, state.data.n_views())?;
    let scores = state.scores();
    Ok(weighted_back_projection(
        state.data.views()[i].view(),
        state.w.view(),
        partner_product(&scores, i).view(),
    ))
}

/// `-prod_i X_i u_i`
pub fn grad_prod_w(state: &MultiViewState<'_>) -> Array1<f64> {
    product_weight_gradient(&state.scores())
}

fn scheme_objective(scheme: Scheme, w: &Array1<f64>, scores: &[Array1<f64>]) -> f64 {
    match scheme {
        Scheme::Sum => {
            let mut total = 0.0;
            for i in 0..scores.len() {
                for j in i + 1..scores.len() {
                    total += neg_weighted_inner(w.view(), scores[i].view(), scores[j].view());
                }
            }
            total
        }
        Scheme::Product => neg_weighted_inner(
            w.view(),
            scores[0].view(),
            partner_product(scores, 0).view(),
        ),
    }
}

/// Objective of either scheme at the given state.
pub fn objective(scheme: Scheme, state: &MultiViewState<'_>) -> f64 {
    scheme_objective(scheme, &state.w, &state.scores())
}

fn view_step(config: &SolverConfig, i: usize) -> f64 {
    if i == 0 {
        config.l_u
    } else {
        config.l_v
    }
}

fn run(
    views: &[ArrayView2<'_, f64>],
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
    scheme: Scheme,
    restart: usize,
    observer: &mut SweepObserver<'_>,
) -> Result<MwsplsSolution> {
    let n = views[0].nrows();
    let mut rng = restart_rng(config.seed, restart);
    let mut us: Vec<Array1<f64>> = views
        .iter()
        .map(|x| random_unit(&mut rng, x.ncols()))
        .collect();
    let mut w = Array1::<f64>::ones(n);
    let mut scores: Vec<Array1<f64>> = views.iter().zip(&us).map(|(x, u)| x.dot(u)).collect();

    let mut trace: Vec<f64> = Vec::with_capacity(config.max_iter);
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        for i in 0..views.len() {
            let partner = match scheme {
                Scheme::Sum => partner_sum(&scores, i),
                Scheme::Product => partner_product(&scores, i),
            };
            let g = weighted_back_projection(views[i], w.view(), partner.view());
            us[i] = factor_step(us[i].view(), &g, view_step(config, i), budgets[i], "u_i")?;
            scores[i] = views[i].dot(&us[i]);
        }
        if config.update_weights {
            let g = match scheme {
                Scheme::Sum => sum_weight_gradient(&scores),
                Scheme::Product => product_weight_gradient(&scores),
            };
            w = weight_step(w.view(), &g, config.l_w, k_w, WeightRule::Box)?;
        }
        let obj = scheme_objective(scheme, &w, &scores);
        let rel = trace.last().map(|prev| relative_change(obj, *prev));
        trace.push(obj);
        iterations = t;
        observer(t, &us, &w, obj);
        if rel.is_some_and(|r| r < config.tol) {
            converged = true;
            break;
        }
    }

    let k_w = if config.update_weights { k_w } else { n };
    Ok(MwsplsSolution {
        us: us
            .into_iter()
            .zip(budgets)
            .map(|(values, &budget)| FactorVector { values, budget })
            .collect(),
        w: WeightVector {
            values: w,
            budget: k_w,
        },
        objective_trace: trace,
        converged,
        iterations,
        restart_index: restart,
        scheme,
    })
}

fn validate(
    data: &MultiViewData,
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
) -> Result<()> {
    config.validate_common()?;
    if budgets.len() != data.n_views() {
        return Err(Error::DimensionMismatch(format!(
            "{} budgets for {} views",
            budgets.len(),
            data.n_views()
        )));
    }
    for (k, x) in budgets.iter().zip(data.views()) {
        check_budget(*k, x.ncols())?;
    }
    if config.update_weights {
        check_budget(k_w, data.n_samples())?;
    }
    Ok(())
}

/// One run from restart `restart`, reporting `(iteration, us, w, objective)`
/// after every sweep.
pub fn run_single(
    data: &MultiViewData,
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
    scheme: Scheme,
    restart: usize,
    observer: &mut SweepObserver<'_>,
) -> Result<MwsplsSolution> {
    validate(data, budgets, k_w, config)?;
    run(
        &data.arrays(),
        budgets,
        k_w,
        config,
        scheme,
        restart,
        observer,
    )
}

pub fn fit_scheme(
    data: &MultiViewData,
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
    scheme: Scheme,
) -> Result<MwsplsSolution> {
    validate(data, budgets, k_w, config)?;
    let views = data.arrays();
    let runs: Vec<Result<MwsplsSolution>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            run(
                &views,
                budgets,
                k_w,
                config,
                scheme,
                r,
                &mut |_, _, _, _| {},
            )
        })
        .collect();
    best_of(runs, MwsplsSolution::objective)
}

/// Sum-coupled multi-view fit.
pub fn fit_sum(
    data: &MultiViewData,
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
) -> Result<MwsplsSolution> {
    fit_scheme(data, budgets, k_w, config, Scheme::Sum)
}

/// Product-coupled multi-view fit.
pub fn fit_prod(
    data: &MultiViewData,
    budgets: &[usize],
    k_w: usize,
    config: &SolverConfig,
) -> Result<MwsplsSolution> {
    fit_scheme(data, budgets, k_w, config, Scheme::Product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{standardize_columns, RawMatrix};
    use crate::wspls::{grad_u, grad_v, grad_w};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_views(rng: &mut ChaCha8Rng, n: usize, dims: &[usize]) -> MultiViewData {
        let views = dims
            .iter()
            .map(|&p| {
                let a = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
                standardize_columns(&RawMatrix::new(a).unwrap()).unwrap()
            })
            .collect();
        MultiViewData::new(views).unwrap()
    }

    fn random_state<'a>(rng: &mut ChaCha8Rng, data: &'a MultiViewData) -> MultiViewState<'a> {
        let us = data
            .views()
            .iter()
            .map(|x| Array1::from_shape_fn(x.ncols(), |_| rng.random::<f64>() - 0.5))
            .collect();
        let w = Array1::from_shape_fn(data.n_samples(), |_| rng.random::<f64>());
        MultiViewState::new(data, us, w).unwrap()
    }

    #[test]
    fn two_views_reduce_to_pairwise_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let data = random_views(&mut rng, 9, &[4, 5]);
        let s = random_state(&mut rng, &data);
        let (x, y) = (data.views()[0].view(), data.views()[1].view());
        let (u, v, w) = (s.us[0].view(), s.us[1].view(), s.w.view());
        let gu = grad_u(u, v, w, x, y).unwrap();
        let gv = grad_v(u, v, w, x, y).unwrap();
        let gw = grad_w(u, v, w, x, y).unwrap();
        assert_eq!(grad_sum_u(0, &s).unwrap(), gu);
        assert_eq!(grad_sum_u(1, &s).unwrap(), gv);
        assert_eq!(grad_sum_w(&s), gw);
        assert_eq!(grad_prod_u(0, &s).unwrap(), gu);
        assert_eq!(grad_prod_u(1, &s).unwrap(), gv);
        assert_eq!(grad_prod_w(&s), gw);
    }

    #[test]
    fn zero_weights_zero_u_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let data = random_views(&mut rng, 8, &[3, 4, 5]);
        let mut s = random_state(&mut rng, &data);
        s.w.fill(0.0);
        for i in 0..3 {
            assert!(grad_sum_u(i, &s).unwrap().iter().all(|g| *g == 0.0));
            assert!(grad_prod_u(i, &s).unwrap().iter().all(|g| *g == 0.0));
        }
    }

    #[test]
    fn vanishing_view_zeroes_product_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let data = random_views(&mut rng, 8, &[3, 4, 5]);
        let mut s = random_state(&mut rng, &data);
        s.us[2].fill(0.0);
        assert!(grad_prod_u(0, &s).unwrap().iter().all(|g| *g == 0.0));
        assert!(grad_prod_u(1, &s).unwrap().iter().all(|g| *g == 0.0));
    }

    #[test]
    fn finite_differences_three_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let h = 1e-6;
        let data = random_views(&mut rng, 10, &[3, 4, 2]);
        let s = random_state(&mut rng, &data);
        for scheme in [Scheme::Sum, Scheme::Product] {
            for i in 0..3 {
                let g = match scheme {
                    Scheme::Sum => grad_sum_u(i, &s).unwrap(),
                    Scheme::Product => grad_prod_u(i, &s).unwrap(),
                };
                for c in 0..s.us[i].len() {
                    let (mut plus, mut minus) = (s.clone(), s.clone());
                    plus.us[i][c] += h;
                    minus.us[i][c] -= h;
                    let fd = (objective(scheme, &plus) - objective(scheme, &minus)) / (2.0 * h);
                    assert!((fd - g[c]).abs() <= 1e-5 * g[c].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn bad_view_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let data = random_views(&mut rng, 6, &[2, 2]);
        let s = random_state(&mut rng, &data);
        assert!(grad_sum_u(2, &s).is_err());
    }

    #[test]
    fn needs_two_views() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let data = random_views(&mut rng, 6, &[2, 2]);
        let one = vec![data.views()[0].clone()];
        assert!(MultiViewData::new(one).is_err());
    }

    #[test]
    fn traces_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let data = random_views(&mut rng, 20, &[6, 7, 5]);
        let cfg = SolverConfig::new(1, 1, 1).with_max_iter(50);
        for scheme in [Scheme::Sum, Scheme::Product] {
            let sol = fit_scheme(&data, &[3, 3, 2], 8, &cfg, scheme).unwrap();
            for pair in sol.objective_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9);
            }
            assert!(sol.w.nnz() <= 8);
        }
    }
}
