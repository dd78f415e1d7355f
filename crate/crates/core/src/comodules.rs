//! Co-modules: a sample subset together with one feature subset per view.
//!
//! Covers turning a solver's supports into a module, extracting several
//! modules in sequence by deleting the samples of each one and refitting,
//! scoring a module by its mean absolute cross-view correlation (the
//! S-score), and testing that score against random modules of the same size.

use ndarray::{Array1, ArrayView2};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::PairSolution;
use crate::error::{Error, Result};
use crate::matrix::{constant_columns, standardize_columns, RawMatrix};
use crate::mwspls::MwsplsSolution;
use crate::rng::restart_rng;
use crate::stats::support;
use crate::wspls::{fit, SolverConfig, WsplsSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoModule {
    /// Sorted, duplicate-free row indices.
    pub sample_indices: Vec<usize>,
    /// One sorted, duplicate-free column index set per view.
    pub feature_indices: Vec<Vec<usize>>,
    /// Mean absolute cross-view correlation, once computed.
    pub s_score: Option<f64>,
    /// Name of the method that produced the module.
    pub source: String,
}

/// A fitted model whose supports define a co-module.
pub trait Selection {
    /// Rows with positive weight.
    fn selected_samples(&self) -> Vec<usize>;
    /// Loading vector per view.
    fn loadings(&self) -> Vec<Array1<f64>>;
    fn source(&self) -> &'static str;
}

impl Selection for WsplsSolution {
    fn selected_samples(&self) -> Vec<usize> {
        self.w.selected()
    }

    fn loadings(&self) -> Vec<Array1<f64>> {
        vec![self.u.values.clone(), self.v.values.clone()]
    }

    fn source(&self) -> &'static str {
        "wspls"
    }
}

impl Selection for MwsplsSolution {
    fn selected_samples(&self) -> Vec<usize> {
        self.w.selected()
    }

    fn loadings(&self) -> Vec<Array1<f64>> {
        self.us.iter().map(|u| u.values.clone()).collect()
    }

    fn source(&self) -> &'static str {
        match self.scheme {
            crate::mwspls::Scheme::Sum => "mwspls_sum",
            crate::mwspls::Scheme::Product => "mwspls_product",
        }
    }
}

/// Sample set `{j : w_j > 0}` and the support of every loading vector.
pub fn assemble(solution: &impl Selection) -> Result<CoModule> {
    let samples = solution.selected_samples();
    if samples.is_empty() {
        return Err(Error::EmptySelection("w"));
    }
    let features: Vec<Vec<usize>> = solution
        .loadings()
        .iter()
        .map(|u| support(u.view()))
        .collect();
    if features.iter().any(Vec::is_empty) {
        return Err(Error::EmptySelection("loadings"));
    }
    Ok(CoModule {
        sample_indices: samples,
        feature_indices: features,
        s_score: None,
        source: solution.source().to_string(),
    })
}

/// Module of a method without sample weights: every one of `n_samples` rows
/// is selected.
pub fn assemble_unweighted(solution: &PairSolution, n_samples: usize) -> Result<CoModule> {
    let u = solution.u.support();
    let v = solution.v.support();
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptySelection("loadings"));
    }
    if n_samples == 0 {
        return Err(Error::EmptySelection("w"));
    }
    let source = serde_json::to_value(solution.method)?
        .as_str()
        .unwrap_or("unweighted")
        .to_string();
    Ok(CoModule {
        sample_indices: (0..n_samples).collect(),
        feature_indices: vec![u, v],
        s_score: None,
        source,
    })
}

/// A column removed before some round because it was constant on the
/// remaining samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub round: usize,
    pub view: usize,
    /// Column index in the original matrix.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialExtraction {
    pub modules: Vec<CoModule>,
    pub dropped_columns: Vec<DroppedColumn>,
}

fn drop_constant(
    m: &RawMatrix,
    rows: &[usize],
    cols: &mut Vec<usize>,
    round: usize,
    view: usize,
    dropped: &mut Vec<DroppedColumn>,
) -> Result<RawMatrix> {
    let sub = m.select_rows(rows)?.select_cols(cols)?;
    let constant = constant_columns(&sub);
    if constant.is_empty() {
        return Ok(sub);
    }
    for &c in &constant {
        dropped.push(DroppedColumn {
            round,
            view,
            column: cols[c],
        });
    }
    let keep: Vec<usize> = (0..cols.len()).filter(|c| !constant.contains(c)).collect();
    *cols = keep.iter().map(|&c| cols[c]).collect();
    if cols.is_empty() {
        return Err(Error::ConstantColumn(
            dropped.last().map_or(0, |d| d.column),
        ));
    }
    sub.select_cols(&keep)
}

/// Extracts up to `rounds` co-modules with disjoint sample sets.
///
/// Each round standardizes the remaining rows afresh, fits the weighted
/// solver, records the module in original row/column coordinates with its
/// S-score, and deletes the module's samples. Columns that become constant
/// on the remaining rows are dropped from that round on and reported.
///
/// Fails with [`Error::InsufficientSamples`] (carrying the modules found so
/// far) when no more than `k_w` samples remain before a round.
pub fn extract_sequential(
    x: &RawMatrix,
    y: &RawMatrix,
    config: &SolverConfig,
    rounds: usize,
) -> Result<SequentialExtraction> {
    if rounds == 0 {
        return Err(Error::InvalidConfig(
            "at least one round is required".into(),
        ));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let mut rows: Vec<usize> = (0..x.nrows()).collect();
    let mut cols_x: Vec<usize> = (0..x.ncols()).collect();
    let mut cols_y: Vec<usize> = (0..y.ncols()).collect();
    let mut modules = Vec::with_capacity(rounds);
    let mut dropped = Vec::new();
    for round in 0..rounds {
        if rows.len() <= config.k_w {
            return Err(Error::InsufficientSamples {
                round,
                completed: modules,
            });
        }
        let sx = drop_constant(x, &rows, &mut cols_x, round, 0, &mut dropped)?;
        let sy = drop_constant(y, &rows, &mut cols_y, round, 1, &mut dropped)?;
        let sol = fit(
            &standardize_columns(&sx)?,
            &standardize_columns(&sy)?,
            config,
        )?;
        let local = assemble(&sol)?;
        let mut module = CoModule {
            sample_indices: local.sample_indices.iter().map(|&j| rows[j]).collect(),
            feature_indices: vec![
                local.feature_indices[0]
                    .iter()
                    .map(|&c| cols_x[c])
                    .collect(),
                local.feature_indices[1]
                    .iter()
                    .map(|&c| cols_y[c])
                    .collect(),
            ],
            s_score: None,
            source: local.source,
        };
        if module.sample_indices.len() >= 3 {
            module.s_score = Some(s_score(&module, &[x.view(), y.view()])?.value);
        }
        rows.retain(|r| module.sample_indices.binary_search(r).is_err());
        modules.push(module);
    }
    Ok(SequentialExtraction {
        modules,
        dropped_columns: dropped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SScore {
    pub value: f64,
    /// Number of cross-view feature pairs averaged over.
    pub pairs: usize,
    /// Pairs involving a feature that is constant on the sample subset; they
    /// count as zero correlation.
    pub degenerate_pairs: usize,
}

/// Below this relative spread a column is treated as constant on the subset.
const CONSTANT_RTOL: f64 = 1e-12;

/// Centered, unit-norm column restricted to `rows`, or `None` when constant.
fn unit_centered(view: ArrayView2<'_, f64>, rows: &[usize], col: usize) -> Option<Vec<f64>> {
    let vals: Vec<f64> = rows.iter().map(|&r| view[[r, col]]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let mut centered: Vec<f64> = vals.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|c| c * c).sum::<f64>().sqrt();
    let magnitude = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = CONSTANT_RTOL * magnitude.max(f64::MIN_POSITIVE) * (vals.len() as f64).sqrt();
    if !(norm > floor) {
        return None;
    }
    centered.iter_mut().for_each(|c| *c /= norm);
    Some(centered)
}

fn check_module(
    samples: &[usize],
    features: &[Vec<usize>],
    views: &[ArrayView2<'_, f64>],
) -> Result<()> {
    if views.len() < 2 || features.len() != views.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature sets for {} views (need at least 2)",
            features.len(),
            views.len()
        )));
    }
    if samples.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "S-score needs at least 3 samples, module has {}",
            samples.len()
        )));
    }
    let n = views[0].nrows();
    if let Some(v) = views.iter().find(|v| v.nrows() != n) {
        return Err(Error::DimensionMismatch(format!(
            "views have {} and {} rows",
            n,
            v.nrows()
        )));
    }
    let in_bounds = |set: &[usize], len: usize| set.iter().all(|&i| i < len);
    let distinct = |set: &[usize]| {
        let mut s = set.to_vec();
        s.sort_unstable();
        s.windows(2).all(|w| w[0] != w[1])
    };
    if !in_bounds(samples, n) || !distinct(samples) {
        return Err(Error::DimensionMismatch("invalid sample index set".into()));
    }
    for (i, (set, view)) in features.iter().zip(views).enumerate() {
        if set.is_empty() {
            return Err(Error::EmptySelection("features"));
        }
        if !in_bounds(set, view.ncols()) || !distinct(set) {
            return Err(Error::DimensionMismatch(format!(
                "invalid feature index set for view {i}"
            )));
        }
    }
    Ok(())
}

fn score_sets(samples: &[usize], features: &[Vec<usize>], views: &[ArrayView2<'_, f64>]) -> SScore {
    let columns: Vec<Vec<Option<Vec<f64>>>> = features
        .iter()
        .zip(views)
        .map(|(set, view)| {
            set.iter()
                .map(|&c| unit_centered(*view, samples, c))
                .collect()
        })
        .collect();
    let (mut total, mut pairs, mut degenerate) = (0.0, 0usize, 0usize);
    for a in 0..columns.len() {
        for b in a + 1..columns.len() {
            for ca in &columns[a] {
                for cb in &columns[b] {
                    pairs += 1;
                    match (ca, cb) {
                        (Some(ca), Some(cb)) => {
                            let r: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                            total += r.abs().min(1.0);
                        }
                        _ => degenerate += 1,
                    }
                }
            }
        }
    }
    SScore {
        value: total / pairs as f64,
        pairs,
        degenerate_pairs: degenerate,
    }
}

/// Mean absolute Pearson correlation over all cross-view feature pairs of
/// the module, computed on its sample subset. `views` are the full data
/// matrices (raw or standardized; the score does not depend on which).
pub fn s_score(module: &CoModule, views: &[ArrayView2<'_, f64>]) -> Result<SScore> {
    check_module(&module.sample_indices, &module.feature_indices, views)?;
    Ok(score_sets(
        &module.sample_indices,
        &module.feature_indices,
        views,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    pub p_value: f64,
    pub n_perm: usize,
    /// Random modules scoring at least as high as the observed one.
    pub exceed: usize,
    /// S-score of every random module, in draw order.
    pub null_scores: Vec<f64>,
}

/// Compares the module's S-score with `n_perm` random modules of the same
/// shape (sample count and per-view feature counts, drawn uniformly without
/// replacement). `p = (1 + #{null >= observed}) / (n_perm + 1)`.
///
/// Draw `i` uses its own seed stream, so the result does not depend on the
/// number of worker threads.
pub fn permutation_test(
    module: &CoModule,
    views: &[ArrayView2<'_, f64>],
    n_perm: usize,
    seed: u64,
) -> Result<PermutationResult> {
    if n_perm == 0 {
        return Err(Error::InvalidConfig("n_perm must be at least 1".into()));
    }
    let observed = s_score(module, views)?.value;
    let n = views[0].nrows();
    let null_scores: Vec<f64> = (0..n_perm)
        .into_par_iter()
        .map(|draw| {
            let mut rng = restart_rng(seed, draw);
            let samples = sample(&mut rng, n, module.sample_indices.len()).into_vec();
            let features: Vec<Vec<usize>> = module
                .feature_indices
                .iter()
                .zip(views)
                .map(|(set, view)| sample(&mut rng, view.ncols(), set.len()).into_vec())
                .collect();
            score_sets(&samples, &features, views).value
        })
        .collect();
    let exceed = null_scores.iter().filter(|s| **s >= observed).count();
    Ok(PermutationResult {
        observed,
        p_value: (1 + exceed) as f64 / (n_perm + 1) as f64,
        n_perm,
        exceed,
        null_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{pearson, FactorVector, WeightVector};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn module(samples: Vec<usize>, features: Vec<Vec<usize>>) -> CoModule {
        CoModule {
            sample_indices: samples,
            feature_indices: features,
            s_score: None,
            source: "test".into(),
        }
    }

    #[test]
    fn identical_columns_score_one() {
        let a = array![[1.0, 2.0], [2.0, 4.5], [3.0, 5.0], [5.0, 1.0]];
        let b = a.clone();
        let m = module(vec![0, 1, 2, 3], vec![vec![0], vec![0]]);
        let s = s_score(&m, &[a.view(), b.view()]).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
        assert_eq!(s.pairs, 1);
    }

    #[test]
    fn single_pair_is_abs_pearson() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let a = Array2::from_shape_fn((9, 3), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((9, 4), |_| rng.random::<f64>());
        let rows = vec![0, 2, 3, 5, 8];
        let m = module(rows.clone(), vec![vec![1], vec![3]]);
        let s = s_score(&m, &[a.view(), b.view()]).unwrap();
        let xa: Vec<f64> = rows.iter().map(|&r| a[[r, 1]]).collect();
        let xb: Vec<f64> = rows.iter().map(|&r| b[[r, 3]]).collect();
        assert!((s.value - pearson(&xa, &xb).unwrap().abs()).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_counts_as_zero() {
        let a = array![[1.0, 0.1], [2.0, 0.1], [4.0, 0.1], [3.0, 7.0]];
        let b = array![[1.0], [2.0], [4.0], [0.0]];
        let m = module(vec![0, 1, 2], vec![vec![0, 1], vec![0]]);
        let s = s_score(&m, &[a.view(), b.view()]).unwrap();
        assert_eq!((s.pairs, s.degenerate_pairs), (2, 1));
        assert!((s.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn order_invariant_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let views: Vec<Array2<f64>> = (0..3)
            .map(|_| Array2::from_shape_fn((12, 6), |_| rng.random::<f64>()))
            .collect();
        let vs: Vec<_> = views.iter().map(|v| v.view()).collect();
        let a = module(vec![1, 4, 6, 9], vec![vec![0, 3], vec![1, 2, 5], vec![4]]);
        let b = module(vec![9, 6, 1, 4], vec![vec![3, 0], vec![5, 1, 2], vec![4]]);
        let (sa, sb) = (s_score(&a, &vs).unwrap(), s_score(&b, &vs).unwrap());
        assert!((sa.value - sb.value).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&sa.value));
    }

    #[test]
    fn rejects_bad_modules() {
        let a = Array2::from_shape_fn((5, 2), |(i, j)| (i * j) as f64 + i as f64);
        let views = [a.view(), a.view()];
        let two_samples = module(vec![0, 1], vec![vec![0], vec![1]]);
        assert!(s_score(&two_samples, &views).is_err());
        let out_of_range = module(vec![0, 1, 7], vec![vec![0], vec![1]]);
        assert!(matches!(
            s_score(&out_of_range, &views),
            Err(Error::DimensionMismatch(_))
        ));
        let duplicated = module(vec![0, 1, 2], vec![vec![0, 0], vec![1]]);
        assert!(s_score(&duplicated, &views).is_err());
        let ok = module(vec![0, 1, 2], vec![vec![0], vec![1]]);
        assert!(matches!(
            permutation_test(&ok, &views, 0, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn permutation_p_value_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = Array2::from_shape_fn((20, 5), |_| rng.random::<f64>());
        let b = Array2::from_shape_fn((20, 5), |_| rng.random::<f64>());
        let views = [a.view(), b.view()];
        let m = module((0..10).collect(), vec![vec![0, 1], vec![2, 3]]);
        let r1 = permutation_test(&m, &views, 50, 9).unwrap();
        let r2 = permutation_test(&m, &views, 50, 9).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.p_value > 0.0 && r1.p_value <= 1.0);
        let expected =
            (1 + r1.null_scores.iter().filter(|s| **s >= r1.observed).count()) as f64 / 51.0;
        assert_eq!(r1.p_value, expected);
    }

    #[test]
    fn assemble_reads_supports() {
        let sol = WsplsSolution {
            u: FactorVector {
                values: array![0.0, 0.6, 0.0, 0.8],
                budget: 2,
            },
            v: FactorVector {
                values: array![1.0, 0.0],
                budget: 1,
            },
            w: WeightVector {
                values: array![0.0, 1.0, 0.5, 0.0, 1.0],
                budget: 3,
            },
            objective_trace: vec![-1.0],
            converged: true,
            iterations: 1,
            restart_index: 0,
        };
        let m = assemble(&sol).unwrap();
        assert_eq!(m.sample_indices, vec![1, 2, 4]);
        assert_eq!(m.feature_indices, vec![vec![1, 3], vec![0]]);
        let mut empty = sol.clone();
        empty.w.values.fill(0.0);
        assert!(matches!(assemble(&empty), Err(Error::EmptySelection("w"))));
    }
}
