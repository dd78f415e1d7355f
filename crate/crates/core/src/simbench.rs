//! Synthetic rank-one-plus-noise data, support-recovery metrics and the
//! repeated-run benchmark comparing all methods.
//!
//! Data follow `X = w u^T + g1 E1`, `Y = w v^T + g2 E2` with standard normal
//! noise and the noise scale chosen so that `||w u^T||_F^2 / (g^2 n p)`
//! equals the requested signal-to-noise ratio.

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{calibrate_c, l0_spls, pls_rank1, pmd_spls};
use crate::error::{Error, Result};
use crate::matrix::{prepare, Preprocessing, RawMatrix, StandardizedMatrix};
use crate::rng::standard_normal;
use crate::wspls::{fit, fit_l2_variant, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    I,
    II,
    III,
    Custom,
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Scenario::I),
            "ii" | "2" => Ok(Scenario::II),
            "iii" | "3" => Ok(Scenario::III),
            "custom" => Ok(Scenario::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown scenario `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub snr1: f64,
    pub snr2: f64,
    pub seed: u64,
}

pub const DEFAULT_SNR: f64 = 0.1;

impl SimSpec {
    /// Preset dimensions: I = 50 x (80, 100), II = 100 x (800, 1000),
    /// III = 500 x (8000, 10000).
    pub fn preset(scenario: Scenario) -> Result<Self> {
        let (n, p, q) = match scenario {
            Scenario::I => (50, 80, 100),
            Scenario::II => (100, 800, 1000),
            Scenario::III => (500, 8000, 10000),
            Scenario::Custom => {
                return Err(Error::InvalidConfig(
                    "custom scenario needs explicit n, p, q".into(),
                ))
            }
        };
        Ok(SimSpec {
            scenario,
            n,
            p,
            q,
            snr1: DEFAULT_SNR,
            snr2: DEFAULT_SNR,
            seed: 0,
        })
    }

    pub fn custom(n: usize, p: usize, q: usize) -> Self {
        SimSpec {
            scenario: Scenario::Custom,
            n,
            p,
            q,
            snr1: DEFAULT_SNR,
            snr2: DEFAULT_SNR,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_snr(mut self, snr1: f64, snr2: f64) -> Self {
        self.snr1 = snr1;
        self.snr2 = snr2;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 || self.q < 1 {
            return Err(Error::InvalidConfig(format!(
                "need n >= 2 and p, q >= 1, got n={}, p={}, q={}",
                self.n, self.p, self.q
            )));
        }
        for snr in [self.snr1, self.snr2] {
            if !(snr > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "snr must be positive, got {snr}"
                )));
            }
        }
        Ok(())
    }

    /// Sparsity budgets equal to the planted support sizes.
    pub fn budgets(&self) -> Budgets {
        Budgets {
            k_u: 2 * half_count(self.p, self.p / 8),
            k_v: 2 * half_count(self.q, (0.15 * self.q as f64).round() as usize),
            k_w: (self.n / 2).max(1),
        }
        .clamped(self.n, self.p, self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub k_u: usize,
    pub k_v: usize,
    pub k_w: usize,
}

impl Budgets {
    fn clamped(self, n: usize, p: usize, q: usize) -> Self {
        Budgets {
            k_u: self.k_u.min(p),
            k_v: self.k_v.min(q),
            k_w: self.k_w.min(n),
        }
    }
}

fn half_count(len: usize, raw: usize) -> usize {
    raw.max(1).min(len.div_ceil(2))
}

/// Planted sign patterns: entries in `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub w: Array1<f64>,
}

/// `half` ones, then up to `half` minus-ones, then zeros.
pub fn sign_pattern(len: usize, half: usize) -> Array1<f64> {
    let plus = half.min(len);
    let minus = half.min(len - plus);
    Array1::from_shape_fn(len, |i| {
        if i < plus {
            1.0
        } else if i < plus + minus {
            -1.0
        } else {
            0.0
        }
    })
}

/// First `k` entries one, the rest zero.
pub fn leading_ones(len: usize, k: usize) -> Array1<f64> {
    Array1::from_shape_fn(len, |i| if i < k { 1.0 } else { 0.0 })
}

/// Planted patterns for the simulation dimensions. For the presets these are
/// I: u 10/10, v 15/15, w 25; II: 100/100, 150/150, 50;
/// III: 1000/1000, 1500/1500, 250. Custom sizes scale the same way
/// (`p/8` and `0.15 q` per sign, `n/2` samples).
pub fn make_truth(spec: &SimSpec) -> PlantedTruth {
    let b = spec.budgets();
    PlantedTruth {
        u: sign_pattern(spec.p, b.k_u.div_ceil(2)),
        v: sign_pattern(spec.q, b.k_v.div_ceil(2)),
        w: leading_ones(spec.n, b.k_w),
    }
}

/// Noise scale `g = sqrt(||w||^2 ||u||^2 / (snr n p))`.
pub fn gamma_for_snr(
    w: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    snr: f64,
    n: usize,
    p: usize,
) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "snr must be positive, got {snr}"
        )));
    }
    let energy = w.dot(&w) * u.dot(&u);
    if !(energy > 0.0) {
        return Err(Error::ZeroSignal);
    }
    Ok((energy / (snr * n as f64 * p as f64)).sqrt())
}

/// `||w u^T||_F^2 / (g^2 n p)`, the ratio that [`gamma_for_snr`] inverts.
pub fn snr_for_gamma(
    w: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    gamma: f64,
    n: usize,
    p: usize,
) -> f64 {
    w.dot(&w) * u.dot(&u) / (gamma * gamma * n as f64 * p as f64)
}

/// `||w u^T||_F^2 / ||X - w u^T||_F^2` for a generated matrix.
pub fn empirical_snr(
    x: ArrayView2<'_, f64>,
    w: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
) -> f64 {
    let mut noise = 0.0;
    for ((i, j), xij) in x.indexed_iter() {
        let e = xij - w[i] * u[j];
        noise += e * e;
    }
    w.dot(&w) * u.dot(&u) / noise
}

/// `w u^T + gamma E` with `E` drawn row by row from `rng`.
pub fn rank_one_plus_noise(
    rng: &mut ChaCha8Rng,
    w: ArrayView1<'_, f64>,
    u: ArrayView1<'_, f64>,
    gamma: f64,
) -> Array2<f64> {
    let (n, p) = (w.len(), u.len());
    let noise = standard_normal(rng, n * p);
    Array2::from_shape_fn((n, p), |(i, j)| w[i] * u[j] + gamma * noise[i * p + j])
}

#[derive(Debug, Clone)]
pub struct SimulatedPair {
    pub x: RawMatrix,
    pub y: RawMatrix,
    pub truth: PlantedTruth,
}

/// Draws `X` then `Y` from one ChaCha8 stream seeded with `spec.seed`.
pub fn simulate_pair(spec: &SimSpec) -> Result<SimulatedPair> {
    spec.validate()?;
    let truth = make_truth(spec);
    let g1 = gamma_for_snr(truth.w.view(), truth.u.view(), spec.snr1, spec.n, spec.p)?;
    let g2 = gamma_for_snr(truth.w.view(), truth.v.view(), spec.snr2, spec.n, spec.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = rank_one_plus_noise(&mut rng, truth.w.view(), truth.u.view(), g1);
    let y = rank_one_plus_noise(&mut rng, truth.w.view(), truth.v.view(), g2);
    Ok(SimulatedPair {
        x: RawMatrix::new(x)?,
        y: RawMatrix::new(y)?,
        truth,
    })
}

/// Planted multi-view data `X_i = w u_i^T + g_i E_i`.
#[derive(Debug, Clone)]
pub struct SimulatedViews {
    pub views: Vec<RawMatrix>,
    pub loadings: Vec<Array1<f64>>,
    pub w: Array1<f64>,
}

/// `n` samples, one view per entry of `dims`; each loading has `d/8`
/// (at least 1) entries of each sign and the first `k_w` samples carry the
/// signal.
pub fn simulate_views(
    n: usize,
    dims: &[usize],
    k_w: usize,
    snr: f64,
    seed: u64,
) -> Result<SimulatedViews> {
    if dims.len() < 2 || n < 2 || k_w == 0 || k_w > n {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 views, n >= 2 and 1 <= k_w <= n (got {} views, n={n}, k_w={k_w})",
            dims.len()
        )));
    }
    let w = leading_ones(n, k_w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut views = Vec::with_capacity(dims.len());
    let mut loadings = Vec::with_capacity(dims.len());
    for &d in dims {
        let u = sign_pattern(d, half_count(d, d / 8));
        let g = gamma_for_snr(w.view(), u.view(), snr, n, d)?;
        views.push(RawMatrix::new(rank_one_plus_noise(
            &mut rng,
            w.view(),
            u.view(),
            g,
        ))?);
        loadings.push(u);
    }
    Ok(SimulatedViews { views, loadings, w })
}

/// Pair data holding several co-modules on disjoint samples and features.
#[derive(Debug, Clone)]
pub struct SimulatedBlocks {
    pub x: RawMatrix,
    pub y: RawMatrix,
    /// One planted pattern per block.
    pub blocks: Vec<PlantedTruth>,
}

/// `blocks` planted rank-one blocks: block `b` occupies samples
/// `b*samples..(b+1)*samples`, `X` columns `b*features_x..` and `Y` columns
/// `b*features_y..`; every remaining entry is noise. The noise scale gives
/// each block signal-to-noise ratio `snr`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_blocks(
    n: usize,
    p: usize,
    q: usize,
    blocks: usize,
    samples: usize,
    features_x: usize,
    features_y: usize,
    snr: f64,
    seed: u64,
) -> Result<SimulatedBlocks> {
    if blocks == 0
        || samples == 0
        || features_x == 0
        || features_y == 0
        || blocks * samples > n
        || blocks * features_x > p
        || blocks * features_y > q
    {
        return Err(Error::InvalidConfig(
            "blocks do not fit in the requested dimensions".into(),
        ));
    }
    let block = |len: usize, size: usize, b: usize| {
        Array1::from_shape_fn(len, |i| if i / size == b { 1.0 } else { 0.0 })
    };
    let truths: Vec<PlantedTruth> = (0..blocks)
        .map(|b| PlantedTruth {
            u: block(p, features_x, b),
            v: block(q, features_y, b),
            w: block(n, samples, b),
        })
        .collect();
    let g1 = gamma_for_snr(truths[0].w.view(), truths[0].u.view(), snr, n, p)?;
    let g2 = gamma_for_snr(truths[0].w.view(), truths[0].v.view(), snr, n, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = rank_one_plus_noise(
        &mut rng,
        Array1::zeros(n).view(),
        Array1::zeros(p).view(),
        g1,
    );
    let mut y = rank_one_plus_noise(
        &mut rng,
        Array1::zeros(n).view(),
        Array1::zeros(q).view(),
        g2,
    );
    for t in &truths {
        for ((i, j), e) in x.indexed_iter_mut() {
            *e += t.w[i] * t.u[j];
        }
        for ((i, j), e) in y.indexed_iter_mut() {
            *e += t.w[i] * t.v[j];
        }
    }
    Ok(SimulatedBlocks {
        x: RawMatrix::new(x)?,
        y: RawMatrix::new(y)?,
        blocks: truths,
    })
}

/// Views sharing one co-varying module.
#[derive(Debug, Clone)]
pub struct SimulatedModule {
    pub views: Vec<RawMatrix>,
    /// Planted sample indices (sorted).
    pub samples: Vec<usize>,
    /// Planted feature indices per view (sorted).
    pub features: Vec<Vec<usize>>,
}

/// Standard normal views with one planted module: on the first `samples`
/// rows, the first `features` columns of every view equal
/// `strength * z_j + noise` for a shared latent `z_j ~ N(0, 1)`, so any two
/// planted features correlate at about `strength^2 / (strength^2 + 1)`.
pub fn simulate_module(
    n: usize,
    dims: &[usize],
    samples: usize,
    features: usize,
    strength: f64,
    seed: u64,
) -> Result<SimulatedModule> {
    if dims.len() < 2
        || samples < 3
        || samples > n
        || dims.iter().any(|&d| features == 0 || features > d)
    {
        return Err(Error::InvalidConfig(
            "module needs at least 2 views, 3 <= samples <= n and 1 <= features <= every view width".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = standard_normal(&mut rng, samples);
    let views = dims
        .iter()
        .map(|&d| {
            let mut x = Array2::from_shape_vec((n, d), standard_normal(&mut rng, n * d).to_vec())
                .expect("shape matches length");
            for j in 0..samples {
                for f in 0..features {
                    x[[j, f]] += strength * z[j];
                }
            }
            RawMatrix::new(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedModule {
        views,
        samples: (0..samples).collect(),
        features: vec![(0..features).collect(); dims.len()],
    })
}

/// Confusion counts for one support pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    /// Planted nonzeros.
    pub positives: usize,
    /// Planted zeros.
    pub negatives: usize,
}

impl Confusion {
    pub fn of(truth: ArrayView1<'_, f64>, estimate: ArrayView1<'_, f64>) -> Result<Self> {
        if truth.len() != estimate.len() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: estimate.len(),
            });
        }
        let mut c = Confusion::default();
        for (t, e) in truth.iter().zip(estimate.iter()) {
            match (*t != 0.0, *e != 0.0) {
                (true, hit) => {
                    c.positives += 1;
                    c.tp += usize::from(hit);
                }
                (false, hit) => {
                    c.negatives += 1;
                    c.tn += usize::from(!hit);
                }
            }
        }
        Ok(c)
    }

    fn pooled(parts: &[Confusion]) -> Self {
        parts.iter().fold(Confusion::default(), |a, c| Confusion {
            tp: a.tp + c.tp,
            tn: a.tn + c.tn,
            positives: a.positives + c.positives,
            negatives: a.negatives + c.negatives,
        })
    }

    /// `TP / P`; 1 when nothing is planted.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.positives)
    }

    /// `TN / N`; 1 when there are no planted zeros.
    pub fn tnr(&self) -> f64 {
        ratio(self.tn, self.negatives)
    }

    pub fn acc(&self) -> f64 {
        ratio(self.tp + self.tn, self.positives + self.negatives)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    pub tpr: f64,
    pub tnr: f64,
    pub acc: f64,
    pub counts: Confusion,
}

impl From<Confusion> for TargetMetrics {
    fn from(c: Confusion) -> Self {
        TargetMetrics {
            tpr: c.tpr(),
            tnr: c.tnr(),
            acc: c.acc(),
            counts: c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub u: TargetMetrics,
    pub v: TargetMetrics,
    pub w: TargetMetrics,
    /// Pooled counts of `u`, `v` and `w`.
    pub all: TargetMetrics,
    pub runtime_seconds: f64,
}

/// Column names of [`MetricsReport::values`].
pub const METRIC_NAMES: [&str; 13] = [
    "tpr_u",
    "tnr_u",
    "acc_u",
    "tpr_v",
    "tnr_v",
    "acc_v",
    "tpr_w",
    "tnr_w",
    "acc_w",
    "tpr_all",
    "tnr_all",
    "acc_all",
    "runtime_seconds",
];

impl MetricsReport {
    pub fn values(&self) -> [f64; 13] {
        let t = [self.u, self.v, self.w, self.all];
        let mut out = [0.0; 13];
        for (i, m) in t.iter().enumerate() {
            out[3 * i] = m.tpr;
            out[3 * i + 1] = m.tnr;
            out[3 * i + 2] = m.acc;
        }
        out[12] = self.runtime_seconds;
        out
    }
}

/// Estimated loadings and, for weighted methods, sample weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    /// `None` for methods without sample weights; scored as all-ones.
    pub w: Option<Array1<f64>>,
}

/// Support recovery of `estimate` against `truth`; `runtime_seconds` is 0.
pub fn score(estimate: &Estimate, truth: &PlantedTruth) -> Result<MetricsReport> {
    let ones;
    let w = match &estimate.w {
        Some(w) => w.view(),
        None => {
            ones = Array1::ones(truth.w.len());
            ones.view()
        }
    };
    let cu = Confusion::of(truth.u.view(), estimate.u.view())?;
    let cv = Confusion::of(truth.v.view(), estimate.v.view())?;
    let cw = Confusion::of(truth.w.view(), w)?;
    Ok(MetricsReport {
        u: cu.into(),
        v: cv.into(),
        w: cw.into(),
        all: Confusion::pooled(&[cu, cv, cw]).into(),
        runtime_seconds: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "pls")]
    Pls,
    #[serde(rename = "pmd")]
    Pmd,
    #[serde(rename = "l0spls")]
    L0Spls,
    #[serde(rename = "l2l0")]
    L2L0,
    #[serde(rename = "wspls")]
    Wspls,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Pls,
        Method::Pmd,
        Method::L0Spls,
        Method::L2L0,
        Method::Wspls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pls => "pls",
            Method::Pmd => "pmd",
            Method::L0Spls => "l0spls",
            Method::L2L0 => "l2l0",
            Method::Wspls => "wspls",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

/// Fits `method` with the budgets in `config`; returns the estimate and the
/// wall-clock seconds of the fit. PMD bounds are calibrated to the `k_u` /
/// `k_v` nonzero counts first (falling back to the nearest pair when the
/// counts cannot be matched); calibration is not timed.
pub fn fit_method(
    method: Method,
    x: &StandardizedMatrix,
    y: &StandardizedMatrix,
    config: &SolverConfig,
) -> Result<(Estimate, f64)> {
    let (c1, c2) = if method == Method::Pmd {
        match calibrate_c(x, y, config.k_u, config.k_v, config) {
            Ok(c) => (c.c1, c.c2),
            Err(Error::CannotMatch { c1, c2, .. }) => (c1, c2),
            Err(e) => return Err(e),
        }
    } else {
        (0.0, 0.0)
    };
    let start = Instant::now();
    let estimate = match method {
        Method::Pls => {
            let s = pls_rank1(x, y, config.max_iter, config.tol, config.seed)?;
            Estimate {
                u: s.u.values,
                v: s.v.values,
                w: None,
            }
        }
        Method::Pmd => {
            let s = pmd_spls(x, y, c1, c2, config)?;
            Estimate {
                u: s.u.values,
                v: s.v.values,
                w: None,
            }
        }
        Method::L0Spls => {
            let s = l0_spls(x, y, config.k_u, config.k_v, config)?;
            Estimate {
                u: s.u.values,
                v: s.v.values,
                w: None,
            }
        }
        Method::L2L0 | Method::Wspls => {
            let s = if method == Method::Wspls {
                fit(x, y, config)?
            } else {
                fit_l2_variant(x, y, config)?
            };
            Estimate {
                u: s.u.values,
                v: s.v.values,
                w: Some(s.w.values),
            }
        }
    };
    Ok((estimate, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    /// Means in [`METRIC_NAMES`] order.
    pub mean: Vec<f64>,
    /// Sample standard deviations in [`METRIC_NAMES`] order.
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub spec: SimSpec,
    pub budgets: Budgets,
    pub preprocessing: Preprocessing,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<MethodSummary>,
}

/// Mean and sample standard deviation (divisor `len - 1`) per column.
pub fn aggregate(rows: &[[f64; 13]]) -> (Vec<f64>, Vec<f64>) {
    let k = rows.len() as f64;
    let mean: Vec<f64> = (0..13)
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / k)
        .collect();
    let std: Vec<f64> = (0..13)
        .map(|c| {
            let ss: f64 = rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum();
            if rows.len() > 1 {
                (ss / (k - 1.0)).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    (mean, std)
}

/// Runs every method on `runs` fresh data sets (run `r` uses seed
/// `spec.seed + r` for the data and the solvers) with the planted-support
/// budgets, and aggregates the metrics per method.
///
/// `base` supplies the solver settings; its budgets and seed are replaced.
/// Generated matrices are passed through `preprocessing` before fitting;
/// [`Preprocessing::Identity`] keeps the planted sample structure intact.
pub fn run_benchmark(
    spec: &SimSpec,
    methods: &[Method],
    runs: usize,
    base: &SolverConfig,
    preprocessing: Preprocessing,
) -> Result<BenchmarkReport> {
    if runs < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 runs, got {runs}"
        )));
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods requested".into()));
    }
    let budgets = spec.budgets();
    let mut records = Vec::with_capacity(runs * methods.len());
    for run in 0..runs {
        let seed = spec.seed.wrapping_add(run as u64);
        let data = simulate_pair(&spec.clone().with_seed(seed))?;
        let x = prepare(&data.x, preprocessing)?;
        let y = prepare(&data.y, preprocessing)?;
        let config = SolverConfig {
            k_u: budgets.k_u,
            k_v: budgets.k_v,
            k_w: budgets.k_w,
            seed,
            ..base.clone()
        };
        for &method in methods {
            let (estimate, seconds) = fit_method(method, &x, &y, &config)?;
            let mut metrics = score(&estimate, &data.truth)?;
            metrics.runtime_seconds = seconds;
            records.push(RunRecord {
                method,
                run,
                seed,
                metrics,
            });
        }
    }
    let summary = summarize(methods, &records);
    Ok(BenchmarkReport {
        spec: spec.clone(),
        budgets,
        preprocessing,
        runs: records,
        summary,
    })
}

/// Per-method mean and sample standard deviation of run records.
pub fn summarize(methods: &[Method], records: &[RunRecord]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rows: Vec<[f64; 13]> = records
                .iter()
                .filter(|r| r.method == method)
                .map(|r| r.metrics.values())
                .collect();
            let (mean, std) = aggregate(&rows);
            MethodSummary { method, mean, std }
        })
        .collect()
}

impl BenchmarkReport {
    pub fn summary_for(&self, method: Method) -> Option<&MethodSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

impl MethodSummary {
    pub fn mean_of(&self, metric: &str) -> Option<f64> {
        METRIC_NAMES
            .iter()
            .position(|m| *m == metric)
            .map(|i| self.mean[i])
    }

    pub fn std_of(&self, metric: &str) -> Option<f64> {
        METRIC_NAMES
            .iter()
            .position(|m| *m == metric)
            .map(|i| self.std[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn preset_truth_counts() {
        let count = |a: &Array1<f64>, s: f64| a.iter().filter(|x| **x == s).count();
        let t = make_truth(&SimSpec::preset(Scenario::I).unwrap());
        assert_eq!((count(&t.u, 1.0), count(&t.u, -1.0)), (10, 10));
        assert_eq!((count(&t.v, 1.0), count(&t.v, -1.0)), (15, 15));
        assert_eq!(count(&t.w, 1.0), 25);
        assert_eq!(t.u[9], 1.0);
        assert_eq!(t.u[10], -1.0);
        let t = make_truth(&SimSpec::preset(Scenario::II).unwrap());
        assert_eq!(
            (count(&t.u, 1.0), count(&t.v, -1.0), count(&t.w, 1.0)),
            (100, 150, 50)
        );
        let t = make_truth(&SimSpec::preset(Scenario::III).unwrap());
        assert_eq!(
            (count(&t.u, -1.0), count(&t.v, 1.0), count(&t.w, 1.0)),
            (1000, 1500, 250)
        );
        assert_eq!(
            SimSpec::preset(Scenario::I).unwrap().budgets(),
            Budgets {
                k_u: 20,
                k_v: 30,
                k_w: 25
            }
        );
    }

    #[test]
    fn tiny_custom_truth_is_valid() {
        let t = make_truth(&SimSpec::custom(2, 1, 1));
        assert_eq!(t.u, array![1.0]);
        assert_eq!(t.w, array![1.0, 0.0]);
    }

    #[test]
    fn gamma_scenario_one() {
        let spec = SimSpec::preset(Scenario::I).unwrap();
        let t = make_truth(&spec);
        let g = gamma_for_snr(t.w.view(), t.u.view(), 0.1, 50, 80).unwrap();
        assert!((g - 1.25f64.sqrt()).abs() < 1e-15);
        assert!((snr_for_gamma(t.w.view(), t.u.view(), g, 50, 80) - 0.1).abs() < 1e-12);
        let zero = Array1::zeros(50);
        assert!(matches!(
            gamma_for_snr(zero.view(), t.u.view(), 0.1, 50, 80),
            Err(Error::ZeroSignal)
        ));
    }

    #[test]
    fn noiseless_limit_and_determinism() {
        let spec = SimSpec::custom(10, 4, 5).with_snr(1e16, 1e16).with_seed(3);
        let a = simulate_pair(&spec).unwrap();
        for ((i, j), x) in a.x.view().indexed_iter() {
            assert!((x - a.truth.w[i] * a.truth.u[j]).abs() < 1e-6);
        }
        let b = simulate_pair(&spec).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn hand_counted_confusion() {
        let truth = array![0.0, 1.0, 1.0, 0.0];
        let est = array![0.0, 0.3, 0.0, -2.0];
        let c = Confusion::of(truth.view(), est.view()).unwrap();
        assert_eq!((c.tpr(), c.tnr(), c.acc()), (0.5, 0.5, 0.5));
        assert!(Confusion::of(truth.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn all_ones_weight_scores() {
        let spec = SimSpec::preset(Scenario::I).unwrap();
        let t = make_truth(&spec);
        let est = Estimate {
            u: t.u.clone(),
            v: t.v.clone(),
            w: None,
        };
        let m = score(&est, &t).unwrap();
        assert_eq!((m.w.tpr, m.w.tnr, m.w.acc), (1.0, 0.0, 0.5));
        assert_eq!((m.u.acc, m.v.acc), (1.0, 1.0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("foo".parse::<Method>().is_err());
    }

    #[test]
    fn aggregate_sample_std() {
        let mut a = [0.0; 13];
        let mut b = [0.0; 13];
        a[0] = 1.0;
        b[0] = 3.0;
        let (mean, std) = aggregate(&[a, b]);
        assert_eq!(mean[0], 2.0);
        assert!((std[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn blocks_are_disjoint() {
        let d = simulate_blocks(30, 12, 15, 3, 8, 4, 5, 1.0, 2).unwrap();
        assert_eq!(d.blocks.len(), 3);
        for (a, ta) in d.blocks.iter().enumerate() {
            for tb in &d.blocks[a + 1..] {
                assert_eq!(ta.w.dot(&tb.w), 0.0);
                assert_eq!(ta.u.dot(&tb.u), 0.0);
            }
        }
        assert!(simulate_blocks(10, 12, 15, 3, 8, 4, 5, 1.0, 2).is_err());
    }
}
