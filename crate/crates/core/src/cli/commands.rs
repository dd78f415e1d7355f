use std::path::{Path, PathBuf};

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::io::{read_json, read_matrix, write_json, write_matrix, write_table};
use super::manifest::RunManifest;
use super::{resolve_kw, resolve_seed, BenchArgs, ExtractArgs, FitArgs, ScoreArgs, SimulateArgs};
use crate::baselines::{calibrate_c, l0_spls, pls_rank1, pmd_spls, PairSolution};
use crate::comodules::{extract_sequential, permutation_test, s_score, CoModule, DroppedColumn};
use crate::error::{Error, Result};
use crate::matrix::{prepare, RawMatrix};
use crate::mwspls::{fit_scheme, MultiViewData, Scheme};
use crate::simbench::{
    run_benchmark, score as score_metrics, simulate_pair, Estimate, MetricsReport, PlantedTruth,
    Scenario, SimSpec, METRIC_NAMES,
};
use crate::stats::support;
use crate::wspls::{fit as fit_wspls, fit_l2_variant, WsplsSolution};

/// Contents of `solution.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub kind: String,
    /// All indices in this file start at this value.
    pub index_base: usize,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// `u` and `v`, or `u_1 .. u_m`.
    pub loadings: Vec<Vec<f64>>,
    pub supports: Vec<Vec<usize>>,
    /// Absent for methods without sample weights (all samples count).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_samples: Option<Vec<usize>>,
    pub n_samples: usize,
    /// Final value of the minimized objective (`-u^T X^T diag(w) Y v` for
    /// weighted methods, `u^T X^T Y v` for the unweighted baselines).
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1_bounds: Option<[f64; 2]>,
    pub manifest: RunManifest,
}

/// Contents of `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub kind: String,
    pub index_base: usize,
    pub spec: SimSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub manifest: RunManifest,
}

/// Contents of `modules.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulesFile {
    pub kind: String,
    pub index_base: usize,
    /// False when extraction stopped early; `failure` says why.
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub n_samples: usize,
    pub modules: Vec<CoModule>,
    pub dropped_columns: Vec<DroppedColumn>,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleScore {
    pub module: usize,
    pub n_samples: usize,
    pub n_features: Vec<usize>,
    pub s_score: f64,
    pub pairs: usize,
    pub degenerate_pairs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_perm: Option<usize>,
}

/// Contents of the `score` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub kind: String,
    pub index_base: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub modules: Vec<ModuleScore>,
    pub manifest: RunManifest,
}

fn spec_from(
    scenario: &str,
    n: Option<usize>,
    p: Option<usize>,
    q: Option<usize>,
    snr: f64,
) -> Result<SimSpec> {
    let scenario: Scenario = scenario.parse()?;
    let mut spec = match scenario {
        Scenario::Custom => match (n, p, q) {
            (Some(n), Some(p), Some(q)) => SimSpec::custom(n, p, q),
            _ => {
                return Err(Error::InvalidConfig(
                    "--scenario custom needs --n, --p and --q".into(),
                ))
            }
        },
        preset => SimSpec::preset(preset)?,
    };
    spec.n = n.unwrap_or(spec.n);
    spec.p = p.unwrap_or(spec.p);
    spec.q = q.unwrap_or(spec.q);
    spec = spec.with_snr(snr, snr);
    spec.validate()?;
    Ok(spec)
}

pub fn simulate(mut args: SimulateArgs) -> Result<()> {
    args.seed = resolve_seed(args.seed)?;
    let mut spec =
        spec_from(&args.scenario, args.n, args.p, args.q, args.snr)?.with_seed(args.seed);
    if let Some(snr2) = args.snr2 {
        spec.snr2 = snr2;
        spec.validate()?;
    }
    let data = simulate_pair(&spec)?;
    let manifest = RunManifest::new("simulate", &args, args.seed, &[])?;
    write_matrix(&args.out.join("X.csv"), &data.x)?;
    write_matrix(&args.out.join("Y.csv"), &data.y)?;
    write_json(
        &args.out.join("truth.json"),
        &TruthFile {
            kind: "truth".into(),
            index_base: 0,
            spec,
            u: data.truth.u.to_vec(),
            v: data.truth.v.to_vec(),
            w: data.truth.w.to_vec(),
            manifest,
        },
    )
}

fn read_views(paths: &[PathBuf]) -> Result<Vec<RawMatrix>> {
    let views: Vec<RawMatrix> = paths
        .iter()
        .map(|p| read_matrix(p))
        .collect::<Result<_>>()?;
    if let Some((i, v)) = views
        .iter()
        .enumerate()
        .find(|(_, v)| v.nrows() != views[0].nrows())
    {
        return Err(Error::DimensionMismatch(format!(
            "{} has {} rows, {} has {}",
            paths[i].display(),
            v.nrows(),
            paths[0].display(),
            views[0].nrows()
        )));
    }
    Ok(views)
}

fn require<T>(value: Option<T>, flag: &str, method: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidConfig(format!("method {method} needs {flag}")))
}

fn paths(list: &[PathBuf]) -> Vec<&Path> {
    list.iter().map(PathBuf::as_path).collect()
}

fn weighted_file(method: &str, s: WsplsSolution, n: usize, manifest: RunManifest) -> SolutionFile {
    SolutionFile {
        kind: "solution".into(),
        index_base: 0,
        method: method.into(),
        scheme: None,
        supports: vec![s.u.support(), s.v.support()],
        loadings: vec![s.u.values.to_vec(), s.v.values.to_vec()],
        selected_samples: Some(s.w.selected()),
        w: Some(s.w.values.to_vec()),
        n_samples: n,
        objective: s.objective(),
        objective_trace: s.objective_trace,
        converged: s.converged,
        iterations: s.iterations,
        restart_index: Some(s.restart_index),
        l1_bounds: None,
        manifest,
    }
}

fn pair_file(
    method: &str,
    s: PairSolution,
    n: usize,
    bounds: Option<[f64; 2]>,
    manifest: RunManifest,
) -> SolutionFile {
    SolutionFile {
        kind: "solution".into(),
        index_base: 0,
        method: method.into(),
        scheme: None,
        supports: vec![s.u.support(), s.v.support()],
        loadings: vec![s.u.values.to_vec(), s.v.values.to_vec()],
        selected_samples: None,
        w: None,
        n_samples: n,
        objective: s.objective,
        objective_trace: s.objective_trace,
        converged: s.converged,
        iterations: s.iterations,
        restart_index: None,
        l1_bounds: bounds,
        manifest,
    }
}

pub fn fit(mut args: FitArgs) -> Result<()> {
    args.solver.resolve()?;
    let method = args.method.trim().to_ascii_lowercase();
    let raw = read_views(&args.data)?;
    let n = raw[0].nrows();
    let views: Vec<_> = raw
        .iter()
        .map(|m| prepare(m, args.preprocess))
        .collect::<Result<_>>()?;
    if method != "mwspls" && views.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "method {method} takes exactly 2 data files, got {}",
            views.len()
        )));
    }
    let manifest = RunManifest::new("fit", &args, args.solver.seed, &paths(&args.data))?;
    let kw = |args: &FitArgs| -> Result<usize> {
        resolve_kw(&require(args.kw.clone(), "--kw", &method)?, n)
    };

    let file = match method.as_str() {
        "wspls" | "l2l0" => {
            let config = args.solver.config(
                require(args.ku, "--ku", &method)?,
                require(args.kv, "--kv", &method)?,
                kw(&args)?,
            )?;
            let sol = if method == "wspls" {
                fit_wspls(&views[0], &views[1], &config)?
            } else {
                fit_l2_variant(&views[0], &views[1], &config)?
            };
            weighted_file(&method, sol, n, manifest)
        }
        "l0spls" => {
            let (ku, kv) = (
                require(args.ku, "--ku", &method)?,
                require(args.kv, "--kv", &method)?,
            );
            let config = args.solver.config(ku, kv, n)?;
            pair_file(
                &method,
                l0_spls(&views[0], &views[1], ku, kv, &config)?,
                n,
                None,
                manifest,
            )
        }
        "pmd" => {
            let config = args.solver.config(1, 1, n)?;
            let (c1, c2) = match (args.c1, args.c2) {
                (Some(c1), Some(c2)) => (c1, c2),
                _ => {
                    let (ku, kv) = (
                        require(args.ku, "--ku", &method)?,
                        require(args.kv, "--kv", &method)?,
                    );
                    let c = calibrate_c(&views[0], &views[1], ku, kv, &config)?;
                    (c.c1, c.c2)
                }
            };
            let sol = pmd_spls(&views[0], &views[1], c1, c2, &config)?;
            pair_file(&method, sol, n, Some([c1, c2]), manifest)
        }
        "pls" => {
            let sol = pls_rank1(
                &views[0],
                &views[1],
                args.solver.max_iter,
                args.solver.tol,
                args.solver.seed,
            )?;
            pair_file(&method, sol, n, None, manifest)
        }
        "mwspls" => {
            if args.k.len() != views.len() {
                return Err(Error::InvalidConfig(format!(
                    "--k needs one budget per view ({} views, {} budgets)",
                    views.len(),
                    args.k.len()
                )));
            }
            let config = args.solver.config(args.k[0], args.k[1], kw(&args)?)?;
            let data = MultiViewData::new(views)?;
            let sol = fit_scheme(&data, &args.k, config.k_w, &config, args.scheme)?;
            SolutionFile {
                kind: "solution".into(),
                index_base: 0,
                method,
                scheme: Some(sol.scheme),
                supports: sol.us.iter().map(|u| u.support()).collect(),
                loadings: sol.us.iter().map(|u| u.values.to_vec()).collect(),
                selected_samples: Some(sol.w.selected()),
                w: Some(sol.w.values.to_vec()),
                n_samples: n,
                objective: sol.objective(),
                objective_trace: sol.objective_trace,
                converged: sol.converged,
                iterations: sol.iterations,
                restart_index: Some(sol.restart_index),
                l1_bounds: None,
                manifest,
            }
        }
        other => return Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
    };
    write_json(&args.out, &file)
}

pub fn extract(mut args: ExtractArgs) -> Result<()> {
    args.solver.resolve()?;
    let raw = read_views(&args.data)?;
    let n = raw[0].nrows();
    let config = args
        .solver
        .config(args.ku, args.kv, resolve_kw(&args.kw, n)?)?;
    let manifest = RunManifest::new("extract", &args, args.solver.seed, &paths(&args.data))?;
    let file = |modules, dropped_columns, failure: Option<String>| ModulesFile {
        kind: "modules".into(),
        index_base: 0,
        complete: failure.is_none(),
        failure,
        n_samples: n,
        modules,
        dropped_columns,
        manifest: manifest.clone(),
    };
    match extract_sequential(&raw[0], &raw[1], &config, args.rounds) {
        Ok(ex) => write_json(&args.out, &file(ex.modules, ex.dropped_columns, None)),
        Err(Error::InsufficientSamples { round, completed }) => {
            let err = Error::InsufficientSamples {
                round,
                completed: completed.clone(),
            };
            write_json(
                &args.out,
                &file(completed, Vec::new(), Some(err.to_string())),
            )?;
            Err(err)
        }
        Err(e) => Err(e),
    }
}

/// A result file as read by `score`.
enum Scored {
    Solution(SolutionFile),
    Modules(ModulesFile),
}

fn load_scored(path: &Path) -> Result<Scored> {
    let value: serde_json::Value = read_json(path)?;
    let incompatible = |what: &str| Error::IncompatibleFiles(format!("{}: {what}", path.display()));
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("solution") => Ok(Scored::Solution(
            serde_json::from_value(value).map_err(|e| incompatible(&e.to_string()))?,
        )),
        Some("modules") => Ok(Scored::Modules(
            serde_json::from_value(value).map_err(|e| incompatible(&e.to_string()))?,
        )),
        _ => Err(incompatible("not a solution or modules file")),
    }
}

fn check_views_match(modules: &[CoModule], views: &[RawMatrix], n: usize) -> Result<()> {
    if views.iter().any(|v| v.nrows() != n) {
        return Err(Error::IncompatibleFiles(format!(
            "result has {n} samples, data has {}",
            views[0].nrows()
        )));
    }
    for m in modules {
        if m.feature_indices.len() != views.len() {
            return Err(Error::IncompatibleFiles(format!(
                "result has {} views, {} data files given",
                m.feature_indices.len(),
                views.len()
            )));
        }
        for (i, (set, view)) in m.feature_indices.iter().zip(views).enumerate() {
            if set.iter().any(|&c| c >= view.ncols()) {
                return Err(Error::IncompatibleFiles(format!(
                    "view {i} has {} columns, result selects column {}",
                    view.ncols(),
                    set.iter().max().copied().unwrap_or(0)
                )));
            }
        }
    }
    Ok(())
}

pub fn score(mut args: ScoreArgs) -> Result<()> {
    args.seed = resolve_seed(args.seed)?;
    if args.truth.is_none() && args.data.is_empty() {
        return Err(Error::InvalidConfig(
            "score needs --truth and/or --data".into(),
        ));
    }
    let scored = load_scored(&args.solution)?;
    let mut inputs = vec![args.solution.as_path()];
    inputs.extend(args.data.iter().map(PathBuf::as_path));
    if let Some(t) = &args.truth {
        inputs.push(t);
    }
    let manifest = RunManifest::new("score", &args, args.seed, &inputs)?;

    let metrics = match &args.truth {
        None => None,
        Some(path) => {
            let Scored::Solution(sol) = &scored else {
                return Err(Error::IncompatibleFiles(
                    "a planted truth scores a solution file, not modules".into(),
                ));
            };
            if sol.loadings.len() != 2 {
                return Err(Error::IncompatibleFiles(
                    "planted truth describes two views".into(),
                ));
            }
            let truth: TruthFile = read_json(path)?;
            let planted = PlantedTruth {
                u: Array1::from(truth.u),
                v: Array1::from(truth.v),
                w: Array1::from(truth.w),
            };
            let estimate = Estimate {
                u: Array1::from(sol.loadings[0].clone()),
                v: Array1::from(sol.loadings[1].clone()),
                w: sol.w.clone().map(Array1::from),
            };
            Some(score_metrics(&estimate, &planted).map_err(|e| match e {
                Error::LengthMismatch { left, right } => Error::IncompatibleFiles(format!(
                    "truth vector of length {left} vs estimate of length {right}"
                )),
                other => other,
            })?)
        }
    };

    let (modules, n) = match &scored {
        Scored::Solution(sol) => {
            let samples = sol
                .selected_samples
                .clone()
                .unwrap_or_else(|| (0..sol.n_samples).collect());
            let module = CoModule {
                sample_indices: samples,
                feature_indices: sol
                    .loadings
                    .iter()
                    .map(|u| support(Array1::from(u.clone()).view()))
                    .collect(),
                s_score: None,
                source: sol.method.clone(),
            };
            (vec![module], sol.n_samples)
        }
        Scored::Modules(m) => (m.modules.clone(), m.n_samples),
    };

    let mut module_scores = Vec::new();
    let mut null_rows = vec![vec!["module".to_string(), "draw".into(), "s_score".into()]];
    if !args.data.is_empty() {
        let views = read_views(&args.data)?;
        check_views_match(&modules, &views, n)?;
        let arrays: Vec<ArrayView2<'_, f64>> = views.iter().map(|v| v.view()).collect();
        for (i, module) in modules.iter().enumerate() {
            let s = s_score(module, &arrays)?;
            let perm = match args.n_perm {
                Some(n_perm) => {
                    let r = permutation_test(module, &arrays, n_perm, args.seed)?;
                    for (d, v) in r.null_scores.iter().enumerate() {
                        null_rows.push(vec![i.to_string(), d.to_string(), v.to_string()]);
                    }
                    Some(r)
                }
                None => None,
            };
            module_scores.push(ModuleScore {
                module: i,
                n_samples: module.sample_indices.len(),
                n_features: module.feature_indices.iter().map(Vec::len).collect(),
                s_score: s.value,
                pairs: s.pairs,
                degenerate_pairs: s.degenerate_pairs,
                p_value: perm.as_ref().map(|r| r.p_value),
                n_perm: perm.as_ref().map(|r| r.n_perm),
            });
        }
    }

    let report = ScoreReport {
        kind: "score".into(),
        index_base: 0,
        metrics,
        modules: module_scores,
        manifest,
    };
    write_json(&args.out, &report)?;
    write_table(&args.out.with_extension("csv"), &long_rows(&report))?;
    if args.n_perm.is_some() && null_rows.len() > 1 {
        write_table(&sibling(&args.out, "_null.csv"), &null_rows)?;
    }
    Ok(())
}

/// `<stem><suffix>` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// `section,item,metric,value` rows of a score report.
fn long_rows(report: &ScoreReport) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        "section".to_string(),
        "item".into(),
        "metric".into(),
        "value".into(),
    ]];
    let mut push = |section: &str, item: &str, metric: &str, value: String| {
        rows.push(vec![section.into(), item.into(), metric.into(), value]);
    };
    if let Some(m) = &report.metrics {
        for (target, t) in [("u", m.u), ("v", m.v), ("w", m.w), ("all", m.all)] {
            push("metrics", target, "tpr", t.tpr.to_string());
            push("metrics", target, "tnr", t.tnr.to_string());
            push("metrics", target, "acc", t.acc.to_string());
            push("metrics", target, "tp", t.counts.tp.to_string());
            push("metrics", target, "tn", t.counts.tn.to_string());
            push(
                "metrics",
                target,
                "positives",
                t.counts.positives.to_string(),
            );
            push(
                "metrics",
                target,
                "negatives",
                t.counts.negatives.to_string(),
            );
        }
    }
    for s in &report.modules {
        let item = s.module.to_string();
        push("module", &item, "n_samples", s.n_samples.to_string());
        push("module", &item, "s_score", s.s_score.to_string());
        push("module", &item, "pairs", s.pairs.to_string());
        push(
            "module",
            &item,
            "degenerate_pairs",
            s.degenerate_pairs.to_string(),
        );
        if let (Some(p), Some(k)) = (s.p_value, s.n_perm) {
            push("module", &item, "p_value", p.to_string());
            push("module", &item, "n_perm", k.to_string());
        }
    }
    rows
}

#[derive(Debug, Clone, Serialize)]
struct BenchFile<'a> {
    kind: &'static str,
    report: &'a crate::simbench::BenchmarkReport,
    manifest: RunManifest,
}

pub fn bench(mut args: BenchArgs) -> Result<()> {
    args.solver.resolve()?;
    let spec =
        spec_from(&args.scenario, args.n, args.p, args.q, args.snr)?.with_seed(args.solver.seed);
    let base = args.solver.config(1, 1, 1)?;
    let report = run_benchmark(&spec, &args.methods, args.runs, &base, args.preprocess)?;
    let manifest = RunManifest::new("bench", &args, args.solver.seed, &[])?;

    let mut summary = vec![{
        let mut h = vec!["method".to_string()];
        for m in METRIC_NAMES {
            h.push(format!("{m}_mean"));
            h.push(format!("{m}_std"));
        }
        h
    }];
    for s in &report.summary {
        let mut row = vec![s.method.name().to_string()];
        for (m, sd) in s.mean.iter().zip(&s.std) {
            row.push(m.to_string());
            row.push(sd.to_string());
        }
        summary.push(row);
    }
    let mut runs = vec![{
        let mut h = vec!["method".to_string(), "run".into(), "seed".into()];
        h.extend(METRIC_NAMES.iter().map(|m| m.to_string()));
        h
    }];
    for r in &report.runs {
        let mut row = vec![
            r.method.name().to_string(),
            r.run.to_string(),
            r.seed.to_string(),
        ];
        row.extend(r.metrics.values().iter().map(|v| v.to_string()));
        runs.push(row);
    }
    write_table(&args.out.join("summary.csv"), &summary)?;
    write_table(&args.out.join("runs.csv"), &runs)?;
    write_json(
        &args.out.join("bench.json"),
        &BenchFile {
            kind: "bench",
            report: &report,
            manifest,
        },
    )
}
