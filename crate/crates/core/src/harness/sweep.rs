//! Grid sweeps over a configuration.
//!
//! `results.csv` columns, in order: `config_digest, graph_seed, rotation_seed,
//! noise_seed, delta, xi, measured_delta, measured_xi, noise_model, sigma,
//! alpha, beta, p, mse, accuracy, ties, expected_bias_sq, expected_variance,
//! expected_total, alpha_max`. Rows are ordered by `(delta, xi)` as listed in
//! the config, then noise level, `beta` and noise seed.
//!
//! `bounds.csv` columns: `config_digest, graph_seed, delta, xi, sigma, beta,
//! name, bound, observed, slack, holds`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, NoiseModel};
use crate::bounds::{block_spectrum_suite, error_bounds, flip_tolerance_exact, weyl_for_graph, BoundReport, ToleranceInputs};
use crate::embedding::{build_representation, eigendecompose, normalize, RepresentationMatrix, Spectrum};
use crate::error::{Error, Result};
use crate::graph::{synthesize_structured, AssumptionReport};
use crate::io::write_text;
use crate::labels::{clean_labels, flip_noise, gaussian_noise, LabelMatrix};
use crate::probe::{expected_error_closed_form, ground_truth_accuracy, ground_truth_mse, ridge_fit};
use crate::structure::SubclassStructure;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub config_digest: String,
    pub graph_seed: u64,
    pub rotation_seed: Option<u64>,
    pub noise_seed: u64,
    pub delta: f64,
    pub xi: f64,
    pub measured_delta: f64,
    pub measured_xi: f64,
    pub noise_model: &'static str,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: f64,
    pub p: usize,
    pub mse: f64,
    pub accuracy: f64,
    pub ties: usize,
    pub expected_bias_sq: Option<f64>,
    pub expected_variance: Option<f64>,
    pub expected_total: Option<f64>,
    pub alpha_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub config_digest: String,
    pub graph_seed: u64,
    pub delta: f64,
    pub xi: f64,
    pub sigma: Option<f64>,
    pub beta: Option<f64>,
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteTally {
    pub name: String,
    pub held: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub points: usize,
    pub artifacts: Vec<PathBuf>,
    pub wall_time_secs: f64,
    pub suite: Vec<SuiteTally>,
    pub all_bounds_hold: bool,
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub out_dir: PathBuf,
    /// Worker cap; `None` uses all available cores.
    pub jobs: Option<usize>,
    pub overwrite: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<ResultRow>,
    pub bounds: Vec<BoundRow>,
}

impl SweepOutput {
    pub fn tallies(&self) -> Vec<SuiteTally> {
        let mut out: Vec<SuiteTally> = Vec::new();
        for b in &self.bounds {
            match out.iter_mut().find(|t| t.name == b.name) {
                Some(t) => {
                    t.total += 1;
                    t.held += b.holds as usize;
                }
                None => out.push(SuiteTally {
                    name: b.name.clone(),
                    held: b.holds as usize,
                    total: 1,
                }),
            }
        }
        out
    }

    pub fn results_csv(&self) -> Result<String> {
        to_csv(&self.rows)
    }

    pub fn bounds_csv(&self) -> Result<String> {
        to_csv(&self.bounds)
    }
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Numerical(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

struct GraphStage {
    delta: f64,
    xi: f64,
    measured: AssumptionReport,
    spec: Spectrum,
    rep: RepresentationMatrix,
    reports: Vec<BoundReport>,
}

fn graph_stage(cfg: &ExperimentConfig, structure: &SubclassStructure, delta: f64, xi: f64) -> Result<GraphStage> {
    let adj = synthesize_structured(structure, delta, xi, cfg.graph.base_weight, cfg.graph.seed)?;
    let measured = AssumptionReport::measure(&adj)?;
    let spec = eigendecompose(&normalize(&adj)?)?;
    let rep = build_representation(&spec, cfg.embedding.p, cfg.embedding.rotation_seed)?;
    let mut reports = Vec::new();
    if measured.xi == 0.0 {
        reports = block_spectrum_suite(&adj, cfg.embedding.p, measured.delta_prime)?;
    } else if structure.is_balanced() && cfg.suite.selects("weyl") {
        reports.push(weyl_for_graph(&adj)?);
    }
    reports.retain(|r| cfg.suite.selects(&r.name));
    Ok(GraphStage {
        delta,
        xi,
        measured,
        spec,
        rep,
        reports,
    })
}

/// Runs the grid without touching the filesystem.
pub fn compute_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let structure = cfg.structure.build()?;
    let digest = cfg.digest();
    let y_clean = clean_labels(&structure);
    let pairs: Vec<(f64, f64)> = cfg
        .graph
        .delta
        .iter()
        .flat_map(|&d| cfg.graph.xi.iter().map(move |&x| (d, x)))
        .collect();
    let graphs: Vec<GraphStage> = pairs
        .par_iter()
        .map(|&(d, x)| graph_stage(cfg, &structure, d, x))
        .collect::<Result<_>>()?;

    let levels = cfg.noise.levels();
    let mut points = Vec::new();
    for g in 0..graphs.len() {
        for &level in levels {
            for beta in cfg.probe.betas() {
                for &seed in &cfg.noise.seeds {
                    points.push((g, level, beta, seed));
                }
            }
        }
    }
    let rows: Vec<ResultRow> = points
        .par_iter()
        .map(|&(g, level, beta, seed)| point_row(cfg, &structure, &y_clean, &graphs[g], level, beta, seed, &digest))
        .collect::<Result<_>>()?;

    let mut bounds = Vec::new();
    for g in &graphs {
        let base = |sigma: Option<f64>, beta: Option<f64>, r: &BoundReport| BoundRow {
            config_digest: digest.clone(),
            graph_seed: cfg.graph.seed,
            delta: g.delta,
            xi: g.xi,
            sigma,
            beta,
            name: r.name.clone(),
            bound: r.bound_value,
            observed: r.observed_value,
            slack: r.slack,
            holds: r.holds,
        };
        bounds.extend(g.reports.iter().map(|r| base(None, None, r)));
        if g.measured.xi != 0.0 || cfg.noise.model != NoiseModel::Gaussian {
            continue;
        }
        if !(cfg.suite.selects("bias") || cfg.suite.selects("variance")) {
            continue;
        }
        for &sigma in levels {
            for beta in cfg.probe.betas() {
                let (b, v) = error_bounds(&g.spec, cfg.embedding.p, beta, sigma, g.measured.delta_prime)?;
                for r in [b, v].iter().filter(|r| cfg.suite.selects(&r.name)) {
                    bounds.push(base(Some(sigma), Some(beta), r));
                }
            }
        }
    }
    Ok(SweepOutput { rows, bounds })
}

#[allow(clippy::too_many_arguments)]
fn point_row(
    cfg: &ExperimentConfig,
    structure: &SubclassStructure,
    y_clean: &LabelMatrix,
    g: &GraphStage,
    level: f64,
    beta: f64,
    seed: u64,
    digest: &str,
) -> Result<ResultRow> {
    let p = cfg.embedding.p;
    let (noisy, sigma, alpha) = match cfg.noise.model {
        NoiseModel::Gaussian => (gaussian_noise(y_clean, level, seed)?, Some(level), None),
        NoiseModel::Flip => {
            let spec = cfg.noise.flip_spec(structure, level, seed)?;
            (flip_noise(y_clean, structure, &spec)?.0, None, Some(level))
        }
    };
    let fit = ridge_fit(&g.rep, &noisy, beta)?;
    let acc = ground_truth_accuracy(&fit, y_clean)?;
    let mse = ground_truth_mse(&fit, y_clean)?;
    let expected = match sigma {
        Some(s) => Some(expected_error_closed_form(&g.spec, p, y_clean, beta, s)?),
        None => None,
    };
    let alpha_max = match cfg.noise.model {
        NoiseModel::Flip if g.measured.xi == 0.0 => {
            let c_max = cfg.noise.flip_spec(structure, level, seed)?.c_max();
            let inputs = ToleranceInputs::from_structure(structure, c_max, g.measured.delta, beta, p);
            Some(flip_tolerance_exact(&inputs)?.alpha_max)
        }
        _ => None,
    };
    Ok(ResultRow {
        config_digest: digest.to_string(),
        graph_seed: cfg.graph.seed,
        rotation_seed: cfg.embedding.rotation_seed,
        noise_seed: seed,
        delta: g.delta,
        xi: g.xi,
        measured_delta: g.measured.delta,
        measured_xi: g.measured.xi,
        noise_model: cfg.noise.model.as_str(),
        sigma,
        alpha,
        beta,
        p,
        mse,
        accuracy: acc.accuracy,
        ties: acc.ties,
        expected_bias_sq: expected.as_ref().map(|e| e.bias_sq),
        expected_variance: expected.as_ref().map(|e| e.variance),
        expected_total: expected.as_ref().map(|e| e.total),
        alpha_max,
    })
}

pub(crate) fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub(crate) fn check_outputs(paths: &[&Path], overwrite: bool) -> Result<()> {
    if !overwrite {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(Error::OutputExists(p.to_path_buf()));
        }
    }
    Ok(())
}

/// Runs the grid and writes `results.csv`, `bounds.csv` and `manifest.json`.
pub fn run_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let results = opts.out_dir.join("results.csv");
    let bounds = opts.out_dir.join("bounds.csv");
    let manifest_path = opts.out_dir.join("manifest.json");
    check_outputs(&[&results, &bounds, &manifest_path], opts.overwrite)?;
    let out = with_pool(opts.jobs, || compute_sweep(cfg))??;
    write_text(&results, &out.results_csv()?, opts.overwrite)?;
    write_text(&bounds, &out.bounds_csv()?, opts.overwrite)?;
    let suite = out.tallies();
    let manifest = RunManifest {
        config_digest: cfg.digest(),
        points: out.rows.len(),
        artifacts: vec![results, bounds, manifest_path.clone()],
        wall_time_secs: start.elapsed().as_secs_f64(),
        all_bounds_hold: suite.iter().all(|t| t.held == t.total),
        suite,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&manifest_path, &(json + "\n"), opts.overwrite)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_point(beta: f64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::minimal();
        cfg.graph.delta = vec![0.0];
        cfg.noise.sigma = vec![0.0];
        cfg.probe.beta = vec![beta];
        cfg
    }

    #[test]
    fn noiseless_point_matches_closed_form() {
        let out = compute_sweep(&one_point(0.25)).unwrap();
        assert_eq!(out.rows.len(), 1);
        let r = &out.rows[0];
        assert_abs_diff_eq!(r.mse, (0.25f64 / 1.25).powi(2), epsilon = 1e-12);
        assert_eq!(r.accuracy, 1.0);
        assert_abs_diff_eq!(r.expected_total.unwrap(), r.mse, epsilon = 1e-12);
    }

    #[test]
    fn flip_point_reports_tolerance() {
        let mut cfg = one_point(0.1);
        cfg.noise.model = NoiseModel::Flip;
        cfg.noise.sigma.clear();
        cfg.noise.alpha = vec![0.2];
        let out = compute_sweep(&cfg).unwrap();
        let r = &out.rows[0];
        assert_abs_diff_eq!(r.alpha_max.unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(r.accuracy, 1.0);
        assert!(r.expected_total.is_none());
    }

    #[test]
    fn suite_holds_and_is_selectable() {
        let mut cfg = ExperimentConfig::minimal();
        cfg.graph.delta = vec![0.0, 0.05, 0.1];
        cfg.noise.sigma = vec![0.5, 1.0];
        cfg.probe.beta = vec![0.01, 1.0];
        let out = compute_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 12);
        assert!(out.bounds.iter().all(|b| b.holds));
        let tallies = out.tallies();
        assert_eq!(tallies.iter().find(|t| t.name == "bias").unwrap().total, 12);
        cfg.suite.bounds = Some(vec!["variance".into()]);
        let out = compute_sweep(&cfg).unwrap();
        assert!(out.bounds.iter().all(|b| b.name == "variance"));
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut cfg = ExperimentConfig::minimal();
        cfg.graph.xi = vec![0.0, 0.02];
        cfg.noise.seeds = vec![1, 2, 3];
        let a = with_pool(Some(1), || compute_sweep(&cfg)).unwrap().unwrap();
        let b = with_pool(Some(4), || compute_sweep(&cfg)).unwrap().unwrap();
        assert_eq!(a.results_csv().unwrap(), b.results_csv().unwrap());
        assert_eq!(a.bounds_csv().unwrap(), b.bounds_csv().unwrap());
        assert!(a.bounds.iter().any(|b| b.name == "weyl"));
    }

    #[test]
    fn run_writes_and_protects_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let opts = SweepOptions {
            out_dir: dir.path().to_path_buf(),
            jobs: Some(2),
            overwrite: false,
        };
        let cfg = ExperimentConfig::minimal();
        let m = run_sweep(&cfg, &opts).unwrap();
        assert_eq!(m.config_digest, cfg.digest());
        assert!(m.artifacts.iter().all(|p| p.exists()));
        let first = std::fs::read(dir.path().join("results.csv")).unwrap();
        assert!(matches!(run_sweep(&cfg, &opts), Err(Error::OutputExists(_))));
        run_sweep(&cfg, &SweepOptions { overwrite: true, ..opts }).unwrap();
        assert_eq!(std::fs::read(dir.path().join("results.csv")).unwrap(), first);
        let text = String::from_utf8(first).unwrap();
        assert!(text.starts_with("config_digest,graph_seed,rotation_seed,noise_seed,delta,xi,"));
    }
}
