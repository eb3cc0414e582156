//! One-command verification suite. Every check runs on fixed seeds, so its
//! CSV output is byte-stable across runs and worker counts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::sweep::{check_outputs, to_csv};
use crate::bounds::{
    block_spectrum_suite, error_bounds, flip_tolerance_exact, perturbation_norm, perturbation_norm_scaling,
    projection_alignment, weyl_for_graph, ToleranceInputs,
};
use crate::embedding::{build_representation, eigendecompose, factorization_loss, normalize, RepresentationMatrix};
use crate::error::{Error, Result};
use crate::graph::{synthesize_structured, AssumptionReport};
use crate::io::{read_text, write_text};
use crate::labels::{clean_labels, flip_noise, gaussian_noise, symmetric_flip_spec};
use crate::probe::{expected_error_closed_form, ground_truth_accuracy, ground_truth_mse, ridge_fit};
use crate::rng::{streams, SeededStream};
use crate::structure::SubclassStructure;

/// Monte Carlo draws per configuration for the expectation check.
pub const MC_DRAWS: u64 = 2000;
/// Allowed distance of the Monte Carlo mean from the exact value, in standard errors.
pub const MC_STANDARD_ERRORS: f64 = 3.0;
pub const MC_CONFIGS: u64 = 20;
/// Noise seeds per flip-noise configuration.
pub const FLIP_SEEDS: u64 = 20;
/// Fraction of the guaranteed flip rate used when testing it.
pub const TOLERANCE_TEST_FRACTION: f64 = 0.95;
pub const BLOCK_SUITE_GRAPHS: u64 = 100;
pub const WEYL_CASES: u64 = 100;
pub const XI_RATIO_WINDOW: (f64, f64) = (1.8, 2.2);
pub const MAX_SCALING_EXPONENT: f64 = 3.0;
pub const FACTORIZATION_TOL: f64 = 1e-8;
pub const FACTORIZATION_GRAPHS: u64 = 10;
pub const FACTORIZATION_PERTURBATIONS: u64 = 1000;

/// Deliberate defects for checking that the suite can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Column-ratio slack computed as `sqrt(1 + delta) - 1`.
    WrongDeltaPrime,
}

impl Fault {
    pub fn parse(s: &str) -> Option<Self> {
        (s == "wrong-delta-prime").then_some(Fault::WrongDeltaPrime)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub fault: Option<Fault>,
}

impl SuiteOptions {
    fn delta_prime(&self, delta: f64) -> f64 {
        match self.fault {
            Some(Fault::WrongDeltaPrime) => (1.0 + delta).sqrt() - 1.0,
            None => crate::graph::delta_prime(delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckInfo {
    pub id: u8,
    pub name: &'static str,
    pub subject: &'static str,
    pub budget_secs: u64,
}

pub const CHECKS: [CheckInfo; 8] = [
    CheckInfo { id: 1, name: "expected_error_identity", subject: "Monte Carlo mean of probe MSE vs exact bias + variance", budget_secs: 60 },
    CheckInfo { id: 2, name: "error_bounds", subject: "exact bias and variance vs their explicit bounds", budget_secs: 60 },
    CheckInfo { id: 3, name: "flip_tolerance_zero_slack", subject: "clean recovery below (K-1)/K and (K-1)/(K+r-1) flip rates", budget_secs: 30 },
    CheckInfo { id: 4, name: "flip_tolerance_positive_slack", subject: "clean recovery below the explicit tolerance at delta > 0", budget_secs: 60 },
    CheckInfo { id: 5, name: "block_spectrum_bounds", subject: "column ratio, Perron mass and entries, tail eigenvalues", budget_secs: 60 },
    CheckInfo { id: 6, name: "perturbation_trends", subject: "Weyl shifts, ||E|| growth in xi and K_bar, alignment drop", budget_secs: 90 },
    CheckInfo { id: 7, name: "factorization_optimality", subject: "factorization loss equals discarded spectrum energy and is locally optimal", budget_secs: 30 },
    CheckInfo { id: 8, name: "determinism", subject: "two suite runs produce identical CSV bytes", budget_secs: 300 },
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub subject: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u8, passed: bool, detail: String) -> Self {
        let info = CHECKS[id as usize - 1];
        Self {
            id,
            name: info.name,
            subject: info.subject,
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub results: Vec<CheckResult>,
    pub csv_path: PathBuf,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn suite_rng(tag: u64) -> SeededStream {
    SeededStream::new(tag, streams::SUITE)
}

fn int_in(rng: &mut SeededStream, lo: usize, hi: usize) -> usize {
    lo + rng.below((hi - lo + 1) as u64) as usize
}

fn random_structure(rng: &mut SeededStream, max_k: usize, max_kbar: usize, min_size: usize, max_size: usize) -> Result<SubclassStructure> {
    let k = int_in(rng, 2, max_k);
    let k_bar = int_in(rng, k, max_kbar.max(k));
    let sizes = (0..k_bar).map(|_| int_in(rng, min_size, max_size)).collect();
    let class_of = (0..k_bar).map(|s| if s < k { s } else { rng.below(k as u64) as usize }).collect();
    SubclassStructure::new(k, sizes, class_of)
}

pub fn run_check(id: u8, opts: &SuiteOptions) -> Result<CheckResult> {
    match id {
        1 => expected_error_identity(),
        2 => error_bound_grid(opts),
        3 => flip_zero_slack(),
        4 => flip_positive_slack(),
        5 => block_spectrum(opts),
        6 => perturbation_trends(),
        7 => factorization_optimality(),
        _ => Err(Error::InvalidArgument(format!("no standalone check {id}"))),
    }
}

fn expected_error_identity() -> Result<CheckResult> {
    let outcomes: Vec<(bool, f64)> = (0..MC_CONFIGS)
        .into_par_iter()
        .map(|c| -> Result<(bool, f64)> {
            let mut rng = suite_rng(100 + c);
            let s = random_structure(&mut rng, 4, 8, 3, 30)?;
            let delta = rng.range(0.0, 0.2);
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, 1000 + c)?;
            let spec = eigendecompose(&normalize(&adj)?)?;
            let p = int_in(&mut rng, s.subclasses(), (2 * s.subclasses()).min(s.n()));
            let beta = 10f64.powf(rng.range(-2.0, 0.0));
            let sigma = rng.range(0.2, 1.5);
            let f = build_representation(&spec, p, Some(c))?;
            let y = clean_labels(&s);
            let exact = expected_error_closed_form(&spec, p, &y, beta, sigma)?.total;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for d in 0..MC_DRAWS {
                let noisy = gaussian_noise(&y, sigma, c * 100_000 + d)?;
                let mse = ground_truth_mse(&ridge_fit(&f, &noisy, beta)?, &y)?;
                sum += mse;
                sum_sq += mse * mse;
            }
            let m = MC_DRAWS as f64;
            let mean = sum / m;
            let var = (sum_sq - m * mean * mean) / (m - 1.0);
            let z = (mean - exact).abs() / (var / m).sqrt();
            Ok((z <= MC_STANDARD_ERRORS, z))
        })
        .collect::<Result<_>>()?;
    let worst = outcomes.iter().fold(0.0f64, |a, o| a.max(o.1));
    let ok = outcomes.iter().filter(|o| o.0).count();
    Ok(CheckResult::new(
        1,
        ok == outcomes.len(),
        format!("{ok}/{} configs within {MC_STANDARD_ERRORS} SE; worst |z| = {worst:.4}", outcomes.len()),
    ))
}

fn error_bound_grid(opts: &SuiteOptions) -> Result<CheckResult> {
    let s = SubclassStructure::balanced(2, 10, 50)?;
    let p = 2 * s.subclasses();
    let mut total = 0;
    let mut held = 0;
    let mut min_slack = f64::INFINITY;
    for (i, &delta) in [0.0, 0.05, 0.1].iter().enumerate() {
        let adj = synthesize_structured(&s, delta, 0.0, 1.0, 200 + i as u64)?;
        let measured = AssumptionReport::measure(&adj)?;
        let spec = eigendecompose(&normalize(&adj)?)?;
        for &beta in &[0.01, 0.1, 1.0] {
            for &sigma in &[0.5, 1.0] {
                let (b, v) = error_bounds(&spec, p, beta, sigma, opts.delta_prime(measured.delta))?;
                for r in [b, v] {
                    total += 1;
                    held += r.holds as usize;
                    min_slack = min_slack.min(r.slack);
                }
            }
        }
    }
    Ok(CheckResult::new(
        2,
        held == total,
        format!("{held}/{total} bounds hold; min slack {min_slack:.6e}"),
    ))
}

/// Accuracy of the probe on every flip seed, as `(min accuracy, total ties)`.
fn flip_accuracy(s: &SubclassStructure, delta: f64, graph_seed: u64, p: usize, beta: f64, alpha: f64, seeds: u64) -> Result<(f64, usize)> {
    let adj = synthesize_structured(s, delta, 0.0, 1.0, graph_seed)?;
    let spec = eigendecompose(&normalize(&adj)?)?;
    let f = build_representation(&spec, p, None)?;
    let y = clean_labels(s);
    let mut worst: f64 = 1.0;
    let mut ties = 0;
    for seed in 0..seeds {
        let spec = symmetric_flip_spec(s, alpha, seed)?;
        let (noisy, _) = flip_noise(&y, s, &spec)?;
        let acc = ground_truth_accuracy(&ridge_fit(&f, &noisy, beta)?, &y)?;
        worst = worst.min(acc.accuracy);
        ties += acc.ties;
    }
    Ok((worst, ties))
}

fn flip_zero_slack() -> Result<CheckResult> {
    let k = 10;
    let beta = 0.01;
    let balanced = SubclassStructure::balanced(k, k, 100)?;
    let skewed = SubclassStructure::new(k, [132, 66].repeat(5), (0..k).collect())?;
    let mut lines = Vec::new();
    let mut pass = true;
    for (s, alpha, expected) in [(&balanced, 0.85, 0.9), (&skewed, 0.80, 9.0 / 11.0)] {
        let c_max = 1.0 / (k - 1) as f64;
        let tol = flip_tolerance_exact(&ToleranceInputs::from_structure(s, c_max, 0.0, beta, k))?;
        let (acc, ties) = flip_accuracy(s, 0.0, 300, k, beta, alpha, FLIP_SEEDS)?;
        let ok = (tol.alpha_max - expected).abs() <= 1e-12 && alpha < tol.alpha_max && acc == 1.0 && ties == 0;
        pass &= ok;
        lines.push(format!("n={} alpha={alpha} threshold={:.6} min accuracy={acc}", s.n(), tol.alpha_max));
    }
    Ok(CheckResult::new(3, pass, lines.join("; ")))
}

fn flip_positive_slack() -> Result<CheckResult> {
    let mut configs = Vec::new();
    for &delta in &[0.02, 0.05] {
        for &k in &[2usize, 3] {
            for &mult in &[1usize, 2] {
                for &size in &[4usize, 8, 16] {
                    for &beta in &[1.0, 10.0, 100.0] {
                        configs.push((delta, k, k * mult, size, beta));
                    }
                }
            }
        }
    }
    // Small enough slack for the guarantee to be non-empty.
    configs.push((0.001, 2, 2, 4, 10.0));
    let outcomes: Vec<(f64, f64, Option<f64>)> = configs
        .par_iter()
        .enumerate()
        .map(|(i, &(delta, k, k_bar, size, beta))| -> Result<(f64, f64, Option<f64>)> {
            let s = SubclassStructure::balanced(k, k_bar, size)?;
            let graph_seed = 400 + i as u64;
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, graph_seed)?;
            let measured = AssumptionReport::measure(&adj)?.delta;
            let c_max = 1.0 / (k - 1) as f64;
            let tol = flip_tolerance_exact(&ToleranceInputs::from_structure(&s, c_max, measured, beta, k_bar))?;
            if tol.alpha_max <= 0.0 {
                return Ok((delta, 0.0, None));
            }
            let alpha = TOLERANCE_TEST_FRACTION * tol.alpha_max;
            let (acc, _) = flip_accuracy(&s, delta, graph_seed, k_bar, beta, alpha, FLIP_SEEDS)?;
            Ok((delta, tol.alpha_max, Some(acc)))
        })
        .collect::<Result<_>>()?;
    let grid = &outcomes[..outcomes.len() - 1];
    let positive = grid.iter().filter(|o| o.2.is_some()).count();
    let grid_ok = grid.iter().all(|o| o.2.is_none_or(|a| a == 1.0));
    let (_, small_alpha, small_acc) = outcomes[outcomes.len() - 1];
    let small_ok = small_acc == Some(1.0);
    Ok(CheckResult::new(
        4,
        grid_ok && small_ok,
        format!(
            "delta in {{0.02,0.05}}: {positive}/{} configs have a positive tolerance; \
             delta=0.001 control: alpha_max={small_alpha:.6} min accuracy={}",
            grid.len(),
            small_acc.map_or("n/a".to_string(), |a| a.to_string())
        ),
    ))
}

fn block_spectrum(opts: &SuiteOptions) -> Result<CheckResult> {
    let failures: Vec<Vec<String>> = (0..BLOCK_SUITE_GRAPHS)
        .into_par_iter()
        .map(|g| -> Result<Vec<String>> {
            let mut rng = suite_rng(500 + g);
            let s = random_structure(&mut rng, 3, 6, 2, 30)?;
            let delta = 0.3 * g as f64 / (BLOCK_SUITE_GRAPHS - 1) as f64;
            let adj = synthesize_structured(&s, delta, 0.0, 1.0, 5000 + g)?;
            let measured = AssumptionReport::measure(&adj)?.delta;
            let p = (2 * s.subclasses()).min(s.n());
            let reports = block_spectrum_suite(&adj, p, opts.delta_prime(measured))?;
            Ok(reports.into_iter().filter(|r| !r.holds).map(|r| r.name).collect())
        })
        .collect::<Result<_>>()?;
    let mut failed: Vec<String> = failures.iter().flatten().cloned().collect();
    failed.sort();
    failed.dedup();
    let bad_graphs = failures.iter().filter(|f| !f.is_empty()).count();
    let detail = if failed.is_empty() {
        format!("all 8 bounds hold on {BLOCK_SUITE_GRAPHS} graphs")
    } else {
        format!("{bad_graphs} graphs violate: {}", failed.join(" "))
    };
    Ok(CheckResult::new(5, failed.is_empty(), detail))
}

fn perturbation_trends() -> Result<CheckResult> {
    let weyl: Vec<bool> = (0..WEYL_CASES)
        .into_par_iter()
        .map(|c| -> Result<bool> {
            let mut rng = suite_rng(600 + c);
            let k_bar = int_in(&mut rng, 2, 4);
            let s = SubclassStructure::balanced(2, k_bar, int_in(&mut rng, 4, 20))?;
            let adj = synthesize_structured(&s, rng.range(0.0, 0.2), rng.range(0.001, 0.2), 1.0, 6000 + c)?;
            Ok(weyl_for_graph(&adj)?.holds)
        })
        .collect::<Result<_>>()?;
    let weyl_ok = weyl.iter().filter(|&&h| h).count();

    let s = SubclassStructure::balanced(2, 4, 20)?;
    let ratio = perturbation_norm(&s, 0.0, 0.02, 61)? / perturbation_norm(&s, 0.0, 0.01, 61)?;
    let ratio_ok = (XI_RATIO_WINDOW.0..=XI_RATIO_WINDOW.1).contains(&ratio);

    let family: Vec<SubclassStructure> = [2, 4, 8]
        .iter()
        .map(|&k| SubclassStructure::balanced(2, k, 20))
        .collect::<Result<_>>()?;
    let exponent = perturbation_norm_scaling(&family, 0.0, 0.02, 62)?.exponent.unwrap_or(f64::NAN);
    let exponent_ok = exponent <= MAX_SCALING_EXPONENT;

    let y = clean_labels(&s);
    let k_bar = s.subclasses();
    let mut drops = Vec::new();
    for &xi in &[0.04, 0.02, 0.01] {
        let adj = synthesize_structured(&s, 0.0, xi, 1.0, 63)?;
        let (bar, tilde, _) = crate::graph::split_block_and_residual(&adj)?;
        let clean = projection_alignment(&eigendecompose(&bar)?, k_bar, &y)?;
        let pert = projection_alignment(&eigendecompose(&tilde)?, k_bar, &y)?;
        drops.push(clean - pert);
    }
    let drops_ok = drops.windows(2).all(|w| w[1] < w[0]);

    let pass = weyl_ok as u64 == WEYL_CASES && ratio_ok && exponent_ok && drops_ok;
    Ok(CheckResult::new(
        6,
        pass,
        format!(
            "weyl {weyl_ok}/{WEYL_CASES}; xi-doubling ratio {ratio:.4}; K_bar exponent {exponent:.4}; \
             alignment drops {:.4e} {:.4e} {:.4e}",
            drops[0], drops[1], drops[2]
        ),
    ))
}

fn factorization_optimality() -> Result<CheckResult> {
    let outcomes: Vec<(f64, u64)> = (0..FACTORIZATION_GRAPHS)
        .into_par_iter()
        .map(|g| -> Result<(f64, u64)> {
            let mut rng = suite_rng(700 + g);
            let s = random_structure(&mut rng, 3, 5, 3, 20)?;
            let adj = synthesize_structured(&s, rng.range(0.0, 0.3), 0.0, 1.0, 7000 + g)?;
            let norm = normalize(&adj)?;
            let spec = eigendecompose(&norm)?;
            let nonneg = spec.eigenvalues().iter().filter(|&&l| l >= 0.0).count();
            let p = int_in(&mut rng, s.subclasses(), s.subclasses() + 3).min(nonneg);
            let f = build_representation(&spec, p, Some(g))?;
            let loss = factorization_loss(&norm, &f)?;
            let tail: f64 = spec.eigenvalues().iter().skip(p).map(|l| l * l).sum();
            let mut beaten = 0;
            let scale = f.values().norm();
            for _ in 0..FACTORIZATION_PERTURBATIONS {
                let eps = scale * 10f64.powf(rng.range(-4.0, -1.0));
                let mut d = DMatrix::from_fn(s.n(), p, |_, _| rng.standard_normal());
                d *= eps / d.norm();
                let other = RepresentationMatrix::from_values(f.values() + d);
                if factorization_loss(&norm, &other)? < loss - 1e-12 {
                    beaten += 1;
                }
            }
            Ok(((loss - tail).abs(), beaten))
        })
        .collect::<Result<_>>()?;
    let worst = outcomes.iter().fold(0.0f64, |a, o| a.max(o.0));
    let beaten: u64 = outcomes.iter().map(|o| o.1).sum();
    Ok(CheckResult::new(
        7,
        worst <= FACTORIZATION_TOL && beaten == 0,
        format!("max |loss - tail energy| = {worst:.3e}; {beaten} of {} perturbations lower the loss", FACTORIZATION_GRAPHS * FACTORIZATION_PERTURBATIONS),
    ))
}

pub fn results_csv(results: &[CheckResult]) -> Result<String> {
    to_csv(results)
}

/// Runs checks 1 to 7 in order.
pub fn run_all(opts: &SuiteOptions) -> Result<Vec<CheckResult>> {
    (1..=7).map(|id| run_check(id, opts)).collect()
}

/// Runs the suite, writes `suite.csv` to `out_dir`, and with `rerun` repeats
/// checks 1 to 7 to confirm the CSV bytes do not change.
pub fn verify_suite(opts: &SuiteOptions, out_dir: &Path, overwrite: bool, rerun: bool) -> Result<SuiteOutcome> {
    let csv_path = out_dir.join("suite.csv");
    check_outputs(&[&csv_path], overwrite)?;
    let mut results = run_all(opts)?;
    let first = results_csv(&results)?;
    if rerun {
        let second = results_csv(&run_all(opts)?)?;
        let same = first == second;
        results.push(CheckResult::new(
            8,
            same,
            if same { "byte-identical".into() } else { "outputs differ between runs".into() },
        ));
    }
    write_text(&csv_path, &results_csv(&results)?, overwrite)?;
    if rerun && read_text(&csv_path)? != results_csv(&results)? {
        return Err(Error::Numerical("suite CSV changed on disk".into()));
    }
    Ok(SuiteOutcome { results, csv_path })
}

/// Check inventory without running anything.
pub fn list_checks() -> String {
    let mut out = String::new();
    for c in CHECKS {
        writeln!(out, "{:>2}  {:<30}  budget {:>3}s  {}", c.id, c.name, c.budget_secs, c.subject).unwrap();
    }
    out
}

/// One line per check result.
pub fn format_results(results: &[CheckResult]) -> String {
    let mut out = String::new();
    for r in results {
        writeln!(
            out,
            "{} {:>2} {:<30} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.detail
        )
        .unwrap();
    }
    out
}
