use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use augspec::analyzer::{alignment_report, spectrum_gap};
use augspec::bounds::{block_spectrum_suite, error_bounds, flip_tolerance_exact, weyl_for_graph, BoundReport, ToleranceInputs};
use augspec::embedding::{build_representation, eigendecompose, normalize};
use augspec::graph::{synthesize_structured, AdjacencyMatrix, AssumptionReport};
use augspec::harness::config::{ExperimentConfig, NoiseModel};
use augspec::harness::plot::{plot_results, PlotKind};
use augspec::harness::suite::{format_results, list_checks, verify_suite, Fault, SuiteOptions};
use augspec::harness::sweep::{run_sweep, SweepOptions};
use augspec::io;
use augspec::labels::{clean_labels, flip_noise, gaussian_noise};
use augspec::probe::{expected_error_closed_form, ground_truth_accuracy, ground_truth_mse, ridge_fit};
use augspec::Error;

/// Environment variable that overrides the output directory when `--out` is absent.
const OUT_DIR_ENV: &str = "AUGSPEC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "augspec-out";

const EXIT_USAGE: u8 = 1;
const EXIT_SUITE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "augspec", version, about = "Spectral contrastive embeddings on synthetic augmentation graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (TOML). A built-in single-point config is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the graph seed (and the noise seed for `synth`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    overwrite: bool,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a graph plus clean and noisy labels from the config.
    Synth {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
    },
    /// Eigendecompose a graph and export its spectrum and representation.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        rotation_seed: Option<u64>,
    },
    /// Fit the ridge probe on a graph and a noisy label file.
    Probe {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Noise level used for the exact expected error.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Evaluate every applicable bound on a graph.
    Bounds {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run the full configuration grid.
    Sweep,
    /// Profile the singular spectrum of a matrix file against a target column.
    Analyze {
        #[arg(long)]
        matrix: PathBuf,
        /// Label file supplying the target; the matrix's own structure is used when omitted.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        column: usize,
        #[arg(long)]
        top_k: usize,
    },
    /// Render a CSV file as an SVG plot.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        /// accuracy-vs-alpha, error-vs-beta or histogram
        #[arg(long)]
        kind: String,
    },
    /// Run the verification suite.
    Verify {
        /// Print the check inventory and exit.
        #[arg(long)]
        list: bool,
        /// Introduce a known defect (wrong-delta-prime).
        #[arg(long)]
        inject_fault: Option<String>,
    },
}

enum Failure {
    Error(Error),
    Suite(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.global.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suite(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_SUITE)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_USAGE })
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    overwrite: bool,
    jobs: Option<usize>,
    seed: Option<u64>,
}

impl Ctx {
    fn new(g: &Global) -> Result<Self, Error> {
        let mut cfg = match &g.config {
            Some(path) => ExperimentConfig::from_toml(&io::read_text(path)?)?,
            None => ExperimentConfig::minimal(),
        };
        if let Some(seed) = g.seed {
            cfg.graph.seed = seed;
        }
        let out = g
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .or_else(|| cfg.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Ok(Self {
            cfg,
            out,
            overwrite: g.overwrite,
            jobs: g.jobs,
            seed: g.seed,
        })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Error> {
        let path = self.out.join(name);
        io::write_text(&path, contents, self.overwrite)?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn check_free(&self, names: &[&str]) -> Result<(), Error> {
        if !self.overwrite {
            if let Some(p) = names.iter().map(|n| self.out.join(n)).find(|p| p.exists()) {
                return Err(Error::OutputExists(p));
            }
        }
        Ok(())
    }
}

fn load_graph(path: &Path) -> Result<AdjacencyMatrix, Error> {
    io::parse_adjacency(&io::read_text(path)?)
}

fn run(cli: Cli) -> Outcome {
    if let Command::Verify { list: true, .. } = cli.command {
        print!("{}", list_checks());
        return Ok(());
    }
    let ctx = Ctx::new(&cli.global)?;
    match cli.command {
        Command::Synth { delta, xi } => synth(&ctx, delta, xi)?,
        Command::Embed { graph, p, rotation_seed } => embed(&ctx, &graph, p, rotation_seed)?,
        Command::Probe { graph, labels, sigma } => probe(&ctx, &graph, &labels, sigma)?,
        Command::Bounds { graph } => return bounds(&ctx, &graph),
        Command::Sweep => return sweep(&ctx),
        Command::Analyze { matrix, labels, column, top_k } => analyze(&ctx, &matrix, labels.as_deref(), column, top_k)?,
        Command::Plot { csv, kind } => {
            let kind = PlotKind::parse(&kind)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown plot kind `{kind}`")))?;
            let name = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
            let out = ctx.out.join(format!("{name}.svg"));
            plot_results(&csv, kind, &out, ctx.overwrite)?;
            println!("wrote {}", out.display());
        }
        Command::Verify { inject_fault, .. } => {
            let fault = match inject_fault {
                None => None,
                Some(f) => Some(Fault::parse(&f).ok_or_else(|| Error::InvalidArgument(format!("unknown fault `{f}`")))?),
            };
            let opts = SuiteOptions { fault };
            let outcome = with_jobs(ctx.jobs, || verify_suite(&opts, &ctx.out, ctx.overwrite, true))?;
            print!("{}", format_results(&outcome.results));
            println!("wrote {}", outcome.csv_path.display());
            if !outcome.passed() {
                let failed: Vec<&str> = outcome.results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
                return Err(Failure::Suite(format!("suite failed: {}", failed.join(", "))));
            }
        }
    }
    Ok(())
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, Error> + Send) -> Result<T, Error> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    let pool = b.build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    pool.install(f)
}

fn synth(ctx: &Ctx, delta: Option<f64>, xi: Option<f64>) -> Result<(), Error> {
    ctx.check_free(&["graph.txt", "labels_clean.txt", "labels_noisy.txt"])?;
    let cfg = &ctx.cfg;
    let s = cfg.structure.build()?;
    let delta = delta.unwrap_or(cfg.graph.delta[0]);
    let xi = xi.unwrap_or(cfg.graph.xi[0]);
    let adj = synthesize_structured(&s, delta, xi, cfg.graph.base_weight, cfg.graph.seed)?;
    let m = AssumptionReport::measure(&adj)?;
    println!("n={} delta={:.6e} delta'={:.6e} xi={:.6e}", s.n(), m.delta, m.delta_prime, m.xi);
    ctx.write("graph.txt", &io::format_adjacency(&adj))?;
    let y = clean_labels(&s);
    ctx.write("labels_clean.txt", &io::format_labels(&y, &s))?;
    let noise_seed = ctx.seed.unwrap_or(cfg.noise.seeds[0]);
    let level = cfg.noise.levels()[0];
    let noisy = match cfg.noise.model {
        NoiseModel::Gaussian => gaussian_noise(&y, level, noise_seed)?,
        NoiseModel::Flip => flip_noise(&y, &s, &cfg.noise.flip_spec(&s, level, noise_seed)?)?.0,
    };
    ctx.write("labels_noisy.txt", &io::format_labels(&noisy, &s))?;
    Ok(())
}

fn embed(ctx: &Ctx, graph: &Path, p: Option<usize>, rotation: Option<u64>) -> Result<(), Error> {
    ctx.check_free(&["spectrum.txt", "representation.txt"])?;
    let adj = load_graph(graph)?;
    let spec = eigendecompose(&normalize(&adj)?)?;
    let p = p.unwrap_or(ctx.cfg.embedding.p);
    let f = build_representation(&spec, p, rotation.or(ctx.cfg.embedding.rotation_seed))?;
    println!("top eigenvalues: {:?}", &spec.eigenvalues().as_slice()[..p.min(8)]);
    println!("spectrum digest {}", f.source_spectrum_hash());
    ctx.write("spectrum.txt", &io::format_spectrum(&spec))?;
    ctx.write("representation.txt", &io::format_representation(&f, adj.structure()))?;
    Ok(())
}

fn probe(ctx: &Ctx, graph: &Path, labels: &Path, sigma: Option<f64>) -> Result<(), Error> {
    ctx.check_free(&["fit_summary.csv"])?;
    let adj = load_graph(graph)?;
    let s = adj.structure().clone();
    let (noisy, _) = io::parse_labels(&io::read_text(labels)?)?;
    let spec = eigendecompose(&normalize(&adj)?)?;
    let cfg = &ctx.cfg;
    let p = cfg.embedding.p;
    let f = build_representation(&spec, p, cfg.embedding.rotation_seed)?;
    let y = clean_labels(&s);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config_digest", "rotation_seed", "p", "beta", "sigma", "bias_sq", "variance", "expected_total", "mse", "accuracy", "ties"])
        .map_err(Error::from)?;
    for beta in cfg.probe.betas() {
        let fit = ridge_fit(&f, &noisy, beta)?;
        let acc = ground_truth_accuracy(&fit, &y)?;
        let mse = ground_truth_mse(&fit, &y)?;
        let exact = match sigma {
            Some(sg) => Some(expected_error_closed_form(&spec, p, &y, beta, sg)?),
            None => None,
        };
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        w.write_record([
            cfg.digest(),
            cfg.embedding.rotation_seed.map_or(String::new(), |r| r.to_string()),
            p.to_string(),
            beta.to_string(),
            opt(sigma),
            opt(exact.as_ref().map(|e| e.bias_sq)),
            opt(exact.as_ref().map(|e| e.variance)),
            opt(exact.as_ref().map(|e| e.total)),
            mse.to_string(),
            acc.accuracy.to_string(),
            acc.ties.to_string(),
        ])
        .map_err(Error::from)?;
        println!("beta={beta} mse={mse:.6e} accuracy={} ties={}", acc.accuracy, acc.ties);
    }
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    ctx.write("fit_summary.csv", &String::from_utf8(bytes).expect("utf-8"))?;
    Ok(())
}

fn bounds(ctx: &Ctx, graph: &Path) -> Outcome {
    ctx.check_free(&["bounds.csv"])?;
    let adj = load_graph(graph)?;
    let m = AssumptionReport::measure(&adj)?;
    let cfg = &ctx.cfg;
    let p = cfg.embedding.p;
    let mut reports: Vec<BoundReport> = Vec::new();
    if m.xi == 0.0 {
        reports.extend(block_spectrum_suite(&adj, p, m.delta_prime)?);
        let spec = eigendecompose(&normalize(&adj)?)?;
        if cfg.noise.model == NoiseModel::Gaussian {
            for &sigma in &cfg.noise.sigma {
                for beta in cfg.probe.betas() {
                    let (b, v) = error_bounds(&spec, p, beta, sigma, m.delta_prime)?;
                    reports.push(b);
                    reports.push(v);
                }
            }
        }
        let s = adj.structure();
        let c_max = 1.0 / (s.classes() - 1) as f64;
        for beta in cfg.probe.betas() {
            let t = flip_tolerance_exact(&ToleranceInputs::from_structure(s, c_max, m.delta, beta, p))?;
            println!(
                "beta={beta}: symmetric flip tolerance {:.6} ({})",
                t.alpha_max,
                if t.guaranteed { "guaranteed" } else { "delta too large for a guarantee" }
            );
        }
    } else if adj.structure().is_balanced() {
        reports.push(weyl_for_graph(&adj)?);
    }
    reports.retain(|r| cfg.suite.selects(&r.name));
    print!("{}", io::format_bound_table(&reports));
    ctx.write("bounds.csv", &io::format_bound_csv(&reports)?)?;
    if reports.iter().all(|r| r.holds) {
        Ok(())
    } else {
        Err(Failure::Suite("some bounds do not hold".into()))
    }
}

fn sweep(ctx: &Ctx) -> Outcome {
    let opts = SweepOptions {
        out_dir: ctx.out.clone(),
        jobs: ctx.jobs,
        overwrite: ctx.overwrite,
    };
    let m = run_sweep(&ctx.cfg, &opts)?;
    println!("{} points, config {}", m.points, m.config_digest);
    for t in &m.suite {
        println!("  {:<20} {}/{}", t.name, t.held, t.total);
    }
    for a in &m.artifacts {
        println!("wrote {}", a.display());
    }
    if m.all_bounds_hold {
        Ok(())
    } else {
        Err(Failure::Suite("some bounds do not hold".into()))
    }
}

fn analyze(ctx: &Ctx, matrix: &Path, labels: Option<&Path>, column: usize, top_k: usize) -> Result<(), Error> {
    ctx.check_free(&["analysis.csv", "singular_values.csv"])?;
    let m = io::parse_matrix(&io::read_text(matrix)?)?;
    let y = match labels {
        Some(path) => io::parse_labels(&io::read_text(path)?)?.0,
        None => {
            let s = m
                .structure
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("matrix has no structure; pass --labels".into()))?;
            clean_labels(s)
        }
    };
    if column >= y.classes() {
        return Err(Error::InvalidArgument(format!("column {column} out of range")));
    }
    let target: DVector<f64> = y.values().column(column).into_owned();
    let r = alignment_report(&m.values, &target, top_k)?;
    let (head, tail) = spectrum_gap(&m.values, top_k)?;
    println!(
        "top_k={top_k} |Pi_I y|={:.6} |Pi_N y|={:.6} ratio={:.6} head={head:.6} tail={tail:.6}{}",
        r.pi_i_norm,
        r.pi_n_norm,
        r.ratio,
        if r.cutoff_tie { " (tie at cutoff)" } else { "" }
    );
    ctx.write(
        "analysis.csv",
        &format!(
            "top_k,pi_i_norm,pi_n_norm,ratio,head_mass,tail_mass,cutoff_tie,target_kind\n{top_k},{},{},{},{head},{tail},{},{}\n",
            r.pi_i_norm,
            r.pi_n_norm,
            r.ratio,
            r.cutoff_tie,
            y.kind()
        ),
    )?;
    let mut sv = String::from("index,singular_value\n");
    for (i, v) in r.singular_values.iter().enumerate() {
        sv.push_str(&format!("{i},{v}\n"));
    }
    ctx.write("singular_values.csv", &sv)?;
    Ok(())
}
