//! Command-line front end.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{self, BenchConfig, ExperimentKind};
use crate::classify::{self, BelkinBasis, ClassifierSolution, LabelVector, DEFAULT_ETA};
use crate::data::{self, Manifest, SbmSpec};
use crate::error::{Error, Result};
use crate::graph::{KernelSpec, WeightedGraph};
use crate::io;
use crate::oos::{self, DegreeConvention, OosModel};
use crate::spectral::{self, SpectralContext, DENSE_EIGEN_THRESHOLD};

/// Margin added around the training points when sizing an evaluation grid.
pub const GRID_MARGIN: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "robustgc", version, about = "Graph-based semi-supervised binary classification")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or validate a graph and write it as an edge list.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Print lambda1 and the smallest Laplacian eigenvalues of a graph.
    Eig(EigArgs),
    /// Train a classifier on a graph and write per-node scores.
    Solve(SolveArgs),
    /// Run an experiment from a config file.
    Bench(BenchArgs),
    /// Score a grid around a two-moons sample with the out-of-sample extension.
    Oos(OosArgs),
    /// Generate a dataset.
    #[command(subcommand)]
    Data(DataCmd),
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Symmetrized k-nearest-neighbour graph of a point file.
    Knn {
        #[arg(long)]
        k: usize,
        points: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dense Gaussian kernel graph of a point file.
    Kernel {
        #[arg(long)]
        sigma: f64,
        points: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate an edge list and rewrite it in canonical form.
    Edges {
        edges: PathBuf,
        /// Keep only the largest connected component.
        #[arg(long)]
        largest_component: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Number of smallest eigenpairs to report.
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Optional CSV of eigenvectors (`node,v0,v1,...`).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolveMethod {
    Robust,
    Pf,
    Zhou,
    Belkin,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub method: SolveMethod,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Regularization for `robust` and `zhou`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Ratio gamma / lambda1 for `pf`.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Number of eigenvectors for `belkin`.
    #[arg(long)]
    pub p: Option<usize>,
    /// Use eigenvectors 1..=p instead of 0..p for `belkin`.
    #[arg(long)]
    pub skip_null: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BenchKind {
    Noise,
    Accuracy,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(value_enum)]
    pub kind: BenchKind,
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OosArgs {
    #[arg(long)]
    pub sigma: f64,
    /// Cells per grid side.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 50)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 5)]
    pub labels_per_class: usize,
    /// Standard deviation of the moons noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    pub eta: f64,
    /// Include k(x,x) in the degree of query points.
    #[arg(long)]
    pub self_degree: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DataCmd {
    /// Stochastic block model with uniform intra/inter probabilities.
    Sbm {
        #[arg(long, value_delimiter = ',', default_value = "100,100")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.7)]
        intra: f64,
        #[arg(long, default_value_t = 0.3)]
        inter: f64,
        /// Edge list path; the truth table goes to `<output>.truth.csv`.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Path graph with a weak middle edge.
    Chain {
        #[arg(long, default_value_t = 10)]
        n_per_side: usize,
        #[arg(long, default_value_t = 0.1)]
        weak: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Two-moons point cloud with labels.
    Moons {
        #[arg(long, default_value_t = 50)]
        n_per_class: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bundled karate club graph.
    Karate {
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Parse arguments, run, and return the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be positive".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        return pool.install(|| dispatch(cli));
    }
    dispatch(cli)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(bench::DEFAULT_SEED);
    match &cli.command {
        Command::Graph(g) => cmd_graph(g),
        Command::Eig(a) => cmd_eig(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a, cli.seed),
        Command::Oos(a) => cmd_oos(a, seed),
        Command::Data(d) => cmd_data(d, seed),
    }
}

/// Write `text` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn emit_graph(graph: &WeightedGraph, output: Option<&Path>, manifest: Manifest) -> Result<()> {
    emit(output, &io::format_edge_list(graph))?;
    if let Some(p) = output {
        manifest.file(p).write(&data::manifest_path(p))?;
    }
    Ok(())
}

fn cmd_graph(cmd: &GraphCmd) -> Result<()> {
    match cmd {
        GraphCmd::Knn { k, points, output } => {
            let pts = io::read_points(points)?.points;
            let g = WeightedGraph::knn_graph(&pts, *k)?;
            let m = Manifest::new("knn", None)
                .param("k", *k as i64)
                .param("points", points.display().to_string());
            emit_graph(&g, output.as_deref(), m)
        }
        GraphCmd::Kernel { sigma, points, output } => {
            let pts = io::read_points(points)?.points;
            let g = WeightedGraph::kernel_graph(&pts, &KernelSpec::gaussian(*sigma)?)?;
            let m = Manifest::new("gaussian_kernel", None)
                .param("sigma", *sigma)
                .param("points", points.display().to_string());
            emit_graph(&g, output.as_deref(), m)
        }
        GraphCmd::Edges {
            edges,
            largest_component,
            output,
        } => {
            let list = io::read_edge_list(edges)?;
            let g = if *largest_component {
                let (g, kept) = WeightedGraph::largest_component(list.n, &list.edges)?;
                if kept.len() < list.n {
                    log::warn!("kept {} of {} nodes; indices renumbered in order", kept.len(), list.n);
                }
                g
            } else {
                list.to_graph()?
            };
            let m = Manifest::new("edges", None)
                .param("source", edges.display().to_string())
                .param("largest_component", *largest_component);
            emit_graph(&g, output.as_deref(), m)
        }
    }
}

fn load_context(path: &Path) -> Result<SpectralContext> {
    SpectralContext::new(io::read_edge_list(path)?.to_graph()?)
}

fn cmd_eig(a: &EigArgs) -> Result<()> {
    let ctx = load_context(&a.graph)?;
    let eig = spectral::smallest_eigenpairs(&ctx, a.p)?;
    eprintln!("lambda1 = {}", io::fmt_f64(ctx.lambda1()));
    let mut out = String::from("index,eigenvalue\n");
    for (l, v) in eig.values().iter().enumerate() {
        out.push_str(&format!("{l},{}\n", io::fmt_f64(*v)));
    }
    if let Some(path) = &a.output {
        let header: Vec<String> = (0..eig.count()).map(|l| format!("v{l}")).collect();
        let mut csv = format!("node,{}\n", header.join(","));
        for i in 0..ctx.n() {
            let row: Vec<String> = (0..eig.count()).map(|l| io::fmt_f64(eig.vector(l)[i])).collect();
            csv.push_str(&format!("{i},{}\n", row.join(",")));
        }
        io::write_text(path, &csv)?;
    }
    emit(None, &out)
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let ctx = load_context(&a.graph)?;
    let labels = io::read_labels(&a.labels, ctx.n())?;
    let need = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| Error::InvalidInput(format!("{flag} is required for this method")))
    };
    let sol: ClassifierSolution = match a.method {
        SolveMethod::Robust => classify::solve_robust_gc(&ctx, &labels, need(a.gamma, "--gamma")?)?,
        SolveMethod::Pf => classify::solve_pf_robust_gc_with_eta(&ctx, &labels, a.eta.unwrap_or(DEFAULT_ETA))?,
        SolveMethod::Zhou => classify::solve_zhou_gc(&ctx, &labels, need(a.gamma, "--gamma")?)?,
        SolveMethod::Belkin => {
            let p = a.p.ok_or_else(|| Error::InvalidInput("--p is required for belkin".into()))?;
            let basis = if a.skip_null {
                BelkinBasis::SkipNull
            } else {
                BelkinBasis::IncludeNull
            };
            let extra = usize::from(a.skip_null);
            if p == 0 || p + extra > ctx.n() {
                return Err(Error::PTooLarge { p: p + extra, n: ctx.n() });
            }
            let eig = spectral::smallest_eigenpairs(&ctx, p + extra)?;
            classify::solve_belk_gc_with(&ctx, &labels, p, &eig, basis)?
        }
    };
    report_solution(&ctx, &labels, &sol)?;
    emit(a.output.as_deref(), &io::format_scores(&sol))
}

fn report_solution(ctx: &SpectralContext, labels: &LabelVector, sol: &ClassifierSolution) -> Result<()> {
    use crate::classify::{Method, MethodParam};
    let f = io::fmt_f64;
    eprintln!("lambda1 = {}", f(ctx.lambda1()));
    match sol.param {
        MethodParam::Gamma(g) => eprintln!("gamma = {}", f(g)),
        MethodParam::P(p) => eprintln!("p = {p}"),
    }
    eprintln!("residual = {}", f(sol.residual));
    eprintln!("iterations = {}", sol.iterations);
    let y = labels.as_f64();
    match (sol.method, sol.param) {
        (Method::Robust | Method::PfRobust, MethodParam::Gamma(g)) => {
            let mut p0y = y;
            ctx.project_out_v0(&mut p0y);
            eprintln!("tolerance = {}", f(1e-10 * crate::linalg::norm(&p0y)));
            let psd = ctx.n() <= DENSE_EIGEN_THRESHOLD && ctx.graph().is_positive_semidefinite();
            eprintln!("condition_bound = {}", f(classify::condition_number_bound(ctx, g, psd)?));
        }
        (Method::Zhou, MethodParam::Gamma(g)) => {
            eprintln!("tolerance = {}", f(1e-10 * g * crate::linalg::norm(&y)));
        }
        _ => {}
    }
    Ok(())
}

fn cmd_bench(a: &BenchArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg = BenchConfig::read(&a.config)?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    let kind = match a.kind {
        BenchKind::Noise => ExperimentKind::Noise,
        BenchKind::Accuracy => ExperimentKind::Accuracy,
    };
    let base = a.config.parent().unwrap_or(Path::new("."));
    let resolved = cfg.resolve(kind)?;
    let out_dir = a
        .out_dir
        .clone()
        .or_else(|| resolved.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("."));
    let result = match kind {
        ExperimentKind::Noise => bench::run_noise_experiment(&resolved, base)?,
        ExperimentKind::Accuracy => bench::run_accuracy_experiment(&resolved, base)?,
    };
    let files = bench::write_outputs(&out_dir, kind, &resolved, &result)?;
    eprintln!("wrote {}", files.results.display());
    eprintln!("wrote {}", files.aggregate.display());
    eprintln!("wrote {}", files.config.display());
    Ok(())
}

fn cmd_oos(a: &OosArgs, seed: u64) -> Result<()> {
    if a.grid == 0 {
        return Err(Error::InvalidInput("--grid must be positive".into()));
    }
    let kernel = KernelSpec::gaussian(a.sigma)?;
    if !(a.eta > 0.0 && a.eta < 1.0) {
        return Err(Error::EtaOutOfRange(a.eta));
    }
    let (points, truth) = data::moons_generate(a.n_per_class, a.noise, seed)?;
    let labels = data::sample_labels_per_class(&truth, a.labels_per_class, seed)?;
    let (model, _) = OosModel::train(points, kernel, &labels, a.eta)?;
    let model = model.with_convention(if a.self_degree {
        DegreeConvention::SelfInclusive
    } else {
        DegreeConvention::TrainingOnly
    });
    let bounds = oos::grid_bounds(model.points(), GRID_MARGIN)?;
    let cells = oos::evaluate_grid(&model, bounds, a.grid)?;
    let out_of_range = cells.iter().filter(|c| c.label == 0).count();
    eprintln!("gamma = {}", io::fmt_f64(model.gamma()));
    eprintln!("out_of_range = {out_of_range} of {}", cells.len());
    emit(a.output.as_deref(), &io::format_grid(&cells))
}

fn cmd_data(cmd: &DataCmd, seed: u64) -> Result<()> {
    match cmd {
        DataCmd::Sbm {
            sizes,
            intra,
            inter,
            output,
        } => {
            let k = sizes.len();
            let spec = SbmSpec {
                block_sizes: sizes.clone(),
                connectivity: (0..k)
                    .map(|a| (0..k).map(|b| if a == b { *intra } else { *inter }).collect())
                    .collect(),
                seed,
            };
            let sample = data::sbm_generate(&spec)?;
            let truth = sample.truth();
            write_graph_dataset(
                output,
                &sample.graph,
                &truth,
                Manifest::new("sbm", Some(seed))
                    .param("block_sizes", sizes.iter().map(|&s| s as i64).collect::<Vec<_>>())
                    .param("intra", *intra)
                    .param("inter", *inter)
                    .param("seed_used", sample.seed_used as i64),
            )
        }
        DataCmd::Chain {
            n_per_side,
            weak,
            output,
        } => {
            let (g, truth) = data::chain_graph(*n_per_side, *weak)?;
            write_graph_dataset(
                output,
                &g,
                &truth,
                Manifest::new("chain", None)
                    .param("n_per_side", *n_per_side as i64)
                    .param("weak", *weak),
            )
        }
        DataCmd::Moons {
            n_per_class,
            noise,
            output,
        } => {
            let (pts, truth) = data::moons_generate(*n_per_class, *noise, seed)?;
            io::write_text(output, &io::format_points(&pts, Some(&truth)))?;
            Manifest::new("moons", Some(seed))
                .param("n_per_class", *n_per_class as i64)
                .param("noise", *noise)
                .file(output)
                .write(&data::manifest_path(output))
        }
        DataCmd::Karate { output } => {
            let (g, truth) = data::karate()?;
            write_graph_dataset(output, &g, &truth, Manifest::new("karate", None))
        }
    }
}

fn truth_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".truth.csv");
    name.into()
}

fn write_graph_dataset(output: &Path, graph: &WeightedGraph, truth: &[i8], manifest: Manifest) -> Result<()> {
    io::write_edge_list(output, graph)?;
    let tp = truth_path(output);
    let mut csv = String::from("node,label\n");
    for (i, t) in truth.iter().enumerate() {
        csv.push_str(&format!("{i},{t}\n"));
    }
    io::write_text(&tp, &csv)?;
    manifest.file(output).file(&tp).write(&data::manifest_path(output))
}
