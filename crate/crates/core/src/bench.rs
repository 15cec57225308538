//! Experiment harness: perfect-validation parameter selection, the label-noise
//! sweep and the accuracy-versus-training-size tables.
//!
//! Each (dataset, label count, noise, repetition) cell is an independent task
//! with its own keyed seeds. Tasks run on the current rayon pool and results
//! are sorted before output, so CSV bytes do not depend on the thread count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    self, predict, BelkinBasis, ClassifierSolution, LabelVector, Method, DEFAULT_ETA,
};
use crate::data::{self, SbmSpec};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::io::{self, fmt_f64};
use crate::rng::{self, Purpose};
use crate::spectral::{self, EigenPairs, SpectralContext};

/// Points per hyper-parameter grid.
pub const GRID_POINTS: usize = 51;

/// Candidate hyper-parameters per method.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub zhou: Vec<f64>,
    pub belkin: Vec<usize>,
    pub robust: Vec<f64>,
}

impl GridSpec {
    /// `10^(-5 + 10k/50)` for `k = 0..=50`.
    pub fn zhou_default() -> Vec<f64> {
        (0..GRID_POINTS)
            .map(|k| 10f64.powf(-5.0 + 10.0 * k as f64 / (GRID_POINTS - 1) as f64))
            .collect()
    }

    /// `1..=51`, capped at `n`.
    pub fn belkin_default(n: usize) -> Vec<usize> {
        (1..=GRID_POINTS.min(n)).collect()
    }

    /// `lambda1 k / 52` for `k = 1..=51`, strictly inside `(0, lambda1)`.
    pub fn robust_default(lambda1: f64) -> Vec<f64> {
        (1..=GRID_POINTS)
            .map(|k| lambda1 * k as f64 / (GRID_POINTS + 1) as f64)
            .collect()
    }

    /// Default grids, with `eta lambda1` appended to the robust grid so the
    /// validated robust accuracy always dominates the parameter-free one.
    pub fn for_context(ctx: &SpectralContext, eta: f64) -> Self {
        let mut robust = Self::robust_default(ctx.lambda1());
        robust.push(eta * ctx.lambda1());
        Self {
            zhou: Self::zhou_default(),
            belkin: Self::belkin_default(ctx.n()),
            robust,
        }
    }
}

/// Fraction of unlabelled nodes whose predicted sign matches `truth`.
pub fn accuracy(sol: &ClassifierSolution, truth: &[i8], labels: &LabelVector) -> Result<f64> {
    if truth.len() != sol.scores.len() || labels.n() != sol.scores.len() {
        return Err(Error::DimensionMismatch {
            expected: sol.scores.len(),
            got: truth.len().min(labels.n()),
        });
    }
    let pred = predict(sol);
    let mut total = 0usize;
    let mut correct = 0usize;
    for i in 0..truth.len() {
        if labels.values()[i] == 0 {
            total += 1;
            correct += usize::from(pred[i] == truth[i]);
        }
    }
    if total == 0 {
        return Err(Error::EmptyEvaluationSet);
    }
    Ok(correct as f64 / total as f64)
}

/// Outcome of a validation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub param: f64,
    pub accuracy: f64,
}

/// Evaluate every grid point of `method` by its test accuracy and return the
/// best one; ties go to the smallest parameter. Failing points are skipped.
/// `PfRobust` has no grid and is solved once with `eta`.
pub fn perfect_validation(
    ctx: &SpectralContext,
    labels: &LabelVector,
    truth: &[i8],
    method: Method,
    grid: &GridSpec,
    eigenpairs: Option<&EigenPairs>,
    options: &SolveOptions,
) -> Result<Validation> {
    let candidates: Vec<f64> = match method {
        Method::Zhou => grid.zhou.clone(),
        Method::Belkin => grid.belkin.iter().map(|&p| p as f64).collect(),
        Method::Robust => grid.robust.clone(),
        Method::PfRobust => vec![options.eta],
    };
    if candidates.is_empty() {
        return Err(Error::InvalidInput(format!("empty grid for {method}")));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[a].total_cmp(&candidates[b]));
    let mut best: Option<Validation> = None;
    for k in order {
        let param = candidates[k];
        let solved = match method {
            Method::Zhou => classify::solve_zhou_gc(ctx, labels, param),
            Method::Robust => classify::solve_robust_gc(ctx, labels, param),
            Method::PfRobust => classify::solve_pf_robust_gc_with_eta(ctx, labels, param),
            Method::Belkin => match eigenpairs {
                Some(eig) => classify::solve_belk_gc_with(ctx, labels, param as usize, eig, options.belkin_basis),
                None => Err(Error::IncompleteBasis { have: 0, need: param as usize }),
            },
        };
        let acc = match solved.and_then(|sol| {
            let a = accuracy(&sol, truth, labels)?;
            Ok((sol.param.as_f64(), a))
        }) {
            Ok(v) => v,
            Err(e @ Error::EmptyEvaluationSet) => return Err(e),
            Err(e) => {
                log::warn!("{method} at {param:e} skipped: {e}");
                continue;
            }
        };
        if best.is_none_or(|b| acc.1 > b.accuracy) {
            best = Some(Validation {
                param: acc.0,
                accuracy: acc.1,
            });
        }
    }
    best.ok_or_else(|| Error::AllGridPointsFailed {
        method: method.to_string(),
    })
}

/// Solver settings shared by every task of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub eta: f64,
    pub belkin_basis: BelkinBasis,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            belkin_basis: BelkinBasis::default(),
        }
    }
}

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Two or more blocks with uniform intra/inter probabilities.
    Sbm {
        block_sizes: Vec<usize>,
        intra: f64,
        inter: f64,
        #[serde(default = "default_positive_blocks")]
        positive_blocks: Vec<usize>,
        seed: u64,
    },
    Karate,
    Chain {
        n_per_side: usize,
        #[serde(default = "default_weak")]
        weak: f64,
    },
    /// User-supplied graph with a full `node,label` truth table. Relative paths
    /// resolve against the config file's directory.
    EdgeList {
        path: PathBuf,
        truth: PathBuf,
        #[serde(default)]
        largest_component: bool,
    },
}

fn default_positive_blocks() -> Vec<usize> {
    vec![0]
}

fn default_weak() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

/// A loaded graph with full ground truth.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: WeightedGraph,
    pub truth: Vec<i8>,
}

impl DatasetConfig {
    pub fn load(&self, base_dir: &Path) -> Result<Dataset> {
        let (graph, truth) = match &self.source {
            DatasetSource::Sbm {
                block_sizes,
                intra,
                inter,
                positive_blocks,
                seed,
            } => {
                let k = block_sizes.len();
                let spec = SbmSpec {
                    block_sizes: block_sizes.clone(),
                    connectivity: (0..k)
                        .map(|a| (0..k).map(|b| if a == b { *intra } else { *inter }).collect())
                        .collect(),
                    seed: *seed,
                };
                let sample = data::sbm_generate(&spec)?;
                let truth = sample.truth_with(positive_blocks);
                (sample.graph, truth)
            }
            DatasetSource::Karate => data::karate()?,
            DatasetSource::Chain { n_per_side, weak } => data::chain_graph(*n_per_side, *weak)?,
            DatasetSource::EdgeList {
                path,
                truth,
                largest_component,
            } => {
                let edges = io::read_edge_list(&base_dir.join(path))?;
                let labels = io::read_labels(&base_dir.join(truth), edges.n)?;
                let truth = labels.values().to_vec();
                if let Some(i) = truth.iter().position(|&t| t == 0) {
                    return Err(Error::InvalidInput(format!("truth table has no label for node {i}")));
                }
                if *largest_component {
                    let (g, kept) = WeightedGraph::largest_component(edges.n, &edges.edges)?;
                    let truth = kept.iter().map(|&i| truth[i]).collect();
                    (g, truth)
                } else {
                    (edges.to_graph()?, truth)
                }
            }
        };
        Ok(Dataset {
            name: self.name.clone(),
            graph,
            truth,
        })
    }
}

/// How training-set sizes follow from fractions of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeRule {
    /// `floor(f n)`; sizes of 0 are skipped and 1 becomes 2.
    #[default]
    FloorSkipZero,
    /// `round(f n)`, at least 2.
    RoundMinTwo,
}

impl SizeRule {
    pub fn size(&self, fraction: f64, n: usize) -> Option<usize> {
        let x = fraction * n as f64;
        match self {
            SizeRule::FloorSkipZero => match x.floor() as usize {
                0 => None,
                1 => Some(2),
                s => Some(s),
            },
            SizeRule::RoundMinTwo => Some((x.round() as usize).max(2)),
        }
    }
}

/// Experiment configuration. Unset fields take the defaults of the chosen
/// experiment family; [`BenchConfig::resolve`] fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub label_counts: Option<Vec<usize>>,
    pub label_fractions: Option<Vec<f64>>,
    pub size_rule: Option<SizeRule>,
    pub noise: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub belkin_basis: Option<BelkinBasis>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub datasets: Vec<DatasetConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Noise,
    Accuracy,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Noise => "noise",
            ExperimentKind::Accuracy => "accuracy",
        }
    }
}

pub const DEFAULT_SEED: u64 = 2019;

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&io::read_text(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fill unset fields with the family defaults and validate.
    pub fn resolve(mut self, kind: ExperimentKind) -> Result<Self> {
        self.seed.get_or_insert(DEFAULT_SEED);
        self.methods.get_or_insert_with(|| Method::ALL.to_vec());
        self.eta.get_or_insert(DEFAULT_ETA);
        self.belkin_basis.get_or_insert_with(BelkinBasis::default);
        match kind {
            ExperimentKind::Noise => {
                self.repetitions.get_or_insert(50);
                if self.label_fractions.is_none() {
                    self.label_counts.get_or_insert_with(|| vec![4, 10, 20, 40, 80]);
                }
                self.noise.get_or_insert_with(|| vec![0.0, 0.1, 0.2, 0.3, 0.4]);
                if self.datasets.is_empty() {
                    for (name, inter) in [("sbm_inter30", 0.3), ("sbm_inter50", 0.5)] {
                        self.datasets.push(DatasetConfig {
                            name: name.into(),
                            source: DatasetSource::Sbm {
                                block_sizes: vec![100, 100],
                                intra: 0.7,
                                inter,
                                positive_blocks: vec![0],
                                seed: 7,
                            },
                        });
                    }
                }
            }
            ExperimentKind::Accuracy => {
                self.repetitions.get_or_insert(20);
                if self.label_counts.is_none() {
                    self.label_fractions
                        .get_or_insert_with(|| vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5]);
                }
                self.noise.get_or_insert_with(|| vec![0.0]);
                if self.datasets.is_empty() {
                    self.datasets.push(DatasetConfig {
                        name: "karate".into(),
                        source: DatasetSource::Karate,
                    });
                }
            }
        }
        if self.label_fractions.is_some() {
            self.size_rule.get_or_insert_with(SizeRule::default);
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.repetitions == Some(0) {
            return bad("repetitions must be positive");
        }
        if self.methods.as_ref().is_some_and(|m| m.is_empty()) {
            return bad("no methods selected");
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta < 1.0) {
                return Err(Error::EtaOutOfRange(eta));
            }
        }
        if let Some(noise) = &self.noise {
            if noise.iter().any(|f| !(0.0..1.0).contains(f)) {
                return bad("noise fractions must lie in [0, 1)");
            }
        }
        if let Some(fr) = &self.label_fractions {
            if fr.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                return bad("label fractions must lie in (0, 1]");
            }
        }
        if self.label_counts.is_some() && self.label_fractions.is_some() {
            return bad("give either label_counts or label_fractions, not both");
        }
        let mut names: Vec<&str> = self.datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("dataset names must be unique");
        }
        Ok(())
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            eta: self.eta.unwrap_or(DEFAULT_ETA),
            belkin_basis: self.belkin_basis.unwrap_or_default(),
        }
    }

    fn sizes_for(&self, n: usize) -> Vec<usize> {
        let mut sizes: Vec<usize> = match (&self.label_counts, &self.label_fractions) {
            (Some(c), _) => c.clone(),
            (None, Some(f)) => {
                let rule = self.size_rule.unwrap_or_default();
                f.iter().filter_map(|&x| rule.size(x, n)).collect()
            }
            (None, None) => Vec::new(),
        };
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }
}

/// One method's result on one repetition of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: Method,
    pub n_labels: usize,
    pub noise: f64,
    pub rep: usize,
    pub accuracy: f64,
    pub param: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub dataset: String,
    pub method: Method,
    pub n_labels: usize,
    pub noise: f64,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
}

pub const RESULTS_HEADER: &str = "dataset,method,n_labels,noise,rep,accuracy,param";
pub const AGGREGATE_HEADER: &str = "dataset,method,n_labels,noise,mean,std,min,max";

impl ExperimentResult {
    /// Mean, sample standard deviation, min and max per
    /// (dataset, method, n_labels, noise), in first-appearance order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut groups: Vec<(AggregateRow, Vec<f64>)> = Vec::new();
        for r in &self.rows {
            let pos = groups.iter().position(|(g, _)| {
                g.dataset == r.dataset && g.method == r.method && g.n_labels == r.n_labels && g.noise == r.noise
            });
            let idx = pos.unwrap_or_else(|| {
                groups.push((
                    AggregateRow {
                        dataset: r.dataset.clone(),
                        method: r.method,
                        n_labels: r.n_labels,
                        noise: r.noise,
                        mean: 0.0,
                        std: 0.0,
                        min: 0.0,
                        max: 0.0,
                    },
                    Vec::new(),
                ));
                groups.len() - 1
            });
            groups[idx].1.push(r.accuracy);
        }
        groups
            .into_iter()
            .map(|(mut g, acc)| {
                let m = acc.len() as f64;
                g.mean = acc.iter().sum::<f64>() / m;
                g.std = if acc.len() > 1 {
                    (acc.iter().map(|a| (a - g.mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
                } else {
                    0.0
                };
                g.min = acc.iter().copied().fold(f64::INFINITY, f64::min);
                g.max = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                g
            })
            .collect()
    }

    /// Aggregate row for one cell, if present.
    pub fn cell(&self, dataset: &str, method: Method, n_labels: usize, noise: f64) -> Option<AggregateRow> {
        self.aggregate()
            .into_iter()
            .find(|a| a.dataset == dataset && a.method == method && a.n_labels == n_labels && a.noise == noise)
    }

    pub fn results_csv(&self) -> String {
        let mut out = format!("{RESULTS_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.dataset,
                r.method,
                r.n_labels,
                fmt_f64(r.noise),
                r.rep,
                fmt_f64(r.accuracy),
                fmt_f64(r.param)
            ));
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_HEADER}\n");
        for a in self.aggregate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                a.dataset,
                a.method,
                a.n_labels,
                fmt_f64(a.noise),
                fmt_f64(a.mean),
                fmt_f64(a.std),
                fmt_f64(a.min),
                fmt_f64(a.max)
            ));
        }
        out
    }
}

/// Per-dataset state shared read-only by all tasks.
struct Prepared {
    name: String,
    ctx: SpectralContext,
    truth: Vec<i8>,
    grid: GridSpec,
    eigenpairs: Option<EigenPairs>,
}

fn prepare(ds: Dataset, cfg: &BenchConfig) -> Result<Prepared> {
    let options = cfg.options();
    let ctx = SpectralContext::new(ds.graph)?;
    let grid = GridSpec::for_context(&ctx, options.eta);
    let methods = cfg.methods.as_deref().unwrap_or(&Method::ALL);
    let eigenpairs = if methods.contains(&Method::Belkin) {
        let extra = usize::from(options.belkin_basis == BelkinBasis::SkipNull);
        let p = (grid.belkin.last().copied().unwrap_or(1) + extra).min(ctx.n());
        Some(spectral::smallest_eigenpairs(&ctx, p)?)
    } else {
        None
    };
    Ok(Prepared {
        name: ds.name,
        ctx,
        truth: ds.truth,
        grid,
        eigenpairs,
    })
}

#[derive(Debug, Clone, Copy)]
struct Task {
    dataset: usize,
    n_labels: usize,
    noise_index: usize,
    rep: usize,
}

fn run_task(p: &Prepared, cfg: &BenchConfig, task: Task) -> Result<Vec<ResultRow>> {
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let noise = cfg.noise.as_ref().map_or(0.0, |v| v[task.noise_index]);
    // The clean sample and flip pattern depend on (dataset, size, rep) only,
    // so every noise level perturbs the same labelled set.
    let key = [task.dataset as u64, task.n_labels as u64, task.rep as u64];
    let clean = data::sample_labels(&p.truth, task.n_labels, rng::key(seed, Purpose::Experiment, &key))?;
    let labels = data::flip_labels(&clean, noise, rng::key(seed, Purpose::FlipLabels, &key))?;
    let options = cfg.options();
    let mut rows = Vec::new();
    for &method in cfg.methods.as_deref().unwrap_or(&Method::ALL) {
        let v = perfect_validation(
            &p.ctx,
            &labels,
            &p.truth,
            method,
            &p.grid,
            p.eigenpairs.as_ref(),
            &options,
        )?;
        let param = match method {
            Method::PfRobust => options.eta * p.ctx.lambda1(),
            _ => v.param,
        };
        rows.push(ResultRow {
            dataset: p.name.clone(),
            method,
            n_labels: task.n_labels,
            noise,
            rep: task.rep,
            accuracy: v.accuracy,
            param,
        });
    }
    Ok(rows)
}

fn run(cfg: &BenchConfig, datasets: Vec<Dataset>) -> Result<ExperimentResult> {
    let prepared = datasets
        .into_par_iter()
        .map(|d| prepare(d, cfg))
        .collect::<Result<Vec<_>>>()?;
    let reps = cfg.repetitions.unwrap_or(1);
    let noise_levels = cfg.noise.as_ref().map_or(1, Vec::len);
    let mut tasks = Vec::new();
    for (d, p) in prepared.iter().enumerate() {
        let n = p.ctx.n();
        for s in cfg.sizes_for(n) {
            if s >= n {
                log::warn!("{}: {s} labels leave no unlabelled node, size skipped", p.name);
                continue;
            }
            for noise_index in 0..noise_levels {
                for rep in 0..reps {
                    tasks.push(Task {
                        dataset: d,
                        n_labels: s,
                        noise_index,
                        rep,
                    });
                }
            }
        }
    }
    // Tasks are generated in output order; collect preserves it.
    let chunks = tasks
        .into_par_iter()
        .map(|t| run_task(&prepared[t.dataset], cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        rows: chunks.into_iter().flatten().collect(),
    })
}

fn load_datasets(cfg: &BenchConfig, base_dir: &Path) -> Result<Vec<Dataset>> {
    cfg.datasets.iter().map(|d| d.load(base_dir)).collect()
}

/// Label-noise sweep over label counts and flip fractions.
pub fn run_noise_experiment(cfg: &BenchConfig, base_dir: &Path) -> Result<ExperimentResult> {
    let cfg = cfg.clone().resolve(ExperimentKind::Noise)?;
    run(&cfg, load_datasets(&cfg, base_dir)?)
}

/// Accuracy against training-set size.
pub fn run_accuracy_experiment(cfg: &BenchConfig, base_dir: &Path) -> Result<ExperimentResult> {
    let cfg = cfg.clone().resolve(ExperimentKind::Accuracy)?;
    run(&cfg, load_datasets(&cfg, base_dir)?)
}

/// Run a resolved experiment on already loaded datasets.
pub fn run_on(cfg: &BenchConfig, kind: ExperimentKind, datasets: Vec<Dataset>) -> Result<ExperimentResult> {
    let cfg = cfg.clone().resolve(kind)?;
    run(&cfg, datasets)
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub results: PathBuf,
    pub aggregate: PathBuf,
    pub config: PathBuf,
}

/// Write `<kind>_results.csv`, `<kind>_aggregate.csv` and the resolved config
/// `<kind>_config.toml` into `dir`.
pub fn write_outputs(
    dir: &Path,
    kind: ExperimentKind,
    resolved: &BenchConfig,
    result: &ExperimentResult,
) -> Result<OutputFiles> {
    let files = OutputFiles {
        results: dir.join(format!("{}_results.csv", kind.as_str())),
        aggregate: dir.join(format!("{}_aggregate.csv", kind.as_str())),
        config: dir.join(format!("{}_config.toml", kind.as_str())),
    };
    io::write_text(&files.results, &result.results_csv())?;
    io::write_text(&files.aggregate, &result.aggregate_csv())?;
    io::write_text(&files.config, &resolved.to_toml()?)?;
    Ok(files)
}
