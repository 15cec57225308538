//! Dataset generators, label sampling and noise, bundled graphs and manifests.
//!
//! Every generator is a pure function of its arguments and seed.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classify::LabelVector;
use crate::error::{Error, Result};
use crate::graph::{PointCloud, WeightedGraph};
use crate::io;
use crate::rng::{self, Purpose};

/// Resampling budget for disconnected SBM draws.
pub const SBM_MAX_ATTEMPTS: usize = 100;
const LABEL_MAX_ATTEMPTS: u64 = 10_000;

const KARATE_EDGES: &str = include_str!("../assets/karate.tsv");
const KARATE_LABELS: &str = include_str!("../assets/karate_labels.csv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub connectivity: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SbmSpec {
    /// Blocks of size `size` with `intra` on the diagonal and `inter` elsewhere.
    pub fn uniform(blocks: usize, size: usize, intra: f64, inter: f64, seed: u64) -> Self {
        let connectivity = (0..blocks)
            .map(|a| (0..blocks).map(|b| if a == b { intra } else { inter }).collect())
            .collect();
        Self {
            block_sizes: vec![size; blocks],
            connectivity,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.block_sizes.len();
        if k == 0 || self.block_sizes.contains(&0) {
            return Err(Error::InvalidInput("block sizes must be positive".into()));
        }
        if self.connectivity.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.connectivity.len(),
            });
        }
        for (a, row) in self.connectivity.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            for (b, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidInput(format!("probability {p} at ({a}, {b}) not in [0, 1]")));
                }
                if p != self.connectivity[b][a] {
                    return Err(Error::InvalidInput(format!("connectivity not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SbmSample {
    pub graph: WeightedGraph,
    /// Block index of each node.
    pub blocks: Vec<usize>,
    /// Seed that produced the accepted draw (`spec.seed + attempt`).
    pub seed_used: u64,
    pub attempts: usize,
}

impl SbmSample {
    /// `+1` for nodes in `positive_blocks`, `-1` elsewhere.
    pub fn truth_with(&self, positive_blocks: &[usize]) -> Vec<i8> {
        self.blocks
            .iter()
            .map(|b| if positive_blocks.contains(b) { 1 } else { -1 })
            .collect()
    }

    /// Block 0 against the rest.
    pub fn truth(&self) -> Vec<i8> {
        self.truth_with(&[0])
    }
}

/// Draw an SBM graph. Pair `(i, j)` is an edge iff its keyed uniform falls
/// below the block-pair probability, so a pair's outcome does not depend on
/// any other pair. Disconnected draws are retried with `seed + 1`, ...
pub fn sbm_generate(spec: &SbmSpec) -> Result<SbmSample> {
    spec.validate()?;
    let blocks: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = blocks.len();
    for attempt in 0..SBM_MAX_ATTEMPTS {
        let seed = spec.seed.wrapping_add(attempt as u64);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let p = spec.connectivity[blocks[i]][blocks[j]];
                if rng::uniform(seed, Purpose::SbmEdge, &[i as u64, j as u64]) < p {
                    edges.push((i, j, 1.0));
                }
            }
        }
        match WeightedGraph::from_edge_list(n, &edges) {
            Ok(graph) => {
                return Ok(SbmSample {
                    graph,
                    blocks,
                    seed_used: seed,
                    attempts: attempt + 1,
                })
            }
            Err(Error::Disconnected { .. } | Error::IsolatedNode(_)) => {
                log::debug!("SBM draw with seed {seed} disconnected, retrying");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DisconnectedAfterRetries {
        attempts: SBM_MAX_ATTEMPTS,
    })
}

/// Path on `2 n_per_side` nodes with unit weights except a middle edge of
/// weight `weak`. Truth is `+1` on the first half.
pub fn chain_graph(n_per_side: usize, weak: f64) -> Result<(WeightedGraph, Vec<i8>)> {
    if n_per_side == 0 {
        return Err(Error::InvalidInput("chain needs at least one node per side".into()));
    }
    if !(weak > 0.0 && weak.is_finite()) {
        return Err(Error::InvalidWeight {
            i: n_per_side - 1,
            j: n_per_side,
            weight: weak,
        });
    }
    let n = 2 * n_per_side;
    let edges: Vec<_> = (0..n - 1)
        .map(|i| (i, i + 1, if i + 1 == n_per_side { weak } else { 1.0 }))
        .collect();
    let graph = WeightedGraph::from_edge_list(n, &edges)?;
    let truth = (0..n).map(|i| if i < n_per_side { 1 } else { -1 }).collect();
    Ok((graph, truth))
}

fn check_truth(truth: &[i8]) -> Result<()> {
    if let Some(i) = truth.iter().position(|&t| t != 1 && t != -1) {
        return Err(Error::InvalidInput(format!("truth at node {i} must be +1 or -1")));
    }
    if !(truth.contains(&1) && truth.contains(&-1)) {
        return Err(Error::InvalidInput("truth must contain both classes".into()));
    }
    Ok(())
}

/// Label `s` nodes chosen uniformly without replacement, redrawing until both
/// classes are present. Draw `a` uses the stream keyed by `(seed, a)`.
pub fn sample_labels(truth: &[i8], s: usize, seed: u64) -> Result<LabelVector> {
    let n = truth.len();
    if s > n || s < 2 {
        return Err(Error::CountTooLarge {
            requested: s,
            available: n,
        });
    }
    check_truth(truth)?;
    for attempt in 0..LABEL_MAX_ATTEMPTS {
        let mut stream = rng::stream(seed, Purpose::SampleLabels, &[attempt]);
        let picked = index::sample(&mut stream, n, s);
        let mut y = vec![0i8; n];
        for i in picked.iter() {
            y[i] = truth[i];
        }
        if y.contains(&1) && y.contains(&-1) {
            return LabelVector::new(y);
        }
    }
    Err(Error::InvalidInput(format!(
        "no label sample with both classes after {LABEL_MAX_ATTEMPTS} draws"
    )))
}

/// Label `per_class` nodes of each class, chosen uniformly within the class.
pub fn sample_labels_per_class(truth: &[i8], per_class: usize, seed: u64) -> Result<LabelVector> {
    check_truth(truth)?;
    if per_class == 0 {
        return Err(Error::CountTooLarge {
            requested: 0,
            available: truth.len(),
        });
    }
    let mut y = vec![0i8; truth.len()];
    for (tag, class) in [(0u64, 1i8), (1, -1)] {
        let members: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] == class).collect();
        if per_class > members.len() {
            return Err(Error::CountTooLarge {
                requested: per_class,
                available: members.len(),
            });
        }
        let mut stream = rng::stream(seed, Purpose::SampleLabels, &[u64::MAX, tag]);
        for k in index::sample(&mut stream, members.len(), per_class).iter() {
            y[members[k]] = class;
        }
    }
    LabelVector::new(y)
}

/// Number of labels flipped for a given fraction: `fraction * s` rounded half up.
pub fn flip_count(fraction: f64, s: usize) -> usize {
    (fraction * s as f64 + 0.5).floor() as usize
}

/// Negate `flip_count(fraction, s)` labelled entries chosen uniformly.
/// The choice depends only on the labelled set and the seed, so flipping twice
/// with the same seed restores the input.
pub fn flip_labels(labels: &LabelVector, fraction: f64, seed: u64) -> Result<LabelVector> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidInput(format!("noise fraction {fraction} not in [0, 1)")));
    }
    let labelled = labels.labelled();
    let count = flip_count(fraction, labelled.len()).min(labelled.len());
    let mut y = labels.values().to_vec();
    let mut stream = rng::stream(seed, Purpose::FlipLabels, &[]);
    for k in index::sample(&mut stream, labelled.len(), count).iter() {
        y[labelled[k]] = -y[labelled[k]];
    }
    LabelVector::from_raw(y)
}

/// Two interleaving half-circles. The upper arc `(cos t, sin t)` is `+1`, the
/// lower arc `(1 - cos t, 1/2 - sin t)` is `-1`, with `t` evenly spaced on
/// `[0, π]` and optional isotropic Gaussian noise.
pub fn moons_generate(n_per_class: usize, noise_std: f64, seed: u64) -> Result<(PointCloud, Vec<i8>)> {
    if n_per_class == 0 {
        return Err(Error::InvalidInput("moons need at least one point per class".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidInput(format!("noise std {noise_std} must be finite and >= 0")));
    }
    let t = |k: usize| {
        if n_per_class == 1 {
            0.0
        } else {
            std::f64::consts::PI * k as f64 / (n_per_class - 1) as f64
        }
    };
    let mut coords = Vec::with_capacity(4 * n_per_class);
    for k in 0..n_per_class {
        coords.extend([t(k).cos(), t(k).sin()]);
    }
    for k in 0..n_per_class {
        coords.extend([1.0 - t(k).cos(), 0.5 - t(k).sin()]);
    }
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut stream = rng::stream(seed, Purpose::Moons, &[]);
        for c in coords.iter_mut() {
            *c += normal.sample(&mut stream);
        }
    }
    let truth = (0..2 * n_per_class)
        .map(|i| if i < n_per_class { 1 } else { -1 })
        .collect();
    Ok((PointCloud::new(2, coords)?, truth))
}

/// The bundled karate club graph (34 nodes, 78 unit edges) and its two-faction truth.
pub fn karate() -> Result<(WeightedGraph, Vec<i8>)> {
    let graph = io::parse_edge_list(KARATE_EDGES, "karate.tsv")?.to_graph()?;
    let truth = io::parse_labels(KARATE_LABELS, "karate_labels.csv", graph.n())?;
    Ok((graph, truth.values().to_vec()))
}

/// A graph with full ground truth and an observed (possibly noisy) label set.
#[derive(Debug, Clone)]
pub struct LabelledDataset {
    pub graph: WeightedGraph,
    pub truth: Vec<i8>,
    pub observed: LabelVector,
}

impl LabelledDataset {
    pub fn new(graph: WeightedGraph, truth: Vec<i8>, observed: LabelVector) -> Result<Self> {
        for len in [truth.len(), observed.n()] {
            if len != graph.n() {
                return Err(Error::DimensionMismatch {
                    expected: graph.n(),
                    got: len,
                });
            }
        }
        check_truth(&truth)?;
        Ok(Self { graph, truth, observed })
    }
}

/// Record of how a generated file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub seed: Option<u64>,
    pub files: Vec<String>,
    pub params: BTreeMap<String, toml::Value>,
}

impl Manifest {
    pub fn new(generator: &str, seed: Option<u64>) -> Self {
        Self {
            generator: generator.to_string(),
            seed,
            files: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<toml::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn file(mut self, path: &Path) -> Self {
        self.files.push(path.display().to_string());
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_text(path, &self.to_toml()?)
    }
}

/// `out.tsv` -> `out.tsv.manifest.toml`.
pub fn manifest_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.toml");
    name.into()
}
