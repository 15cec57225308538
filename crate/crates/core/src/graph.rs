//! Weighted undirected graphs and their construction from edge lists or point clouds.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A set of points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// Build from row-major coordinates. Requires at least one point and finite values.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be positive".into()));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form whole points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rows[i].len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Axis-aligned bounding box as `(min, max)` per coordinate.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|c| {
                self.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[c]), hi.max(p[c]))
                })
            })
            .collect()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
}

/// A positive kernel `k(x, y) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            sigma,
        })
    }

    /// `exp(-|x - y|^2 / (2 sigma^2))`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Gaussian => {
                (-squared_distance(x, y) / (2.0 * self.sigma * self.sigma)).exp()
            }
        }
    }

    /// `k(x, x)`, constant for the kernels supported here.
    pub fn self_value(&self) -> f64 {
        match self.kind {
            KernelKind::Gaussian => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    /// Both directions of every edge are stored; rows sorted by column.
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
    /// Row-major `n x n`.
    Dense(Vec<f64>),
}

/// Symmetric non-negative weight matrix of a connected graph, with cached degrees.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    storage: Storage,
    degrees: Vec<f64>,
}

impl WeightedGraph {
    /// Build from undirected `(i, j, w)` triples. Repeating a pair with the
    /// same weight is tolerated; repeating it with a different weight is not.
    pub fn from_edge_list(n: usize, triples: &[(usize, usize, f64)]) -> Result<Self> {
        let pairs = collect_pairs(n, triples)?;
        let graph = Self::from_pairs(n, &pairs);
        graph.validate()?;
        Ok(graph)
    }

    /// Keep only the largest connected component (ties go to the component
    /// holding the smallest node). Returns the graph and the original index
    /// of every retained node.
    pub fn largest_component(
        n: usize,
        triples: &[(usize, usize, f64)],
    ) -> Result<(Self, Vec<usize>)> {
        let pairs = collect_pairs(n, triples)?;
        let full = Self::from_pairs(n, &pairs);
        let comps = full.components();
        let keep = comps
            .into_iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .unwrap_or_default();
        let mut new_index = vec![usize::MAX; n];
        for (k, &old) in keep.iter().enumerate() {
            new_index[old] = k;
        }
        let sub: BTreeMap<(usize, usize), f64> = pairs
            .into_iter()
            .filter(|((i, _), _)| new_index[*i] != usize::MAX)
            .map(|((i, j), w)| {
                let (a, b) = (new_index[i], new_index[j]);
                ((a.min(b), a.max(b)), w)
            })
            .collect();
        let graph = Self::from_pairs(keep.len(), &sub);
        graph.validate()?;
        Ok((graph, keep))
    }

    /// Dense kernel graph `w_ij = k(x_i, x_j)`, diagonal included.
    pub fn kernel_graph(points: &PointCloud, kernel: &KernelSpec) -> Result<Self> {
        let n = points.n();
        if n < 2 {
            return Err(Error::InvalidInput("a graph needs at least 2 points".into()));
        }
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(points.point(i), points.point(j));
                w[i * n + j] = k;
                w[j * n + i] = k;
            }
        }
        let degrees = w.chunks_exact(n).map(|row| row.iter().sum()).collect();
        let graph = Self {
            n,
            storage: Storage::Dense(w),
            degrees,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Symmetrized k-nearest-neighbour graph `(A + A^T) / 2` where `A` is the
    /// directed 0/1 kNN relation under the Euclidean distance. Distance ties
    /// go to the smaller node index.
    pub fn knn_graph(points: &PointCloud, k: usize) -> Result<Self> {
        let n = points.n();
        if n < 2 {
            return Err(Error::InvalidInput("a graph needs at least 2 points".into()));
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidInput(format!(
                "k must satisfy 1 <= k < n = {n}, got {k}"
            )));
        }
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
        for i in 0..n {
            cand.clear();
            cand.extend(
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (squared_distance(points.point(i), points.point(j)), j)),
            );
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(_, j) in &cand[..k] {
                *pairs.entry((i.min(j), i.max(j))).or_insert(0.0) += 0.5;
            }
        }
        let graph = Self::from_pairs(n, &pairs);
        graph.validate()?;
        Ok(graph)
    }

    fn from_pairs(n: usize, pairs: &BTreeMap<(usize, usize), f64>) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (&(i, j), &w) in pairs {
            rows[i].push((j, w));
            if i != j {
                rows[j].push((i, w));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut degrees = Vec::with_capacity(n);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            degrees.push(row.iter().map(|&(_, w)| w).sum());
            for (j, w) in row {
                cols.push(j);
                vals.push(w);
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            storage: Storage::Sparse {
                row_ptr,
                cols,
                vals,
            },
            degrees,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n >= 2 {
            let comps = self.components();
            if comps.len() > 1 {
                return Err(Error::Disconnected { components: comps });
            }
        }
        if let Some(i) = self.degrees.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::IsolatedNode(i));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Stored non-zero count (both directions, diagonal once).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse { cols, .. } => cols.len(),
            Storage::Dense(w) => w.iter().filter(|&&x| x != 0.0).count(),
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
                cols[lo..hi]
                    .binary_search(&j)
                    .map(|k| vals[lo + k])
                    .unwrap_or(0.0)
            }
            Storage::Dense(w) => w[i * self.n + j],
        }
    }

    /// Non-zero entries `(j, w_ij)` of row `i`.
    pub fn row(&self, i: usize) -> Box<dyn Iterator<Item = (usize, f64)> + '_> {
        match &self.storage {
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                let r = row_ptr[i]..row_ptr[i + 1];
                Box::new(cols[r.clone()].iter().copied().zip(vals[r].iter().copied()))
            }
            Storage::Dense(w) => Box::new(
                w[i * self.n..(i + 1) * self.n]
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|&(_, x)| x != 0.0),
            ),
        }
    }

    /// `out = W x`, summed in column order per row.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        match &self.storage {
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
            } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        acc += vals[k] * x[cols[k]];
                    }
                    *o = acc;
                }
            }
            Storage::Dense(w) => {
                for (row, o) in w.chunks_exact(self.n).zip(out.iter_mut()) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Each undirected edge once as `(i, j, w)` with `i <= j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j >= i).map(move |(j, w)| (i, j, w)))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.row(i) {
                m[(i, j)] = w;
            }
        }
        m
    }

    /// Connected components in order of their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut comps = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for (v, _) in self.row(u) {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    /// Whether `W` is positive semi-definite, up to a relative round-off slack.
    pub fn is_positive_semidefinite(&self) -> bool {
        let eig = self.to_dense().symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        eig.iter().all(|&x| x >= -1e-10 * scale.max(1.0))
    }
}

fn collect_pairs(n: usize, triples: &[(usize, usize, f64)]) -> Result<BTreeMap<(usize, usize), f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("graph needs at least one node".into()));
    }
    let mut pairs = BTreeMap::new();
    for &(i, j, w) in triples {
        for index in [i, j] {
            if index >= n {
                return Err(Error::NodeOutOfRange { index, n });
            }
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidWeight { i, j, weight: w });
        }
        let key = (i.min(j), i.max(j));
        if let Some(&prev) = pairs.get(&key) {
            if prev != w {
                return Err(Error::DuplicateEdgeConflict {
                    i: key.0,
                    j: key.1,
                    first: prev,
                    second: w,
                });
            }
        }
        pairs.insert(key, w);
    }
    Ok(pairs)
}
