#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robustgc::data::{self, SbmSpec};
use robustgc::graph::{KernelSpec, PointCloud, WeightedGraph};
use robustgc::{Error, LabelVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> PointCloud {
    let coords = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    PointCloud::new(dim, coords).unwrap()
}

/// Connected test graph with `n` in `[lo, hi]`; the construction cycles
/// through kernel, kNN and SBM graphs with `seed`.
pub fn random_graph_in(seed: u64, lo: usize, hi: usize) -> WeightedGraph {
    let mut r = rng(seed);
    let n = r.random_range(lo..=hi);
    match seed % 3 {
        0 => {
            let pts = random_points(&mut r, n, 2);
            let sigma = r.random_range(0.15..0.8);
            WeightedGraph::kernel_graph(&pts, &KernelSpec::gaussian(sigma).unwrap()).unwrap()
        }
        1 => {
            let pts = random_points(&mut r, n, 2);
            let mut k = r.random_range(2..=5).min(n - 1);
            loop {
                match WeightedGraph::knn_graph(&pts, k) {
                    Ok(g) => return g,
                    Err(Error::Disconnected { .. }) if k + 1 < n => k += 1,
                    Err(e) => panic!("knn graph failed: {e}"),
                }
            }
        }
        _ => {
            let a = n / 2;
            let intra = r.random_range(0.4..0.9);
            let inter = r.random_range(0.05..0.3);
            let spec = SbmSpec {
                block_sizes: vec![a, n - a],
                connectivity: vec![vec![intra, inter], vec![inter, intra]],
                seed,
            };
            data::sbm_generate(&spec).unwrap().graph
        }
    }
}

pub fn random_graph(seed: u64) -> WeightedGraph {
    random_graph_in(seed, 8, 64)
}

/// Between 2 and n/2 labelled nodes with random signs, both classes present.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize) -> LabelVector {
    let s = rng.random_range(2..=(n / 2).max(2));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut y = vec![0i8; n];
    for (k, &i) in idx[..s].iter().enumerate() {
        y[i] = match k {
            0 => 1,
            1 => -1,
            _ => {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            }
        };
    }
    LabelVector::new(y).unwrap()
}

/// `I - D^{-1/2} W D^{-1/2}` assembled entry by entry from `weight(i, j)`.
pub fn dense_laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let n = g.n();
    let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| g.weight(i, j)).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let s = g.weight(i, j) / (d[i] * d[j]).sqrt();
        if i == j {
            1.0 - s
        } else {
            -s
        }
    })
}

/// Ascending eigenvalues and matching eigenvector columns.
pub fn dense_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_columns(
        &order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>(),
    );
    (values, vectors)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Path of `2 * side` nodes with a weak middle edge, as in the two-cluster chain.
pub fn chain(side: usize, weak: f64) -> WeightedGraph {
    data::chain_graph(side, weak).unwrap().0
}

pub fn labels_at(n: usize, pairs: &[(usize, i8)]) -> LabelVector {
    LabelVector::from_labelled(n, pairs).unwrap()
}
