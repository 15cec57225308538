//! Spectral machinery for the normalized Laplacian `L = I - S`, with
//! `S = D^{-1/2} W D^{-1/2}`.
//!
//! All products are matrix-free and reduce sequentially, so results are
//! bit-identical regardless of the caller's threading.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg::{dot, normalize, project_out};
use crate::rng::{self, Purpose};

/// Graphs up to this many nodes use a dense symmetric eigendecomposition.
pub const DENSE_EIGEN_THRESHOLD: usize = 512;

const POWER_MAX_ITERATIONS: usize = 50_000;
const RAYLEIGH_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;

/// Degree normalization, null direction and second-smallest eigenvalue of a graph.
#[derive(Debug, Clone)]
pub struct SpectralContext {
    graph: WeightedGraph,
    inv_sqrt_d: Vec<f64>,
    v0: Vec<f64>,
    lambda1: f64,
    lambda1_iterations: usize,
}

impl SpectralContext {
    pub fn new(graph: WeightedGraph) -> Result<Self> {
        if graph.n() < 2 {
            return Err(Error::InvalidInput(
                "spectral context needs at least 2 nodes".into(),
            ));
        }
        let inv_sqrt_d: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut v0: Vec<f64> = graph.degrees().iter().map(|d| d.sqrt()).collect();
        normalize(&mut v0);
        let mut ctx = Self {
            graph,
            inv_sqrt_d,
            v0,
            lambda1: f64::NAN,
            lambda1_iterations: 0,
        };
        let (lambda1, iterations) = compute_lambda1(&ctx)?;
        ctx.lambda1 = lambda1;
        ctx.lambda1_iterations = iterations;
        Ok(ctx)
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn inv_sqrt_d(&self) -> &[f64] {
        &self.inv_sqrt_d
    }

    /// Unit null vector of the Laplacian, `(v0)_i ∝ sqrt(d_i)`.
    pub fn v0(&self) -> &[f64] {
        &self.v0
    }

    /// Second-smallest eigenvalue of the normalized Laplacian.
    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    /// Power iterations spent on `lambda1`.
    pub fn lambda1_iterations(&self) -> usize {
        self.lambda1_iterations
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    /// `out = S x`; `scratch` must have length `n`.
    pub(crate) fn apply_s_into(&self, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        for ((s, xi), k) in scratch.iter_mut().zip(x).zip(&self.inv_sqrt_d) {
            *s = xi * k;
        }
        self.graph.matvec(scratch, out);
        for (o, k) in out.iter_mut().zip(&self.inv_sqrt_d) {
            *o *= k;
        }
    }

    pub fn apply_s(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut scratch = vec![0.0; x.len()];
        let mut out = vec![0.0; x.len()];
        self.apply_s_into(x, &mut scratch, &mut out);
        Ok(out)
    }

    pub fn apply_ln(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply_s(x)?;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - *o;
        }
        Ok(out)
    }

    /// `½ fᵀ L f`.
    pub fn smoothness(&self, f: &[f64]) -> Result<f64> {
        Ok(0.5 * dot(f, &self.apply_ln(f)?))
    }

    /// Remove the component of `x` along `v0`.
    pub fn project_out_v0(&self, x: &mut [f64]) {
        project_out(x, &self.v0);
    }

    /// Dense `L = I - D^{-1/2} W D^{-1/2}`.
    pub fn laplacian_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut l = DMatrix::identity(n, n);
        for i in 0..n {
            for (j, w) in self.graph.row(i) {
                l[(i, j)] -= w * self.inv_sqrt_d[i] * self.inv_sqrt_d[j];
            }
        }
        l
    }
}

/// `lambda1 = 2 - mu`, with `mu` the dominant eigenvalue of `(S + I) - 2 v0 v0ᵀ`.
///
/// The shift maps the spectrum of `S` on `v0⊥` into `[0, 2)`, so the target is
/// the eigenvalue of largest magnitude. Iterates are re-orthogonalized
/// against `v0` every step. Stops once successive Rayleigh quotients agree to
/// `1e-10` relative and the eigen-residual is below `1e-8`.
fn compute_lambda1(ctx: &SpectralContext) -> Result<(f64, usize)> {
    let n = ctx.n();
    let mut x: Vec<f64> = (0..n as u64)
        .map(|i| rng::uniform(0x5EED, Purpose::PowerStart, &[i]) - 0.5)
        .collect();
    ctx.project_out_v0(&mut x);
    normalize(&mut x);
    let mut y = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut theta = 0.0;
    let mut residual = f64::INFINITY;
    for it in 1..=POWER_MAX_ITERATIONS {
        ctx.apply_s_into(&x, &mut scratch, &mut y);
        let along = dot(ctx.v0(), &x);
        for ((yi, xi), vi) in y.iter_mut().zip(&x).zip(ctx.v0()) {
            *yi += xi - 2.0 * along * vi;
        }
        theta = dot(&x, &y);
        residual = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - theta * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = theta.abs().max(1.0);
        if (theta - prev).abs() < RAYLEIGH_TOL * scale && residual <= RESIDUAL_TOL * scale {
            return Ok((2.0 - theta, it));
        }
        prev = theta;
        ctx.project_out_v0(&mut y);
        if normalize(&mut y) == 0.0 {
            // x lies in the null space of the shifted operator: lambda1 = 2.
            return Ok((2.0 - theta, it));
        }
        std::mem::swap(&mut x, &mut y);
    }
    Err(Error::NoConvergence {
        what: "lambda1 power iteration",
        iterations: POWER_MAX_ITERATIONS,
        estimate: 2.0 - theta,
        residual,
    })
}

/// The `p` smallest eigenpairs of the normalized Laplacian, ascending.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenPairs {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `n x p`, column `l` is the eigenvector for `values()[l]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, l: usize) -> &[f64] {
        let n = self.vectors.nrows();
        &self.vectors.as_slice()[l * n..(l + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Dense below [`DENSE_EIGEN_THRESHOLD`] nodes, block power iteration above.
    Auto,
    Dense,
    BlockPower,
}

pub fn smallest_eigenpairs(ctx: &SpectralContext, p: usize) -> Result<EigenPairs> {
    smallest_eigenpairs_with(ctx, p, EigenMethod::Auto)
}

pub fn smallest_eigenpairs_with(
    ctx: &SpectralContext,
    p: usize,
    method: EigenMethod,
) -> Result<EigenPairs> {
    let n = ctx.n();
    if p > n {
        return Err(Error::PTooLarge { p, n });
    }
    if p == 0 {
        return Err(Error::InvalidInput("need at least one eigenpair".into()));
    }
    let dense = match method {
        EigenMethod::Auto => n <= DENSE_EIGEN_THRESHOLD,
        EigenMethod::Dense => true,
        EigenMethod::BlockPower => false,
    };
    let (values, mut vectors) = if dense {
        dense_smallest(ctx, p)
    } else {
        block_power_smallest(ctx, p)?
    };
    for mut col in vectors.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|c| c.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
    Ok(EigenPairs { values, vectors })
}

fn dense_smallest(ctx: &SpectralContext, p: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(ctx.laplacian_dense());
    let mut order: Vec<usize> = (0..ctx.n()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let order = &order[..p];
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Orthogonal iteration on `S + I` with a Rayleigh–Ritz step each sweep.
fn block_power_smallest(ctx: &SpectralContext, p: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = ctx.n();
    let b = n.min(p + (p / 2).max(8));
    let mut q = DMatrix::from_fn(n, b, |i, j| {
        rng::uniform(0xB10C, Purpose::PowerStart, &[i as u64, j as u64]) - 0.5
    });
    q = q.qr().q();
    let mut scratch = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut prev: Vec<f64> = vec![f64::NAN; p];
    let mut worst = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERATIONS {
        let mut z = DMatrix::zeros(n, b);
        for j in 0..b {
            let col: Vec<f64> = q.column(j).iter().copied().collect();
            ctx.apply_s_into(&col, &mut scratch, &mut out);
            for i in 0..n {
                z[(i, j)] = out[i] + col[i];
            }
        }
        let h = q.transpose() * &z;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
        let u = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| eig.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        let theta: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let x = &q * &u;
        let ax = &z * &u;
        worst = 0.0f64;
        let mut settled = true;
        for j in 0..p {
            let r = (ax.column(j) - x.column(j) * theta[j]).norm();
            worst = worst.max(r);
            let scale = theta[j].abs().max(1.0);
            if r > RESIDUAL_TOL * scale || (theta[j] - prev[j]).abs() >= RAYLEIGH_TOL * scale {
                settled = false;
            }
        }
        if settled {
            let values = theta[..p].iter().map(|t| 2.0 - t).collect();
            let vectors = x.columns(0, p).into_owned();
            return Ok((values, vectors));
        }
        prev.copy_from_slice(&theta[..p]);
        q = ax.qr().q();
    }
    Err(Error::NoConvergence {
        what: "block power iteration",
        iterations: POWER_MAX_ITERATIONS,
        estimate: 2.0 - prev[p - 1],
        residual: worst,
    })
}

/// Dense symmetric-eigen spectrum of `L`, ascending. Convenience for small graphs.
pub fn full_spectrum(ctx: &SpectralContext) -> EigenPairs {
    let (values, vectors) = dense_smallest(ctx, ctx.n());
    EigenPairs { values, vectors }
}
