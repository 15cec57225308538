//! Graph classifiers: the concave-loss robust method, its parameter-free
//! variant, and the two regression-style baselines.
//!
//! All solvers take a [`SpectralContext`] and a [`LabelVector`] and return a
//! real score vector whose sign is the prediction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, dot, norm};
use crate::spectral::{EigenPairs, SpectralContext};

/// Relative margin below `lambda1` that `gamma` must respect.
pub const GAMMA_MARGIN: f64 = 1e-9;
/// Default `gamma / lambda1` ratio for the parameter-free method.
pub const DEFAULT_ETA: f64 = 0.9;
const SOLVER_TOL: f64 = 1e-10;
const CG_ITERATIONS_PER_NODE: usize = 10;
const CONDITION_WARN: f64 = 1e8;

/// Observed labels `y_i ∈ {-1, 0, +1}`; zero means unlabelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    y: Vec<i8>,
}

impl LabelVector {
    /// Validated labels: at least two labelled nodes covering both classes.
    pub fn new(y: Vec<i8>) -> Result<Self> {
        let labels = Self::from_raw(y)?;
        if !labels.has_both_classes() {
            return Err(Error::InvalidInput(
                "labels must include at least one +1 and one -1".into(),
            ));
        }
        Ok(labels)
    }

    /// Only checks that entries lie in `{-1, 0, +1}`. Used for noisy label
    /// sets, where flipping may leave a single class, and for internal cases.
    pub fn from_raw(y: Vec<i8>) -> Result<Self> {
        if let Some(i) = y.iter().position(|v| !(-1..=1).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "label {} at node {i} is not in {{-1, 0, +1}}",
                y[i]
            )));
        }
        Ok(Self { y })
    }

    /// Build from `(node, label)` pairs on `n` nodes.
    pub fn from_labelled(n: usize, pairs: &[(usize, i8)]) -> Result<Self> {
        let mut y = vec![0i8; n];
        for &(i, c) in pairs {
            if i >= n {
                return Err(Error::NodeOutOfRange { index: i, n });
            }
            if c != 1 && c != -1 {
                return Err(Error::InvalidInput(format!(
                    "label for node {i} must be +1 or -1, got {c}"
                )));
            }
            y[i] = c;
        }
        Self::new(y)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn values(&self) -> &[i8] {
        &self.y
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.y.iter().map(|&v| v as f64).collect()
    }

    /// Indices of labelled nodes, ascending.
    pub fn labelled(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|&i| self.y[i] != 0).collect()
    }

    pub fn labelled_count(&self) -> usize {
        self.y.iter().filter(|&&v| v != 0).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&1) && self.y.contains(&-1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Zhou,
    Belkin,
    Robust,
    PfRobust,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Zhou, Method::Belkin, Method::Robust, Method::PfRobust];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Zhou => "zhou",
            Method::Belkin => "belkin",
            Method::Robust => "robust",
            Method::PfRobust => "pf_robust",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The hyper-parameter a solution was computed with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodParam {
    Gamma(f64),
    P(usize),
}

impl MethodParam {
    pub fn as_f64(&self) -> f64 {
        match *self {
            MethodParam::Gamma(g) => g,
            MethodParam::P(p) => p as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifierSolution {
    pub scores: Vec<f64>,
    pub method: Method,
    pub param: MethodParam,
    /// Final linear-system or least-squares residual norm.
    pub residual: f64,
    pub iterations: usize,
}

fn check_labels(ctx: &SpectralContext, labels: &LabelVector) -> Result<()> {
    if labels.n() != ctx.n() {
        return Err(Error::DimensionMismatch {
            expected: ctx.n(),
            got: labels.n(),
        });
    }
    Ok(())
}

/// Reject `gamma` outside `(0, lambda1 (1 - GAMMA_MARGIN))`.
pub fn check_gamma(ctx: &SpectralContext, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < ctx.lambda1() * (1.0 - GAMMA_MARGIN)) {
        return Err(Error::GammaOutOfRange {
            gamma,
            upper: ctx.lambda1(),
        });
    }
    Ok(())
}

/// Solves `(L/gamma - I) f = P0 y` on `v0⊥`, the unique minimizer of
/// `½ fᵀ L f - (gamma/2) ‖f + y‖²` subject to `fᵀ v0 = 0`.
pub fn solve_robust_gc(
    ctx: &SpectralContext,
    labels: &LabelVector,
    gamma: f64,
) -> Result<ClassifierSolution> {
    check_labels(ctx, labels)?;
    check_gamma(ctx, gamma)?;
    let bound = condition_number_bound(ctx, gamma, false)?;
    if bound > CONDITION_WARN {
        log::warn!("gamma = {gamma:e} is close to lambda1 = {:e}; condition bound {bound:.3e}", ctx.lambda1());
    }
    let mut rhs = labels.as_f64();
    ctx.project_out_v0(&mut rhs);
    let n = ctx.n();
    let mut scratch = vec![0.0; n];
    let inv_gamma = 1.0 / gamma;
    let out = conjugate_gradient(
        |x, y| {
            ctx.apply_s_into(x, &mut scratch, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = (xi - *yi) * inv_gamma - xi;
            }
        },
        &rhs,
        Some(ctx.v0()),
        SOLVER_TOL * norm(&rhs),
        CG_ITERATIONS_PER_NODE * n,
        "robust CG",
    )?;
    let mut scores = out.x;
    ctx.project_out_v0(&mut scores);
    Ok(ClassifierSolution {
        scores,
        method: Method::Robust,
        param: MethodParam::Gamma(gamma),
        residual: out.residual,
        iterations: out.iterations,
    })
}

/// Closed-form robust solution `Σ_{l≥1} (v_lᵀ y) / (λ_l/γ - 1) v_l` from a
/// complete eigenbasis. Meant as a cross-check for small graphs.
pub fn solve_robust_gc_spectral(
    ctx: &SpectralContext,
    labels: &LabelVector,
    gamma: f64,
    eigenpairs: &EigenPairs,
) -> Result<ClassifierSolution> {
    check_labels(ctx, labels)?;
    check_gamma(ctx, gamma)?;
    let n = ctx.n();
    if eigenpairs.count() < n {
        return Err(Error::IncompleteBasis {
            have: eigenpairs.count(),
            need: n,
        });
    }
    let y = labels.as_f64();
    let mut scores = vec![0.0; n];
    for l in 1..n {
        let v = eigenpairs.vector(l);
        let coef = dot(v, &y) / (eigenpairs.values()[l] / gamma - 1.0);
        for (s, vi) in scores.iter_mut().zip(v) {
            *s += coef * vi;
        }
    }
    Ok(ClassifierSolution {
        scores,
        method: Method::Robust,
        param: MethodParam::Gamma(gamma),
        residual: 0.0,
        iterations: 0,
    })
}

/// Robust solve with `gamma = 0.9 lambda1`.
pub fn solve_pf_robust_gc(ctx: &SpectralContext, labels: &LabelVector) -> Result<ClassifierSolution> {
    solve_pf_robust_gc_with_eta(ctx, labels, DEFAULT_ETA)
}

pub fn solve_pf_robust_gc_with_eta(
    ctx: &SpectralContext,
    labels: &LabelVector,
    eta: f64,
) -> Result<ClassifierSolution> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::EtaOutOfRange(eta));
    }
    let mut sol = solve_robust_gc(ctx, labels, eta * ctx.lambda1())?;
    sol.method = Method::PfRobust;
    Ok(sol)
}

/// Solves `(L + gamma I) f = gamma y`, the minimizer of
/// `½ fᵀ L f + (gamma/2) ‖f - y‖²`.
pub fn solve_zhou_gc(
    ctx: &SpectralContext,
    labels: &LabelVector,
    gamma: f64,
) -> Result<ClassifierSolution> {
    check_labels(ctx, labels)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::GammaOutOfRange {
            gamma,
            upper: f64::INFINITY,
        });
    }
    let n = ctx.n();
    let rhs: Vec<f64> = labels.as_f64().iter().map(|v| gamma * v).collect();
    let mut scratch = vec![0.0; n];
    let out = conjugate_gradient(
        |x, y| {
            ctx.apply_s_into(x, &mut scratch, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = xi - *yi + gamma * xi;
            }
        },
        &rhs,
        None,
        SOLVER_TOL * norm(&rhs),
        CG_ITERATIONS_PER_NODE * n,
        "zhou CG",
    )?;
    Ok(ClassifierSolution {
        scores: out.x,
        method: Method::Zhou,
        param: MethodParam::Gamma(gamma),
        residual: out.residual,
        iterations: out.iterations,
    })
}

/// Which eigenvectors span the least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BelkinBasis {
    /// `v_0 .. v_{p-1}`.
    #[default]
    IncludeNull,
    /// `v_1 .. v_p`.
    SkipNull,
}

pub fn solve_belk_gc(
    ctx: &SpectralContext,
    labels: &LabelVector,
    p: usize,
    eigenpairs: &EigenPairs,
) -> Result<ClassifierSolution> {
    solve_belk_gc_with(ctx, labels, p, eigenpairs, BelkinBasis::default())
}

/// Minimum-norm least-squares fit of the observed labels by `p` of the
/// smoothest eigenvectors, evaluated on every node.
pub fn solve_belk_gc_with(
    ctx: &SpectralContext,
    labels: &LabelVector,
    p: usize,
    eigenpairs: &EigenPairs,
    basis: BelkinBasis,
) -> Result<ClassifierSolution> {
    check_labels(ctx, labels)?;
    let n = ctx.n();
    if p == 0 {
        return Err(Error::InvalidInput("p must be at least 1".into()));
    }
    let first = match basis {
        BelkinBasis::IncludeNull => 0,
        BelkinBasis::SkipNull => 1,
    };
    if p + first > n {
        return Err(Error::PTooLarge { p: p + first, n });
    }
    if eigenpairs.count() < p + first {
        return Err(Error::IncompleteBasis {
            have: eigenpairs.count(),
            need: p + first,
        });
    }
    let labelled = labels.labelled();
    if labelled.is_empty() {
        return Err(Error::InvalidInput("no labelled nodes".into()));
    }
    let vectors = eigenpairs.vectors().columns(first, p);
    let e = DMatrix::from_fn(labelled.len(), p, |r, c| vectors[(labelled[r], c)]);
    let c = DVector::from_iterator(
        labelled.len(),
        labelled.iter().map(|&i| labels.values()[i] as f64),
    );
    let coeffs = min_norm_least_squares(&e, &c, 1e-10)?;
    let residual = (&c - &e * &coeffs).norm();
    let scores = (vectors * coeffs).iter().copied().collect();
    Ok(ClassifierSolution {
        scores,
        method: Method::Belkin,
        param: MethodParam::P(p),
        residual,
        iterations: 0,
    })
}

/// `E⁺ c` through a thin SVD, dropping singular values below `rel_tol · σ_max`.
fn min_norm_least_squares(e: &DMatrix<f64>, c: &DVector<f64>, rel_tol: f64) -> Result<DVector<f64>> {
    let (m, p) = e.shape();
    let svd = faer::Mat::from_fn(m, p, |i, j| e[(i, j)])
        .thin_svd()
        .map_err(|err| Error::InvalidInput(format!("least squares failed: {err:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let cutoff = rel_tol * s.iter().copied().fold(0.0, f64::max);
    let mut coeffs = DVector::zeros(p);
    for k in 0..s.nrows() {
        if s[k] <= cutoff {
            continue;
        }
        let proj = (0..m).map(|i| u[(i, k)] * c[i]).sum::<f64>() / s[k];
        for j in 0..p {
            coeffs[j] += proj * v[(j, k)];
        }
    }
    Ok(coeffs)
}

/// `+1` for non-negative scores, `-1` otherwise.
pub fn sign(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

pub fn predict(sol: &ClassifierSolution) -> Vec<i8> {
    sol.scores.iter().map(|&s| sign(s)).collect()
}

/// Upper bound `(c - gamma) / (lambda1 - gamma)` on the condition number of
/// `L/gamma - I` on `v0⊥`, with `c = 1` for PSD weights and `2` otherwise.
pub fn condition_number_bound(ctx: &SpectralContext, gamma: f64, psd_weights: bool) -> Result<f64> {
    check_gamma(ctx, gamma)?;
    let c = if psd_weights { 1.0 } else { 2.0 };
    Ok((c - gamma) / (ctx.lambda1() - gamma))
}

/// `½ fᵀ L f - (gamma/2) ‖f + y‖²`, no constraint applied.
pub fn robust_objective(ctx: &SpectralContext, y: &[f64], gamma: f64, f: &[f64]) -> Result<f64> {
    let loss: f64 = f.iter().zip(y).map(|(fi, yi)| (fi + yi).powi(2)).sum();
    Ok(ctx.smoothness(f)? - 0.5 * gamma * loss)
}

/// Split form `½ fᵀ L f + γ Σ(-y_i f_i) + γ Σ(-f_i²/2)`; differs from
/// [`robust_objective`] by the constant `(gamma/2) ‖y‖²`.
pub fn robust_objective_split(ctx: &SpectralContext, y: &[f64], gamma: f64, f: &[f64]) -> Result<f64> {
    let linear: f64 = f.iter().zip(y).map(|(fi, yi)| -yi * fi).sum();
    let concave: f64 = f.iter().map(|fi| -fi * fi / 2.0).sum();
    Ok(ctx.smoothness(f)? + gamma * linear + gamma * concave)
}

/// `½ fᵀ L f + (gamma/2) ‖f - y‖²`.
pub fn zhou_objective(ctx: &SpectralContext, y: &[f64], gamma: f64, f: &[f64]) -> Result<f64> {
    let loss: f64 = f.iter().zip(y).map(|(fi, yi)| (fi - yi).powi(2)).sum();
    Ok(ctx.smoothness(f)? + 0.5 * gamma * loss)
}
