//! Out-of-sample scoring for robust models trained on kernel graphs.
//!
//! A new point `x` gets degree `d_x = Σ_j k(x, x_j)` and score
//!
//! ```text
//! f_x = Σ_i S_xi f_i / (1 - γ - k(x,x)/d_x),   S_xi = k(x, x_i) / sqrt(d_x d_i)
//! ```
//!
//! which is only defined while `d_x > k(x,x) / (1 - γ)`. Points failing that
//! bound are reported as out of range rather than scored.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, sign, ClassifierSolution, LabelVector};
use crate::error::{Error, Result};
use crate::graph::{KernelSpec, PointCloud, WeightedGraph};
use crate::spectral::SpectralContext;

/// Feasibility requires `d_x (1 - γ) - k(x,x)` to exceed this.
pub const FEASIBILITY_MARGIN: f64 = 1e-12;

/// How the degree of an unseen point is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeConvention {
    /// Sum over training points only.
    #[default]
    TrainingOnly,
    /// Adds `k(x, x)`, matching in-sample degrees of kernel graphs.
    SelfInclusive,
}

#[derive(Debug, Clone)]
pub struct OosModel {
    points: PointCloud,
    kernel: KernelSpec,
    train_degrees: Vec<f64>,
    f_star: Vec<f64>,
    gamma: f64,
    convention: DegreeConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OosPrediction {
    Label(i8),
    OutOfRange,
}

impl OosPrediction {
    /// `+1`/`-1`, or `0` when out of range.
    pub fn as_i8(&self) -> i8 {
        match *self {
            OosPrediction::Label(l) => l,
            OosPrediction::OutOfRange => 0,
        }
    }
}

impl OosModel {
    /// Assemble a model from its parts. `gamma` must lie in `(0, 1)`, which
    /// holds for every valid robust solve on a PSD kernel graph.
    pub fn new(
        points: PointCloud,
        kernel: KernelSpec,
        train_degrees: Vec<f64>,
        f_star: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let n = points.n();
        for len in [train_degrees.len(), f_star.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if let Some(i) = train_degrees.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::IsolatedNode(i));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::GammaOutOfRange { gamma, upper: 1.0 });
        }
        Ok(Self {
            points,
            kernel,
            train_degrees,
            f_star,
            gamma,
            convention: DegreeConvention::default(),
        })
    }

    /// Build the kernel graph, train the parameter-free robust classifier
    /// with ratio `eta`, and keep what is needed to score new points.
    pub fn train(
        points: PointCloud,
        kernel: KernelSpec,
        labels: &LabelVector,
        eta: f64,
    ) -> Result<(Self, ClassifierSolution)> {
        let graph = WeightedGraph::kernel_graph(&points, &kernel)?;
        let degrees = graph.degrees().to_vec();
        let ctx = SpectralContext::new(graph)?;
        let sol = classify::solve_pf_robust_gc_with_eta(&ctx, labels, eta)?;
        let gamma = sol.param.as_f64();
        let model = Self::new(points, kernel, degrees, sol.scores.clone(), gamma)?;
        Ok((model, sol))
    }

    pub fn with_convention(mut self, convention: DegreeConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn train_degrees(&self) -> &[f64] {
        &self.train_degrees
    }

    pub fn f_star(&self) -> &[f64] {
        &self.f_star
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn convention(&self) -> DegreeConvention {
        self.convention
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `d_x` under the model's degree convention.
    pub fn degree(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let sum: f64 = self.points.iter().map(|p| self.kernel.eval(x, p)).sum();
        Ok(match self.convention {
            DegreeConvention::TrainingOnly => sum,
            DegreeConvention::SelfInclusive => sum + self.kernel.self_value(),
        })
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let kxx = self.kernel.self_value();
        let weights: Vec<f64> = self.points.iter().map(|p| self.kernel.eval(x, p)).collect();
        let mut dx: f64 = weights.iter().sum();
        if self.convention == DegreeConvention::SelfInclusive {
            dx += kxx;
        }
        if !(dx * (1.0 - self.gamma) - kxx > FEASIBILITY_MARGIN) {
            return Err(Error::OutOfRange {
                degree: dx,
                bound: kxx / (1.0 - self.gamma),
            });
        }
        let inv_sqrt_dx = 1.0 / dx.sqrt();
        let propagated: f64 = weights
            .iter()
            .zip(&self.train_degrees)
            .zip(&self.f_star)
            .map(|((k, d), f)| k * inv_sqrt_dx / d.sqrt() * f)
            .sum();
        Ok(propagated / (1.0 - self.gamma - kxx / dx))
    }

    pub fn predict(&self, x: &[f64]) -> Result<OosPrediction> {
        match self.score(x) {
            Ok(s) => Ok(OosPrediction::Label(sign(s))),
            Err(Error::OutOfRange { .. }) => Ok(OosPrediction::OutOfRange),
            Err(e) => Err(e),
        }
    }
}

/// One cell of a 2-D evaluation grid; `score` is `None` out of range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub x0: f64,
    pub x1: f64,
    pub score: Option<f64>,
    pub label: i8,
}

/// Bounding box of a 2-D cloud widened by `margin` times its extent on each side.
pub fn grid_bounds(points: &PointCloud, margin: f64) -> Result<[(f64, f64); 2]> {
    if points.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: points.dim(),
        });
    }
    let b = points.bounds();
    let widen = |(lo, hi): (f64, f64)| {
        let pad = margin * (hi - lo);
        (lo - pad, hi + pad)
    };
    Ok([widen(b[0]), widen(b[1])])
}

fn axis(lo: f64, hi: f64, resolution: usize, k: usize) -> f64 {
    if resolution == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * k as f64 / (resolution - 1) as f64
    }
}

/// Score a `resolution x resolution` grid, rows along `x1`, in row-major order.
/// Rows are evaluated in parallel; each cell depends only on its coordinates.
pub fn evaluate_grid(
    model: &OosModel,
    bounds: [(f64, f64); 2],
    resolution: usize,
) -> Result<Vec<GridCell>> {
    if model.points().dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: model.points().dim(),
        });
    }
    if resolution == 0 {
        return Err(Error::InvalidInput("grid resolution must be positive".into()));
    }
    let rows: Vec<Result<Vec<GridCell>>> = (0..resolution)
        .into_par_iter()
        .map(|r| {
            let x1 = axis(bounds[1].0, bounds[1].1, resolution, r);
            (0..resolution)
                .map(|c| {
                    let x0 = axis(bounds[0].0, bounds[0].1, resolution, c);
                    let (score, label) = match model.score(&[x0, x1]) {
                        Ok(s) => (Some(s), sign(s)),
                        Err(Error::OutOfRange { .. }) => (None, 0),
                        Err(e) => return Err(e),
                    };
                    Ok(GridCell { x0, x1, score, label })
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::with_capacity(resolution * resolution);
    for row in rows {
        cells.extend(row?);
    }
    Ok(cells)
}
