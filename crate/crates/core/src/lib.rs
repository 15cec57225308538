//! Graph-based semi-supervised binary classification with a robust,
//! indefinite quadratic model and its classical baselines.

pub mod bench;
pub mod classify;
pub mod cli;
pub mod data;
pub mod error;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod oos;
pub mod rng;
pub mod spectral;

pub use classify::{ClassifierSolution, LabelVector, Method, MethodParam};
pub use error::{Error, Result};
pub use graph::{KernelSpec, PointCloud, WeightedGraph};
pub use oos::{DegreeConvention, OosModel, OosPrediction};
pub use spectral::{EigenPairs, SpectralContext};
