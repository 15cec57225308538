use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps these onto exit codes via [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node index {index} out of range for a graph of {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("edge ({i}, {j}) has non-positive or non-finite weight {weight}")]
    InvalidWeight { i: usize, j: usize, weight: f64 },

    #[error("edge ({i}, {j}) listed twice with conflicting weights {first} and {second}")]
    DuplicateEdgeConflict {
        i: usize,
        j: usize,
        first: f64,
        second: f64,
    },

    #[error("node {0} is isolated (zero degree)")]
    IsolatedNode(usize),

    #[error("graph is disconnected: {} components with sizes {:?}", components.len(), component_sizes(components))]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("graph still disconnected after {attempts} generation attempts")]
    DisconnectedAfterRetries { attempts: usize },

    #[error("{what} did not converge after {iterations} iterations (last estimate {estimate:.6e}, residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("requested {p} eigenpairs but the graph has {n} nodes")]
    PTooLarge { p: usize, n: usize },

    #[error("eigenbasis holds {have} vectors, {need} required")]
    IncompleteBasis { have: usize, need: usize },

    #[error("gamma = {gamma} outside the valid range (0, {upper}); the objective is not convex there")]
    GammaOutOfRange { gamma: f64, upper: f64 },

    #[error("eta = {0} outside (0, 1)")]
    EtaOutOfRange(f64),

    #[error("point is out of the extension range: d_x = {degree:.6e} must exceed {bound:.6e}")]
    OutOfRange { degree: f64, bound: f64 },

    #[error("label count {requested} invalid for {available} nodes")]
    CountTooLarge { requested: usize, available: usize },

    #[error("no unlabelled nodes left to evaluate")]
    EmptyEvaluationSet,

    #[error("every grid point failed for method {method}")]
    AllGridPointsFailed { method: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config: {0}")]
    Config(String),
}

fn component_sizes(components: &[Vec<usize>]) -> Vec<usize> {
    components.iter().map(Vec::len).collect()
}

impl Error {
    /// Process exit code: 2 input validation, 3 parameter domain, 4 experiment failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::GammaOutOfRange { .. }
            | Error::EtaOutOfRange(_)
            | Error::PTooLarge { .. }
            | Error::OutOfRange { .. } => 3,
            Error::AllGridPointsFailed { .. }
            | Error::NoConvergence { .. }
            | Error::DisconnectedAfterRetries { .. } => 4,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
