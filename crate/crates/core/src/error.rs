use thiserror::Error;

/// Errors produced by matrix construction, enumeration, sampling and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A builder was asked for a graph that cannot exist.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// The configuration-model pairing kept producing loops or multi-edges.
    #[error("random regular pairing failed after {attempts} attempts")]
    PairingExhausted { attempts: u32 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An exact enumeration was requested beyond its feasible size.
    #[error("{op} supports n <= {cap}, got n = {got}")]
    SizeCap {
        op: &'static str,
        cap: usize,
        got: usize,
    },

    #[error("eigen iteration did not converge: residual {residual:.3e} after {iterations} iterations (tolerance {tolerance:.1e})")]
    EigenNoConvergence {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// The auxiliary-variable grid failed to capture enough probability mass.
    #[error("grid covers only {mass:.17} of the density mass (need >= 1 - 1e-12)")]
    GridCoverage { mass: f64 },

    #[error("site index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    /// log Z fell below its variational lower bound; one of the inputs is wrong.
    #[error("mean-field gap {gap:.3e} is below -1e-9; log Z or the prediction is inconsistent")]
    MeanFieldInconsistency { gap: f64 },

    #[error("statistic/regime mismatch: {0}")]
    StatisticMismatch(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("empty sample")]
    EmptySample,

    #[error("matrix file, line {line}: {msg}")]
    MatrixFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
