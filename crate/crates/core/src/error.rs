use thiserror::Error;

pub type Result<T> = std::result::Result<T, MnccError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MnccError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// All kernel weights underflowed at the evaluation point.
    #[error("kernel weights underflow at z = {z:?} with bandwidth {bandwidth}")]
    DegenerateWeights { z: Vec<f64>, bandwidth: f64 },

    #[error("conditional moment matrix is singular (condition number {condition:e})")]
    SingularMoments { condition: f64 },

    #[error("evaluation grid is empty for h = {h}, h0 = {h0}")]
    EmptyGrid { h: f64, h0: f64 },

    #[error("no grid spacing up to {upper} passed the Kolmogorov-Smirnov check")]
    CalibrationFailed { upper: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),

    /// An estimator error raised while evaluating at a particular grid point.
    #[error("at z = {z:?}: {source}")]
    AtPoint { z: Vec<f64>, source: Box<MnccError> },
}

impl MnccError {
    /// The underlying error with any grid-point context stripped.
    pub fn root(&self) -> &MnccError {
        match self {
            MnccError::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_degenerate_weights(&self) -> bool {
        matches!(self.root(), MnccError::DegenerateWeights { .. })
    }

    pub(crate) fn at_point(self, z: &[f64]) -> MnccError {
        match self {
            e @ MnccError::AtPoint { .. } => e,
            e => MnccError::AtPoint {
                z: z.to_vec(),
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for MnccError {
    fn from(e: std::io::Error) -> Self {
        MnccError::Io(e.to_string())
    }
}
