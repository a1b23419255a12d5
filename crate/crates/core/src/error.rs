use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold input: {0}")]
    NonManifold(String),

    #[error("topology not a disk: {0}")]
    NotDisk(String),

    #[error("degenerate face {0}")]
    DegenerateFace(usize),

    #[error("mesh has zero total area")]
    ZeroArea,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point configuration has zero centroid size")]
    ZeroCentroidSize,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non_bijective_flattening: {0} flipped faces")]
    NonBijectiveFlattening(usize),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("ill_conditioned_tps: condition estimate {0:.3e}")]
    IllConditionedTps(f64),

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("flipped element in Moser map after {n_steps} steps")]
    FlippedElement { n_steps: usize },

    #[error("point location failed at ({0}, {1})")]
    PointLocation(f64, f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the input data rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::NonManifold(_)
                | Error::NotDisk(_)
                | Error::DegenerateFace(_)
                | Error::ZeroArea
                | Error::InvalidArgument(_)
                | Error::LengthMismatch { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
