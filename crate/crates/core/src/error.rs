use nalgebra::DVector;

/// Errors produced by the estimator and its supporting numerics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input value was NaN or infinite where a finite real is required.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The sample cannot support the requested computation (empty, all
    /// identical, or otherwise without usable spread).
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A requested dimension is out of range (r > d, empty complement, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Supplied directions are not an orthonormal frame.
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    /// A point handed to a chart is outside its domain.
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    /// The chart is undefined at the antipode of its center.
    #[error("chart singularity: point too close to -v0")]
    ChartSingularity,

    /// A basis matrix is rank deficient.
    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    /// The influence-function linear system is numerically singular.
    #[error("singular system: condition estimate {cond:.3e} exceeds threshold")]
    SingularSystem { cond: f64 },

    /// Gradient-based direction search produced a non-finite state; carries
    /// the best direction seen before failure.
    #[error("optimization failure: {message}")]
    OptimizationFailure { message: String, best: DVector<f64> },

    /// A configuration value fails validation.
    #[error("config error: {0}")]
    Config(String),

    /// CSV/JSON ingestion problems with location diagnostics.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    /// Rows of a table disagree on width or a required section is missing.
    #[error("structure error: {0}")]
    Structure(String),

    /// A serialized model does not match the expected format or version.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
