use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {x} outside the domain of {function}")]
    Domain { function: &'static str, x: f64 },

    #[error("kernel evaluated at coincident points; use the self-term path")]
    Singularity,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid spacing {dx} too coarse for correlation length {scale}")]
    Resolution { dx: f64, scale: f64 },

    #[error("surface is flat; peak-to-trough scaling undefined")]
    DegenerateSurface,

    #[error("singular matrix: pivot {pivot:e} at column {column} (condition estimate {condition:e})")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        condition: f64,
    },

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("observation line z = {zeta} does not clear the surface (max height {max_height})")]
    ObservationBelowSurface { zeta: f64, max_height: f64 },

    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: String },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
