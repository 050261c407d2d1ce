use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} lies outside [0, 1]")]
    Domain { x: f64 },

    #[error("degree n = {n} is below the minimum {min}")]
    InvalidDegree { n: usize, min: usize },

    #[error("Bezier parameter mu = {0} must be a finite value >= 1")]
    InvalidMu(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("function `{0}` has no piecewise-polynomial structure")]
    MissingStructure(String),

    #[error(
        "quadrature did not converge: best estimate error {estimate:e}, requested {requested:e}"
    )]
    QuadratureNonconvergence { estimate: f64, requested: f64 },

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
