//! Bézier variants of the order-II modified Durrmeyer operator on `[0, 1]`:
//! basis evaluation, exact identity checks, operator evaluation and
//! approximation-bound analysis.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod error;
pub mod exactness;
pub mod functions;
pub mod modified_basis;
pub mod operator;
pub mod quadrature;

pub use error::{Error, Result};
pub use exactness::{verify_moment_identities, Rational, RationalPolynomial, VerificationReport};
pub use functions::{parse_function_spec, FunctionModel, SmoothnessTag};
pub use modified_basis::{BezierParams, ModWeightConfig};
pub use operator::{BezierDurrmeyer, DurrmeyerCoefficients, OperatorParams};
