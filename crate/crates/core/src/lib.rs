//! Hypo-distances between upper semicontinuous functions on rectangles and
//! shape-constrained estimation of distribution functions.
//!
//! * [`grid`]: domains, box partitions, refinement, triangulation.
//! * [`function`], [`cdf`]: epi-splines on a grid, analytic and empirical CDFs.
//! * [`metrics`]: point-to-hypograph distance, ρ-distance oracle, hat-distance,
//!   η± partition bounds and the hypo-distance integral.
//! * [`estimator`]: the binary search over feasibility-slack LPs.
//! * [`validation`]: oracles, random pair generators and fixtures.

pub mod cdf;
pub mod estimator;
pub mod function;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod par;
pub mod scenarios;
pub mod validation;

pub use cdf::{empirical_cdf, upper_envelope, CdfSpec, SampleSet, Target};
pub use estimator::{EstimateResult, EstimationProblem, ShapeConstraints, StepRecord};
pub use function::{GridFunction, Order};
pub use grid::{Domain, Grid, Rect};
pub use metrics::{Ball, DistanceReport};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),
    #[error("degenerate function: {0}")]
    DegenerateFunction(String),
    #[error("shape constraints are infeasible")]
    ShapeInfeasible,
    #[error("LP iteration limit reached at eta = {eta}")]
    IterationLimit { eta: f64 },
    #[error(transparent)]
    Lp(#[from] hypodist_lp::LpError),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
