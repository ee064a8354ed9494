use thiserror::Error;

use crate::integrate::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector must have length >= 2 and finite entries")]
    InvalidVector,

    #[error("matrix entries must be finite and the matrix square")]
    InvalidMatrix,

    #[error("boost parameter |w| = {norm} is not inside the open unit ball")]
    BoostOutsideBall { norm: f64 },

    #[error("point |z| = {norm} lies outside the closed unit ball")]
    OutsideClosedBall { norm: f64 },

    #[error("rotation is not in SO(n): orthogonality defect {defect:e}")]
    NotRotation { defect: f64 },

    #[error("point is at or too close to the north pole")]
    NorthPole,

    #[error("degenerate cross-ratio quadruple (vanishing denominator)")]
    DegenerateQuad,

    #[error("invalid cross-ratio index ({0}, {1}, {2}, {3}) for {4} bodies")]
    InvalidQuad(usize, usize, usize, usize, usize),

    #[error("need at least {needed} bodies, found {found}")]
    TooFewBodies { needed: usize, found: usize },

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error("orthogonal factor has non-positive determinant")]
    NegativeDeterminant,

    #[error("composite map left the sphere-preserving group (defect {defect:e})")]
    CompositionLeftGroup { defect: f64 },

    #[error("body {index} is not on the unit sphere (|x| = {norm})")]
    NotOnSphere { index: usize, norm: f64 },

    #[error("time {t} outside sample range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid integrator settings: {0}")]
    InvalidIntegrator(String),

    #[error("trajectories are not comparable: {0}")]
    ShapeMismatch(String),

    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64, partial: Box<Trajectory> },
}
