use thiserror::Error;

/// Failures reported by the geometry kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("jacobian rank deficient at {at:?} (sigma_min/sigma_max = {ratio:e})")]
    RankDeficient { at: Vec<f64>, ratio: f64 },
    #[error("evaluator undefined at {0:?}")]
    EvaluationFailure(Vec<f64>),
    #[error("normal orientation conflict between grid nodes {0} and {1}")]
    OrientationConflict(usize, usize),
    #[error("angle {theta} outside the open window ({lo}, {hi})")]
    WindowViolation { theta: f64, lo: f64, hi: f64 },
    #[error("tangential component of the direction vanishes at {0:?}")]
    TangentDegenerate(Vec<f64>),
    #[error("degenerate point set: {0}")]
    DegenerateGeometry(String),
    #[error("circle extension failed: {0}")]
    FitFailure(String),
    #[error("hyperplane does not cut the sampled surface")]
    EmptySlice,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn to_f64_vec<T: crate::Real>(u: &[T]) -> Vec<f64> {
    u.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}
