use thiserror::Error;

/// Errors raised across the discretization, solver and time-stepping layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the fictitious domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("basis function {index} does not live on element {element}")]
    NotInConnectivity { index: usize, element: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad element {element} has no good neighbor (mesh too coarse for gamma = {gamma})")]
    NoGoodNeighbor { element: usize, gamma: f64 },
    #[error("row-sum lumping produced a nonpositive diagonal entry {value:e} at dof {dof}")]
    NonPositiveLumpedEntry { dof: usize, value: f64 },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("forcing frequency squared {omega_sq} resonates with eigenvalue {eigenvalue}")]
    Resonance { omega_sq: f64, eigenvalue: f64 },
    #[error("explicit integration became unstable at step {step} (t = {time})")]
    Unstable { step: usize, time: f64 },
    #[error("mode index {requested} exceeds the {available} available exact modes")]
    ModeOutOfRange { requested: usize, available: usize },
    #[error("block rescaling failed to converge for block starting at dof {start}")]
    BlockRescale { start: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
