use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("boundary block {block} is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { block: &'static str, ratio: f64 },
    #[error("boundary block {block} is not self-adjoint (defect {defect:.3e})")]
    NotSelfAdjoint { block: &'static str, defect: f64 },
    #[error("outer condition on edge {edge} has (g, h) = (0, 0)")]
    DegenerateDiagonalPair { edge: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid edge {edge}: {reason}")]
    InvalidEdge { edge: usize, reason: String },
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("cut at {position} on edge {edge} is not an interior point")]
    CutOnVertex { edge: usize, position: f64 },
    #[error("cuts are out of order or inconsistent with the split mode: {0}")]
    CutsOutOfOrder(String),
    #[error("position {x} outside [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("states evaluated at different points ({a} vs {b})")]
    MismatchedEvaluationPoint { a: f64, b: f64 },
    #[error("adaptive integrator failed near x = {x}: {reason}")]
    IntegrationFailure { x: f64, reason: String },
    #[error("lambda = {lambda} is a pole (|denominator| = {denominator:.3e})")]
    PoleAtLambda { lambda: f64, denominator: f64 },
    #[error("no independent partner solution on edge {edge}; lambda is effectively on the spectrum")]
    NoIndependentPartner { edge: usize },
    #[error("lambda = {lambda} is on the spectrum")]
    OnSpectrum { lambda: f64 },
    #[error("delta1 - i delta2 is numerically singular")]
    SingularDeltaCombination,
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("interval endpoint {endpoint} lies on the spectrum of {what}")]
    EndpointOnSpectrum { endpoint: f64, what: String },
    #[error("interval endpoint {endpoint} lies on a pole")]
    PoleOnBoundary { endpoint: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("singular linear system")]
    SingularSystem,
}

pub type Result<T> = std::result::Result<T, Error>;
