//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("field index {index} out of range for family with m = {m}")]
    FieldIndexOutOfRange { index: usize, m: usize },

    #[error("point has non-finite coordinates")]
    NonFinitePoint,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("bracket word must contain at least two field factors")]
    BracketWordTooShort,

    #[error("finite-difference step {0} underflows at this point")]
    FiniteDifferenceUnderflow(f64),

    #[error("commutator order must be >= 1")]
    InvalidCommutatorOrder,

    #[error("sequence index j = {0} out of generated range (j >= 1 required)")]
    SequenceIndexOutOfRange(usize),

    #[error("family fields are linearly dependent at probe point {point:?} (rank {rank} < m = {m})")]
    DegenerateFamily {
        point: Vec<f64>,
        rank: usize,
        m: usize,
    },

    #[error("invalid family description: {0}")]
    InvalidFamily(String),

    #[error("box is empty or degenerate on axis {axis}")]
    EmptyBox { axis: usize },

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("flow escaped the safety region at t = {time}")]
    FlowEscape { time: f64 },

    #[error("flow state became non-finite at t = {time}")]
    FlowNonFinite { time: f64 },

    #[error("invalid radius {0}; must be positive")]
    InvalidRadius(f64),

    #[error("invalid horizon {0}; must be positive")]
    InvalidHorizon(f64),

    #[error("graph build: {0}")]
    GraphBuild(String),

    #[error("nodes {from} and {to} are not connected; refine spacing or raise neighbor radius")]
    GraphDisconnected { from: usize, to: usize },

    #[error("point lies outside the graph box on axis {axis}")]
    OutsideGraphBox { axis: usize },

    #[error("lower bound uncertified: ball radius {radius} too small to contain candidate paths")]
    UncertifiedLowerBound { radius: f64 },

    #[error("control optimization failed to meet endpoint tolerance: gap {gap} > {tol}")]
    EndpointToleranceUnmet { gap: f64, tol: f64 },

    #[error("empty ball around sample index {center} at radius {radius}")]
    EmptyBall { center: usize, radius: f64 },

    #[error("sample metric accessor: {0}")]
    SampleMetric(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("test function support violates the required boundary margin (cell {cell:?})")]
    SupportViolation { cell: Vec<usize> },

    #[error("zero denominator in Poincaré quotient with nonzero numerator {numerator}")]
    PoincareZeroDenominator { numerator: f64 },

    #[error("engine config: {0}")]
    EngineConfig(String),

    #[error("hypothesis audit failed: {0}")]
    HypothesisFailure(String),

    #[error("extraction failed: {0}")]
    ExtractionFailure(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("file format: {0}")]
    FileFormat(String),
}
