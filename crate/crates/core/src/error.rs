use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("coordinate out of range: {0}")]
    CoordinateRange(String),
    #[error("vertices {0} and {1} share a position; rank distance is undefined (apply jitter)")]
    CoincidentPositions(usize, usize),
    #[error("zero kernel distance between vertices {0} and {1} with epsilon {2}")]
    ZeroDistance(usize, usize, f64),
    #[error("kernel `{0}` is not a metric on positions; the tree code needs euclidean or greatcircle")]
    UnsupportedKernel(&'static str),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective is not finite at the initial point ({0}); add jitter or change the initialization")]
    NonFiniteStart(f64),
}
