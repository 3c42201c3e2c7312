use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty mask: no site above the density threshold")]
    EmptyMask,
    #[error("numerical abort at step {step} (t = {time}): non-finite values")]
    NonFinite { step: usize, time: f64 },
    #[error("packet mass within {cells} cells of the box edge")]
    PacketNearEdge { cells: usize },
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("loop crosses the nodal region")]
    LoopOnNode,
    #[error("scan argmin {argmin} on the scan boundary")]
    InconclusiveScan { argmin: f64 },
    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
