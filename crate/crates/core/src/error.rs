use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate ({row}, {col}) outside the {height}x{width} search area")]
    OutOfBounds { row: i32, col: i32, width: u32, height: u32 },
    #[error("move {0:?} is hard-constrained and was voided")]
    HardConstraint(crate::gridmap::Action),
    #[error("no valid action available: agent is boxed in")]
    BoxedIn,
    #[error("invalid world specification: {0}")]
    InvalidWorld(&'static str),
    #[error("world generation failed: could not keep start and goal clear")]
    Generation,
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("recurrent sequence must contain at least one step")]
    EmptySequence,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}
