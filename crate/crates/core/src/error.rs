use thiserror::Error;

/// Precondition violations of the integer and search APIs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("bit-width {k} is out of range")]
    WidthOutOfRange { k: u32 },
    #[error("value {value} does not fit in {k} bits")]
    ValueOutOfRange { k: u32, value: u64 },
    #[error("interval [{r1}, {r2}] is empty")]
    EmptyInterval { r1: u64, r2: u64 },
    #[error("rank {rank} is not on level {level} of a {k}-bit tree")]
    NotOnLevel { k: u32, level: u32, rank: u64 },
    #[error("expected {expected} keys, got {actual}")]
    LengthMismatch { expected: u64, actual: usize },
    #[error("keys are not sorted at index {index}")]
    Unsorted { index: usize },
}
