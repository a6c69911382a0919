use crate::halfint::HalfInt;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("angular momentum must be non-negative, got {0}")]
    NegativeEll(HalfInt),
    #[error("2l = {0} exceeds the supported maximum of 60")]
    EllTooLarge(i32),
    #[error("no generator matrices for channel {0}")]
    MissingChannel(String),
    #[error("generator set for channel {channel}: {reason}")]
    GeneratorShape { channel: String, reason: String },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("generator matrix {0} is not diagonalizable")]
    Defective(usize),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("kernel dimension {found} differs from the expected {expected}")]
    KernelDimension { expected: usize, found: usize },
    #[error("channel with l = {0} is not a representation of O(3)")]
    UnsupportedGroup(HalfInt),
    #[error("split halves share a channel")]
    IntersectingSplit,
    #[error("split halves do not concatenate to the canonical channel order")]
    UnsortedSplit,
    #[error("inclusion-exclusion over 2^{0} subsets is not supported (N <= 24)")]
    TooManyChannels(usize),
    #[error("coupled bases must have the same kind")]
    KindMismatch,
    #[error("dense check limited to {limit} one-particle states, got {found}")]
    TooLarge { limit: usize, found: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported file format version {0}")]
    Version(u32),
    #[error("not a coefficient file (bad magic)")]
    BadMagic,
    #[error("coefficient file is truncated")]
    Truncated,
    #[error("invalid index in coefficient file: {0}")]
    InvalidIndex(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
