use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("row count mismatch: {0}")]
    RowCountMismatch(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("row {row} is a zero or non-finite vector and cannot be normalized")]
    ZeroVector { row: usize },
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("split {split} has {available} classes with enough rows, episode needs {needed}")]
    InsufficientClasses {
        split: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("class {class:?} has {available} rows, episode needs {needed}")]
    InsufficientRows {
        class: String,
        needed: usize,
        available: usize,
    },
    #[error("no text embedding for class {0:?}")]
    MissingClassText(String),
    #[error("degenerate query: mixed embedding has zero norm")]
    DegenerateQuery,
    #[error("index too small: needed {needed} hits after exclusion, found {available}")]
    IndexTooSmall { needed: usize, available: usize },
    #[error("compact index would be empty")]
    EmptyUnion,
    #[error("all loss weights are zero")]
    ZeroWeights,
    #[error("class {0} has no rows")]
    EmptyClass(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// True for failures caused by NaN/Inf during training or evaluation.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
