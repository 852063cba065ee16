use crate::strings::Layout;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("layout mismatch: {0} vs {1}")]
    LayoutMismatch(Layout, Layout),
    #[error("string has {got} bits but layout {layout} needs {}", layout.len())]
    LengthMismatch { layout: Layout, got: usize },
    #[error("unexpected character {0:?} in bit string")]
    BadBit(char),
    #[error("blueprint needs {needed} extra coordinates but only {available} are available")]
    InsufficientExtras { needed: usize, available: usize },
    #[error("multiset is empty")]
    EmptyMultiset,
    #[error("string is not a median of the multiset")]
    NotMedian,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("weight is undefined at distance {0}")]
    WeightDomain(usize),
    #[error("weight must be positive at distance {0}")]
    NonPositiveWeight(i64),
    #[error("dimacs line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
    #[error("invalid formula: {0}")]
    Formula(String),
    #[error("invalid gadget parameters: {0}")]
    Gadget(String),
    #[error("tree: {0}")]
    Tree(String),
    #[error("chain: {0}")]
    Chain(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("size guard: {0}")]
    TooLarge(String),
}

impl Error {
    /// Size-guard refusals are distinguished from bad input.
    pub fn is_guard(&self) -> bool {
        matches!(self, Error::TooLarge(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
