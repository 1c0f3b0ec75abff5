use thiserror::Error;

use crate::extremal::ExtremalResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ground set size {0} outside 1..=64")]
    InvalidGround(usize),
    #[error("element {element} outside ground set [{n}]")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("sets are equal; the pattern of order 0 is undefined")]
    EmptyDifference,
    #[error("ground sets differ ({0} vs {1})")]
    GroundMismatch(usize, usize),
    #[error("cannot parse set {0:?}")]
    ParseSet(String),
    #[error("cannot parse pattern {0:?}")]
    ParsePattern(String),
    #[error("pattern {0} is not balanced")]
    UnbalancedPattern(String),
    #[error("layer C({n},{k}) has {size} vertices, above the cap {cap}")]
    LayerTooLarge { n: usize, k: usize, size: u128, cap: usize },
    #[error("search budget exhausted: best {best}, upper bound {upper_bound}")]
    BudgetExhausted {
        best: usize,
        upper_bound: usize,
        partial: Box<ExtremalResult>,
    },
    #[error("{k} does not divide {n}")]
    IndivisibleBlocks { n: usize, k: usize },
    #[error("supports overlap")]
    OverlappingSupports,
    #[error("family members do not lie on layer {0}")]
    LayerMismatch(usize),
    #[error("family of {size} sets exceeds the materialization cap {cap}")]
    FamilyTooLarge { size: u128, cap: u128 },
    #[error("grid vectors have different shapes")]
    ShapeMismatch,
    #[error("grid [{m}]^{dim} exceeds the exhaustive cap {cap}")]
    GridTooLarge { m: usize, dim: usize, cap: u64 },
    #[error("interval length {m} does not divide {n}")]
    IndivisibleGround { n: usize, m: usize },
    #[error("y does not {d}-dominate x")]
    NotDominating { d: usize },
    #[error("gamma {gamma} outside [{lo}, 1]")]
    GammaOutOfRange { gamma: f64, lo: f64 },
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("pattern {0} has no zero of its prefix sums at an even position")]
    NoSplit(String),
    #[error("parameters outside the regime of the bound: {0}")]
    RegimeViolation(String),
    #[error("no walks between the endpoints")]
    ZeroDenominator,
    #[error("indicator sum {0} exceeds 1; the family is not IP(d)-free")]
    FreenessViolated(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
