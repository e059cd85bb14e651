use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("player {player} out of range for {n} players")]
    PlayerOutOfRange { player: usize, n: usize },

    #[error("player {player} is not a member of coalition {coalition:?}")]
    NotAMember { player: usize, coalition: Vec<usize> },

    #[error("not a (3,B2) formula: {0}")]
    NotB2(String),

    #[error("interaction graph is not a forest")]
    NotAForest,

    #[error("insufficient samples: {required} required, {provided} provided")]
    InsufficientSamples { required: usize, provided: usize },

    #[error("{what} exceeds capacity limit {limit} (got {got})")]
    Capacity {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("exact evaluation needs a finite-support distribution; use empirical_blocking_rate for generative ones")]
    GenerativeDistribution,

    #[error("no forest is consistent with the connected samples")]
    InferenceFailed,

    #[error("contradiction: {0}")]
    Contradiction(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
