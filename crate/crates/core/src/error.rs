use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("observed variable `{name}` needs a cardinality of at least 2 (got {cardinality})")]
    BadCardinality { name: String, cardinality: usize },

    #[error("edge {0} -> {1} closes a directed cycle")]
    Cycle(String, String),

    #[error("`{0}` is not an observed variable")]
    NotObserved(String),

    #[error("`{0}` is not a latent variable")]
    NotLatent(String),

    #[error("the sets passed to {0} must be pairwise disjoint")]
    Overlap(&'static str),

    #[error("not a district of this graph")]
    NotADistrict,

    #[error("graph violates the structural conditions ({0}); run `rewrite --normalize` first")]
    Conditions(String),

    #[error("district {district} has c-degree {c_degree}; merge its latents first (`--merge`)")]
    CDegree { district: String, c_degree: usize },

    #[error("rewrite precondition failed: {0}")]
    Precondition(String),

    #[error("district {district} needs about {estimated} response columns, over the limit of {limit}")]
    CostGuard {
        district: String,
        estimated: String,
        limit: u128,
    },

    #[error("response level {level} out of range (level count {count})")]
    LevelOutOfRange { level: u128, count: u128 },

    #[error("configuration is missing a value for `{0}`")]
    MissingValue(String),

    #[error("value {value} out of range for `{name}`")]
    ValueOutOfRange { name: String, value: usize },

    #[error("point dimensions disagree: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty point set")]
    EmptyInput,

    #[error("polyhedron is unbounded")]
    Unbounded,

    #[error("polyhedron is empty")]
    Infeasible,

    #[error("distribution: {0}")]
    Distribution(String),
}
