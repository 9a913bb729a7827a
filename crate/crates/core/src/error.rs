use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("leaf `{id}` has non-positive or non-finite mass {mass}")]
    NonPositiveMass { id: String, mass: f64 },

    #[error("weight `{weight}` has non-positive or non-finite value {value} at leaf `{leaf}`")]
    NonPositiveWeight {
        weight: String,
        leaf: String,
        value: f64,
    },

    #[error(
        "children do not partition parent `{id}`: parent mass {parent}, children sum {children}"
    )]
    NotPartition {
        id: String,
        parent: f64,
        children: f64,
    },

    #[error("weight `{weight}` references unknown leaf `{key}`")]
    UnknownLeaf { weight: String, key: String },

    #[error("weight `{weight}` has no value for leaf `{leaf}`")]
    MissingLeaf { weight: String, leaf: String },

    #[error("duplicate leaf id `{0}`")]
    DuplicateLeaf(String),

    #[error("expected {expected} leaf values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("dyadic depth {0} outside 0..=24")]
    DepthOutOfRange(usize),

    #[error("level {level} outside 0..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("atom {atom} does not exist at level {level}")]
    AtomOutOfRange { level: usize, atom: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("leaf set is not a union of level-{level} atoms")]
    NotMeasurable { level: usize },

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("constraint `{0}` infeasible at every sampled start")]
    Infeasible(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
