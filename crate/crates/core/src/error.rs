use num_bigint::BigUint;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("empty tree")]
    EmptyTree,

    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),

    #[error("vertex '{0}' has exactly one child")]
    UnaryVertex(String),

    #[error("unknown vertex '{0}'")]
    UnknownVertex(String),

    #[error("vertex '{0}' is a leaf")]
    LeafVertex(String),

    #[error("tree is not binary")]
    NotBinary,

    #[error("tree has no interior vertex")]
    NoInteriorVertex,

    #[error("vertices must be distinct, got '{0}' twice")]
    SameVertex(String),

    #[error("'{ancestor}' is not a proper ancestor of '{descendant}'")]
    NotAncestor {
        ancestor: String,
        descendant: String,
    },

    #[error("'{parent}' is not the parent of '{child}'")]
    NotParent { parent: String, child: String },

    #[error("vertex '{0}' has no leaf child")]
    NoLeafChild(String),

    #[error("pendant edge lengths are only defined under the Yule model")]
    PendantUnsupported,

    #[error("edge ending at leaf '{0}' is a pendant edge; only interior edges are averaged over resolutions")]
    PendantEdge(String),

    #[error("invalid rank pair ({i}, {j}): need 1 <= i < j")]
    InvalidRanks { i: usize, j: usize },

    #[error("{count} binary resolutions exceed the cap of {cap}")]
    ResolutionCap { count: BigUint, cap: usize },

    #[error("{interior} interior vertices exceed the enumeration limit of {limit}")]
    EnumerationLimit { interior: usize, limit: usize },

    #[error("no edge length for the edge ending at '{0}'")]
    MissingEdge(String),

    #[error("not a rank function: {0}")]
    InvalidRankFunction(String),
}
