//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DivideError {
    #[error("three or more strands pass through ({x}, {y})")]
    TriplePoint { x: String, y: String },

    #[error("tangency: {detail}")]
    Tangency { detail: String },

    #[error("branch endpoint lies on another curve at ({x}, {y})")]
    EndpointOnInterior { x: String, y: String },

    #[error("arrangement is not generic: {0}")]
    NotGeneric(String),

    #[error("sign anchors are inconsistent with the checkerboard coloring")]
    InconsistentAnchors,

    #[error("divide is unsigned; assign signs first")]
    UnsignedDivide,

    #[error("band offset never became small enough after {retries} retries: {detail}")]
    EtaTooLarge { retries: u32, detail: String },

    #[error("pattern sampling could not separate the crossings: {0}")]
    GenericityFailure(String),

    #[error("selected branch has the wrong kind (open vs closed)")]
    WrongBranchKind,

    #[error("branch index {0} out of range")]
    NoSuchBranch(usize),

    #[error("divide has no core curve")]
    NoCore,

    #[error("divide has no star-product provenance")]
    NoProvenance,

    #[error("minima companion classes need a walk specification")]
    MissingWalkSpec,

    #[error("pattern exponents must be coprime")]
    NotCoprime,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("class vector has length {got}, basis has {want}")]
    LengthMismatch { got: usize, want: usize },

    #[error("unknown name `{0}` in twist word")]
    UnknownName(String),

    #[error("block parameters too large to synthesize: {0}")]
    BlockTooLarge(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
