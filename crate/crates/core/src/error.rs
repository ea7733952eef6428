use thiserror::Error;

use crate::hypergraph::Vertex;

/// Everything that can go wrong in this crate.
///
/// Pipeline failures carry the phase they came from so that callers (and the
/// CLI exit-code contract) can distinguish a bad instance from an embedding
/// attempt that simply did not work out at this scale.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),

    #[error("invalid hypertree: {0}")]
    InvalidTree(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported schema version {0:?}")]
    SchemaVersion(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("dichotomy failure: {leaf_edges} leaf edges and {paths} semi-bare paths on {vertices} vertices")]
    DichotomyFailure {
        vertices: usize,
        leaf_edges: usize,
        paths: usize,
    },

    #[error("graph {graph} violates the degree bound at {witness:?} (degree {degree})")]
    DegreeViolation {
        graph: usize,
        witness: Vec<Vertex>,
        degree: u64,
    },

    #[error("partition failure after {attempts} attempts: condition {condition} fails at {witness:?}")]
    PartitionFailure {
        condition: String,
        witness: Vec<Vertex>,
        attempts: usize,
    },

    #[error("embedding stuck at tree edge {edge:?}")]
    EmbeddingStuck { edge: Vec<Vertex> },

    #[error("star embedding failed: {0}")]
    StarEmbeddingFailure(String),

    #[error("no length-3 connection available for pair ({0}, {1})")]
    ConnectionFailure(Vertex, Vertex),

    #[error("could not immerse star centred at {0}")]
    ImmersionFailure(Vertex),

    #[error("no usable absorbing tuple for target {0:?}")]
    AbsorptionFailure(Vec<Vertex>),

    #[error("absorber family too small: {achieved} of {required} tuples")]
    FamilyTooSmall { achieved: usize, required: usize },

    #[error("absorbing set construction failed: {0}")]
    AbsorbingFailure(String),

    #[error("search budget of {0} nodes exhausted")]
    BudgetExhausted(u64),

    #[error("{phase} phase failed after {attempts} attempt(s): {source}")]
    Pipeline {
        phase: Phase,
        attempts: usize,
        source: Box<Error>,
    },

    #[error("verification failed: {0}")]
    Verification(String),
}

/// Phase tags for pipeline failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Decompose,
    Partition,
    Base,
    Stars,
    Paths,
    Split,
    Absorb,
    Complete,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Phase::Decompose => "decompose",
            Phase::Partition => "partition",
            Phase::Base => "base",
            Phase::Stars => "stars",
            Phase::Paths => "paths",
            Phase::Split => "split",
            Phase::Absorb => "absorb",
            Phase::Complete => "complete",
        };
        f.write_str(name)
    }
}

impl Error {
    pub(crate) fn in_phase(self, phase: Phase, attempts: usize) -> Error {
        match self {
            e @ Error::Pipeline { .. } => e,
            e => Error::Pipeline {
                phase,
                attempts,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
