//! Rooted spanning loose-hypertree embedding in dense k-uniform hypergraphs.
//!
//! The crate provides exact hypergraph primitives, hypertree decompositions,
//! a rainbow matching solver, a randomized almost-spanning embedder with
//! audited partitions, absorption gadgets, and brute-force oracles for
//! certifying small instances.

pub mod absorb;
pub mod audit;
pub mod decompose;
pub mod embed;
pub mod error;
pub mod hypergraph;
pub mod hypertree;
pub mod instances;
pub mod matching;
pub mod oracle;
pub mod util;
pub mod util_serde;

pub use error::{Error, Phase, Result};
pub use hypergraph::{Edge, KGraph, Vertex, VertexSet};
pub use hypertree::Hypertree;

/// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/hypergraphs.md")]
    mod hypergraphs {}
    #[doc = include_str!("../../../book/src/hypertrees.md")]
    mod hypertrees {}
    #[doc = include_str!("../../../book/src/matchings.md")]
    mod matchings {}
    #[doc = include_str!("../../../book/src/embedding.md")]
    mod embedding {}
    #[doc = include_str!("../../../book/src/absorption.md")]
    mod absorption {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
