//! The almost-spanning embedding pipeline and the rooted spanning embedder.

mod concentration;
mod config;
mod embedding;
mod partition;
pub(crate) mod phases;
mod pipeline;
mod paths;
mod spanning;

pub use concentration::{concentration_experiment, concentration_threshold, concentration_trial, random_subset, ConcentrationReport, DegreeIndex};
pub use config::HierarchyConfig;
pub use embedding::{verify_embedding, Embedding, EmbeddingFile, Requirements};
pub use partition::{random_partition, Partition, PartitionOptions};
pub use phases::{embed_stars, greedy_embed_base, HostStar};
pub use pipeline::{almost_spanning_embed, AlmostSpanning, PipelineOptions, SPLIT_D};
pub use spanning::{spanning_embed, spanning_embed_with, SpanningOptions};
pub use paths::{connect_bare_paths, count_disjoint_paths3, Path3};
