//! Semantic graph memory engine.
//!
//! Ingests per-timestep object detections together with depth and pose data,
//! and maintains three semantic graphs (a static prior graph, a per-frame
//! current graph, and an accumulating global graph deduplicated by feature
//! similarity) plus a layered top-down spatial semantic map. Graph-convolution
//! kernels and a language-conditioned attention readout turn those structures
//! into embeddings, which feed an action head and an object head; expert
//! labels, when present, yield the imitation cross-entropy loss.
//!
//! The engine is fully deterministic: a trace, a config, and a seed determine
//! every byte of every output artifact.

pub mod config;
pub mod engine;
pub mod error;
pub mod export;
pub mod feature_bank;
pub mod graph_nn;
pub mod heads;
pub mod pgm;
pub mod semantic_graphs;
pub mod spatial_map;
pub mod trace;
pub mod weights;

#[cfg(test)]
pub(crate) mod testsupport;

pub use error::{Error, Result};
pub use feature_bank::{
    AttributeVector, FeatureBank, NodeFeature, VisualFeature, ATTRIBUTE_DIM, CLASS_COUNT,
    NODE_FEATURE_DIM, VISUAL_DIM, WORD_DIM,
};
