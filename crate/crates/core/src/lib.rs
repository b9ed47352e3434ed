//! Hyperbolic growth models, maximum-likelihood embedding of scale-free networks into
//! the hyperbolic plane, and evaluation of the resulting maps.

// index loops read better than zipped iterators in the numeric kernels; `!(x > 0.0)`
// also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod context;
pub mod embed;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
mod kernel;
pub mod linkpred;
pub mod metrics;
pub mod model;
pub mod netgen;
pub mod params;
pub mod rng;
pub mod router;
pub mod stats;
pub mod temperature;
pub mod topology;

pub use context::{GlobalProbability, LikelihoodContext};
pub use embedding::{Embedding, EmbeddingProvenance};
pub use error::{Error, Result};
pub use geometry::{hyperbolic_distance, PolarPoint};
pub use graph::AdjacencySnapshot;
pub use netgen::{grow, GrownNetwork, ModelKind};
pub use params::ModelParams;
