//! Community detection on attributed graphs.
//!
//! Louvain pre-detection fixes the number of communities and their member
//! lists; a one-layer graph convolution then learns embeddings whose softmax
//! similarity to the community centers maximizes soft modularity.

pub mod cli;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod io;
pub mod membership;
pub mod metrics;
pub mod predetect;
pub mod real;
pub mod sparse;
pub mod training;

pub use error::{Error, Result};
pub use graph::{modularity_hard, AttributedGraph, Partition};
pub use real::Real;
pub use sparse::CsrMatrix;
pub use training::{train, TrainConfig, TrainOutput};
