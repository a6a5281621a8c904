//! Force-based analysis of t-SNE embeddings.

pub mod affinity;
pub mod error;
pub mod forces;
pub mod graph;
pub mod io;
pub mod meanfield;
pub mod svg;
pub mod tsne;

pub use error::{Error, Result};
