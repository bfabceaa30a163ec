//! DBSCAN accelerated by spectrum-preserving data compression.
//!
//! The pipeline builds a kNN graph over the input, embeds it with the first
//! nontrivial Laplacian eigenvectors, aggregates spectrally similar points
//! into pseudo-samples, runs exact DBSCAN on the compressed set, and projects
//! the cluster labels back to the original points.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`dataset`]: sample matrices, loaders (CSV / IDX), synthetic generators
//! - [`graph`]: symmetrized kNN graph and its combinatorial Laplacian
//! - [`embedding`]: smallest Laplacian eigenpairs (dense Jacobi / Lanczos)
//! - [`compression`]: spectral-similarity aggregation and label projection
//! - [`dbscan`]: exact, deterministic DBSCAN with an epsilon heuristic
//! - [`eval`]: accuracy metric, k-means demo, pipeline and benchmark harness

pub mod compression;
pub mod dataset;
pub mod dbscan;
pub mod embedding;
pub mod eval;
pub mod graph;

mod error;

pub use error::{Error, Result};
