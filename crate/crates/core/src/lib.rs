//! Sparse attention hypergraph regularized dictionary learning.
//!
//! The pipeline has three numerical stages:
//!
//! 1. [`hypergraph`] builds a two-modal hypergraph over the samples. Feature
//!    hyperedges group each sample with its k nearest neighbours, weighting
//!    every neighbour by an l1-sparse attention coefficient solved in
//!    [`sparse_attention`]. Label hyperedges group samples sharing a class.
//! 2. The normalized hypergraph Laplacian of the fused hypergraph becomes a
//!    manifold regularizer on the sparse codes.
//! 3. [`dictlearn`] alternates coordinate-descent code updates with blockwise
//!    dictionary updates, then fits a ridge classifier on the codes.
//!
//! [`harness`] wraps the pipeline with data loading, synthetic data,
//! ablations and the JSON reports used by the `sahdl` binary.

pub mod dictlearn;
pub mod error;
pub mod harness;
pub mod hypergraph;
pub(crate) mod linalg;
pub mod sparse_attention;

pub use dictlearn::{
    Classifier, Dictionary, LearningMode, SahdlParams, SparseCodes, TrainedModel,
};
pub use error::{Result, SahdlError};
pub use hypergraph::{
    DegreePair, FeatureMatrix, Hypergraph, HypergraphConfig, LabelVector, LaplacianMatrix,
    Modal, SafWeighting,
};
pub use sparse_attention::{AdmmParams, AttentionProblem, AttentionSolution};
