//! Conditional independence relations, graphoid axioms and Markov properties
//! of undirected graphs, with Gaussian and binary process models.

pub mod counterexamples;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod graphoid;
pub mod lattice;
pub mod report;

pub use error::{Error, Result};
