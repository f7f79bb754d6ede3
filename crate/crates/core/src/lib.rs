//! A numerical laboratory for quantitative Littlewood counting.
//!
//! The crate counts near-solutions of `n⟨nα⟩⟨nβ⟩ < ε` exactly, follows the
//! diagonal flow `a_{s,t} = diag(e^{-s-t}, e^s, e^t)` on unimodular lattices
//! in ℝ³, decomposes visits to the cusp into the triangles swept out by single
//! lattice vectors, and checks the counting inequalities that connect the two
//! pictures at finite parameters.

pub mod cli;
pub mod error;
pub mod counting;
pub mod empirical;
pub mod excursions;
pub mod lattice;
pub mod realnum;
pub mod report;
pub mod symbolic;

pub use error::{LabError, Result};
