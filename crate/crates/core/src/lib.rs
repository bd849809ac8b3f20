//! Weighted-Laplacian design for fast finite-time consensus.
//!
//! Given a fixed undirected topology, the [`minpoly`] driver searches for edge
//! weights whose Laplacian has as few distinct eigenvalues as possible. Fewer
//! distinct eigenvalues means a lower-order minimal polynomial, and the
//! [`consensus`] module turns that into an exact averaging protocol that
//! finishes in `s - 1` synchronous rounds, where `s` is the number of distinct
//! eigenvalues of the Perron matrix.
//!
//! Modules follow the pipeline:
//!
//! * [`graph`]: topologies and generators,
//! * [`laplacian`]: standard/weighted Laplacians and their safety properties,
//! * [`spectral`]: eigendecomposition bookkeeping, spectrum partitioning and
//!   the structural constraint system,
//! * [`solver`]: first-order solvers for the nuclear-norm and correction
//!   subproblems,
//! * [`minpoly`]: the outer iteration that locks in repeated eigenvalues,
//! * [`consensus`]: Perron conversion, coefficient computation and a
//!   per-node simulator.

mod dd;

pub mod consensus;
pub mod graph;
pub mod laplacian;
pub mod matrix;
pub mod minpoly;
pub mod solver;
pub mod spectral;

pub use graph::Graph;
pub use matrix::SymMatrix;
