//! Lowest-order Whitney forms on simplicial meshes of the square and the cube,
//! and the machinery to measure how well the Whitney codifferential
//! `d*_h π_h u` approximates `d* u`.

pub mod complex;
pub mod error;
pub mod experiment;
pub mod forms;
pub mod geometry;
pub mod lab;
pub mod mesh;
mod par;
pub mod quadrature;
pub mod sparse;
pub mod whitney;

pub use complex::{build_complex, Cochain, MeshStats, SimplicialComplex};
pub use error::{Error, Result};
pub use par::set_threads;
pub use sparse::{cg_solve, CsrMatrix, SolveOptions, SolveReport};
