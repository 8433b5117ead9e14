use thiserror::Error;

use crate::sparse::SolveReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cell {cell} has (near) zero volume")]
    DegenerateCell { cell: usize },
    #[error("cell {cell} references vertex {index}, but only {n_vertices} vertices exist")]
    IndexOutOfRange {
        cell: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("cell {cell} repeats a vertex or duplicates another cell")]
    DuplicateCell { cell: usize },
    #[error("face {face:?} is shared by more than two cells")]
    NonManifold { face: Vec<usize> },
    #[error("unsupported spatial dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("form degree {k} out of range for dimension {n}")]
    DegreeOutOfRange { k: usize, n: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("conjugate gradient did not converge: {0:?}")]
    NotConverged(SolveReport),
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("matrix is not structurally symmetric")]
    NotSymmetric,
    #[error("no quadrature rule for dimension {dim} and degree {degree}")]
    UnsupportedQuadrature { dim: usize, degree: usize },
    #[error("unknown analytic form `{0}`")]
    UnknownForm(String),
    #[error("unknown experiment case `{0}`")]
    UnknownCase(String),
    #[error("unknown mesh generator `{0}`")]
    UnknownGenerator(String),
    #[error("{face:?} is not a face of cell {cell}")]
    NotAFace { cell: usize, face: Vec<usize> },
    #[error("x = {x} is not a multiple of h/2 = {half_h}")]
    OffGrid { x: f64, half_h: f64 },
    #[error("negative radicand {0:e}")]
    NegativeRadicand(f64),
    #[error("direction vectors are linearly dependent")]
    DependentDirections,
    #[error("resource guard: level {level} needs {cells} cells (limit {limit})")]
    ResourceGuard {
        level: usize,
        cells: usize,
        limit: usize,
    },
    #[error("mesh parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
