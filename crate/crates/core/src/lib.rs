//! Toric weak factorization: cone complexes, subdivisions, birational
//! cobordisms and the factorization engine, with an independent checker.

pub mod cobordism;
pub mod complex;
pub mod doc;
pub mod engine;
pub mod lattice;
pub mod lp;
pub mod num;
pub mod subdiv;
pub mod verify;

/// Lattice coordinates.
pub type Int = i64;
/// Exact field used for solves, determinants and linear programs.
pub type Rational = num_rational::BigRational;
/// Integer matrix over lattice coordinates.
pub type Matrix = lattice::IntMatrix<Int>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("the zero cone has no barycenter")]
    NoBarycenter,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid cone: {0}")]
    InvalidCone(String),
    #[error("invalid face map: {0}")]
    InvalidFaceMap(String),
    #[error("not a PL function datum: {0}")]
    NotPlDatum(String),
    #[error("star subdivision of cone {cone} is not smooth")]
    NonSmoothStar { cone: String },
    #[error("complex is not nonsingular: {0}")]
    NotNonsingular(String),
    #[error("linear program infeasible: {0}")]
    Infeasible(String),
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("not a geometric chamber: {0}")]
    NotGeometricChamber(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
