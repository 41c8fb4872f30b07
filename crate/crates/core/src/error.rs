use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold facet ({0}, {1}) shared by {2} cells")]
    NonManifoldFacet(usize, usize, usize),

    #[error("degenerate cell {cell} (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("unsupported polynomial order k = {0}")]
    UnsupportedOrder(usize),

    #[error("quadrature degree {0} outside supported range 0..=14")]
    QuadratureDegree(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("singular factorization at pivot {pivot} (inf-sup or assembly defect)")]
    SingularSystem { pivot: usize },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e} (|b| = {rhs_norm:e}, |x| = {solution_norm:e})")]
    Residual {
        residual: f64,
        tolerance: f64,
        rhs_norm: f64,
        solution_norm: f64,
    },

    #[error("sparse solver failure: {0}")]
    Solver(String),

    #[error("dense eigen/singular value computation failed: {0}")]
    Eigen(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
