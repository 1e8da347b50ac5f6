use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("chart needs at least one coordinate")]
    Empty,
    #[error("{names} coordinate names but {intervals} domain intervals")]
    DomainLength { names: usize, intervals: usize },
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("empty or non-finite interval [{lo}, {hi}] for `{name}`")]
    BadInterval { name: String, lo: f64, hi: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalcError {
    #[error("degree overflow: result degree {0} exceeds 3")]
    DegreeOverflow(usize),
    #[error("degree underflow")]
    DegreeUnderflow,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame is rank deficient at {point:?}: rank {rank}, expected {expected}")]
    RankDeficient { point: Vec<f64>, rank: usize, expected: usize },
    #[error("bivector is not Poisson: max |[L,L]| = {residual:e}")]
    NotPoisson { residual: f64 },
    #[error("not a Jacobi pair: residual {residual:e}")]
    NotJacobiPair { residual: f64 },
    #[error("function is not admissible at {point:?}: residual {residual:e}")]
    NotAdmissible { point: Vec<f64>, residual: f64 },
    #[error("{0}")]
    Invalid(String),
}
