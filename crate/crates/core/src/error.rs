use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator is not skewadjoint")]
    NotSkewadjoint,
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("not a majorant: {0}")]
    NotAMajorant(String),
    #[error("leading matrix is degenerate")]
    DegenerateLeadingMatrix,
    #[error("pseudodifferential truncation exceeded (need order {needed}, exact above {floor})")]
    TruncationExceeded { needed: i64, floor: i64 },
    #[error("pivot leading coefficient is not invertible in the coefficient field: {0}")]
    NonInvertiblePivot(String),
    #[error("no rational solution: {0}")]
    NoRationalSolution(String),
    #[error("rational ansatz exhausted: {0}")]
    Incomplete(String),
    #[error("not exact: {0}")]
    NotExact(String),
    #[error("residue test undecidable: {0}")]
    UndecidableResidue(String),
    #[error("operator is not quasiconstant")]
    NotQuasiconstant,
    #[error("operator is not Poisson: {0}")]
    NotPoisson(String),
    #[error("array is outside the filtration level: {0}")]
    OutOfFiltration(String),
    #[error("array is not closed")]
    NotClosed,
    #[error("leading coefficient is singular")]
    LeadingCoeffSingular,
    #[error("leading coefficient is not the identity")]
    LeadingCoeffNotIdentity,
    #[error("bad support: {0}")]
    BadSupport(String),
    #[error("operator is not in the sigma space")]
    NotInSigma,
    #[error("no preimage: {0}")]
    NoPreimage(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("jet index {index} exceeds the number of variables {ell}")]
    Arity { index: usize, ell: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
