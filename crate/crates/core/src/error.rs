use thiserror::Error;

pub type Result<T> = std::result::Result<T, FfodeError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FfodeError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("zero vector")]
    ZeroVector,
    #[error("matrix norm {norm} exceeds normalization {alpha}")]
    NormExceedsAlpha { norm: f64, alpha: f64 },
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not normal (mu = {0:e})")]
    NonNormal(f64),
    #[error("spectrum violates the required gap or interval: {0}")]
    SpectrumViolation(String),
    #[error("polynomial sup-norm {0} exceeds 1/2 on [-1,1]")]
    SupNormViolation(f64),
    #[error("block-encoding error {measured:e} exceeds claim {claimed:e}")]
    EncodingError { measured: f64, claimed: f64 },
    #[error("alpha shift {alpha} is below an eigenvalue real part {re}")]
    AlphaShiftViolated { alpha: f64, re: f64 },
    #[error("kernel magnitude {0} exceeds 1; alpha/beta floor inconsistent")]
    KernelMagnitude(f64),
    #[error("degenerate solution: {0}")]
    Degenerate(String),
    #[error("required node count {required} exceeds cap {cap}")]
    NodeCapExceeded { required: u64, cap: u64 },
    #[error("missing derivative bound for the inhomogeneous term")]
    MissingDerivativeBound,
    #[error("initial velocity overlaps the kernel of B (weight {0:e})")]
    ZeroModeOverlap(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver/problem mismatch: {0}")]
    Mismatch(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl FfodeError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            FfodeError::Config(_) | FfodeError::InvalidParameter(_) | FfodeError::Io(_) => 2,
            FfodeError::Mismatch(_)
            | FfodeError::NonNormal(_)
            | FfodeError::NotHermitian(_)
            | FfodeError::SpectrumViolation(_) => 3,
            _ => 4,
        }
    }
}

impl From<std::io::Error> for FfodeError {
    fn from(e: std::io::Error) -> Self {
        FfodeError::Io(e.to_string())
    }
}
