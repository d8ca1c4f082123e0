use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("graph has {got} vertices, cap is {cap}")]
    GraphTooLarge { got: usize, cap: usize },

    #[error("negative distance argument {0}")]
    NegativeDistance(f64),

    #[error("{0}")]
    InvalidDecay(String),

    #[error("subset enumeration would produce more than {cap} subsets")]
    TooManySubsets { cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support {support:?} is not contained in the volume ({sites} sites)")]
    SupportOutsideVolume { support: Vec<usize>, sites: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("Hilbert-space dimension {dim} exceeds the cap {cap} for {what}")]
    CapExceeded {
        what: &'static str,
        dim: usize,
        cap: usize,
    },

    #[error("term {index} has a non-Hermitian Hamiltonian part (defect {defect:e})")]
    NonHermitian { index: usize, defect: f64 },

    #[error("no decay function (μ) attached to the generator")]
    MuUnset,

    #[error("invalid time interval: {0}")]
    InvalidTime(String),

    #[error(
        "step size underflow at t = {t} (h = {h:e}, floor = {floor:e}, error ratio = {err:e}); \
         the problem looks stiff"
    )]
    StepUnderflow { t: f64, h: f64, floor: f64, err: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("propagator has no matrix representation (matrix-free above the superoperator cap)")]
    MatrixFree,

    #[error("unknown model {0:?}")]
    UnknownModel(String),

    #[error("model parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("invalid volume sequence: {0}")]
    InvalidSequence(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
