use thiserror::Error;

/// Errors raised by field construction, transforms and the solvers built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice mismatch: N={left} (grid factor {left_gf}) vs N={right} (grid factor {right_gf})")]
    LatticeMismatch {
        left: usize,
        left_gf: usize,
        right: usize,
        right_gf: usize,
    },

    #[error("field is not Hermitian-symmetric (max defect {0:.3e})")]
    NotHermitian(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("grid resolution {got} is insufficient, need at least {need}")]
    InsufficientResolution { got: usize, need: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dyadic partition with j_max={j_max} does not cover lattice radius {radius:.3}")]
    PartitionTooSmall { j_max: i32, radius: f64 },

    #[error("block index {0} out of range")]
    BlockOutOfRange(i32),

    #[error("time grid error: {0}")]
    TimeGrid(String),

    #[error("exponential of field with sup norm {0:.3} exceeds the supported range")]
    ExpOverflow(f64),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("picard iteration failed to contract (last residuals {residuals:?}, horizon {horizon})")]
    NoContraction { residuals: Vec<f64>, horizon: f64 },

    #[error("direct solver unstable at dt={dt:e}")]
    Unstable { dt: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
