use std::path::PathBuf;

use thiserror::Error;

use crate::catalog::PriceVector;

/// Every invariant a catalog or episode config failed, in discovery order.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration: {}", violations.join("; "))]
pub struct CatalogError {
    pub violations: Vec<String>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Catalog(#[from] CatalogError),

    #[error("SKU index {index} out of range for catalog of {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error(
        "{available} available SKUs exceed the power-set cap of {cap}; pass a max basket size"
    )]
    EnumerationCap { available: usize, cap: usize },

    #[error("arrival rate must be non-negative and finite (got {0})")]
    InvalidRate(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("order log timestamps decrease at row {row}")]
    NonMonotoneLog { row: usize },

    #[error("time {t} lies outside the rate profile horizon [0, {horizon})")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("epoch {epoch} out of range 1..={max}")]
    EpochOutOfRange { epoch: usize, max: usize },

    #[error("price solver did not converge after {sweeps} sweeps (residuals {residuals:?}, best {best})")]
    NotConverged {
        sweeps: usize,
        best: PriceVector,
        residuals: Vec<f64>,
    },

    #[error("price grid is empty")]
    EmptyGrid,

    #[error("no value weights for epoch {0}")]
    MissingWeights(usize),

    #[error("no trajectory samples for epoch {0}")]
    EmptyEpoch(usize),

    #[error("non-finite regression target at epoch {0}")]
    NonFiniteTarget(usize),

    #[error("singular normal equations at epoch {0}")]
    Singular(usize),

    #[error("policy contract violated at epoch {epoch}, SKU {sku}: {reason}")]
    ContractViolation {
        epoch: usize,
        sku: usize,
        reason: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
