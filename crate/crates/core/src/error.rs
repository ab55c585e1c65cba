use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic: expected \"MRFA\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated container: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("malformed container header: {0}")]
    Header(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-physical tissue parameters T1={t1} ms < T2={t2} ms")]
    NonPhysical { t1: f64, t2: f64 },
    #[error("simulation failed for atom {atom} (T1={t1}, T2={t2}): {reason}")]
    Simulation {
        atom: usize,
        t1: f64,
        t2: f64,
        reason: String,
    },
    #[error("SVD failed: {0}")]
    Svd(String),
    #[error("empty dictionary")]
    EmptyDictionary,
    #[error("index {index} out of range for {len} atoms")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("forward image is zero; step size undefined")]
    ZeroForward,
    #[error("solver diverged at iteration {iter}: fidelity {fidelity:e} > 10x initial {initial:e}")]
    Diverged {
        iter: usize,
        fidelity: f64,
        initial: f64,
    },
    #[error("zero ground truth inside mask at voxel {0}")]
    ZeroTruth(usize),
    #[error("empty region of interest")]
    EmptyRoi,
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
