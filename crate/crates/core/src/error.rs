use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("spectral input is not Hermitian (deviation {0:e})")]
    NonHermitianInput(f64),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Gevrey index theta must exceed 1, got {0}")]
    ThetaOutOfRange(f64),
    #[error("invalid partition config: {0}")]
    InvalidPartition(String),
    #[error("grid too coarse: block {k_max} needs |zeta| up to {needed:.4}, Nyquist is {nyquist:.4}")]
    GridTooCoarse { k_max: i32, needed: f64, nyquist: f64 },
    #[error("block index {0} outside -1..={1}")]
    BlockIndexOutOfRange(i32, i32),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),
    #[error("decay fit failed: {0}")]
    FitFailed(String),
    #[error("time {0} outside (0, 1]")]
    TimeOutOfRange(f64),
    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    QuadratureNotConverged { estimate: f64, error: f64 },
    #[error("sample times must increase from 0")]
    NonIncreasingTimes,
    #[error("kernel diverges at t1 = t2 and x = 0")]
    DivergentKernel,
    #[error("need at least {needed} realizations, got {got}")]
    TooFewRealizations { needed: usize, got: usize },
    #[error("Picard iteration did not converge in {iters} iterations (last difference {last_diff:e})")]
    PicardDiverged { iters: usize, last_diff: f64 },
    #[error("solver aborted at t = {t}: window fell below dt")]
    Abort { t: f64 },
    #[error("grids are not commensurate: {0}")]
    IncommensurateGrids(String),
    #[error("frequency lattices are not nested: {0}")]
    NestingViolation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
