use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is singular (det = {det:e})")]
    SingularMatrix { det: f64 },
    #[error("singular values coincide; major axis undefined")]
    DegenerateAxes,
    #[error("no convergence after {steps} steps (last step moved {last_step:e})")]
    NoConvergence { steps: usize, last_step: f64 },
    #[error("word prefix of length {len} too short (needed {needed})")]
    PrefixTooShort { len: usize, needed: usize },
    #[error("threshold 2^-{exponent} below 2^-900")]
    ThresholdTooSmall { exponent: u64 },
    #[error("restricted mass {n_eff:.1} effective samples below floor {floor}")]
    InsufficientMass { n_eff: f64, floor: f64 },
    #[error("measure has empty support after restriction")]
    EmptySupport,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("requested depth {requested} exceeds index depth {available}")]
    DepthExceeded { requested: u32, available: u32 },
    #[error("only {reliable} reliable scales in window (need {needed})")]
    UnreliableScales { reliable: usize, needed: usize },
    #[error("direction {theta} has |y| <= 1e-12 at step {step}")]
    DegenerateDirection { theta: f64, step: usize },
    #[error("tail bound {bound:e} not certified (ratio {ratio})")]
    TailNotCertified { bound: f64, ratio: f64 },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
