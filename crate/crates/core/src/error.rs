use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample rate must be positive")]
    InvalidSampleRate,
    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },
    #[error("empty input")]
    Empty,
    #[error("{0} signal is silent")]
    Silent(&'static str),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("frame count mismatch: {left} vs {right}")]
    FrameCountMismatch { left: usize, right: usize },
    #[error("zero-lag autocorrelation must be positive")]
    NonPositiveEnergy,
    #[error("unstable recursion at order {order}: reflection coefficient {reflection}")]
    UnstableLpc { order: usize, reflection: f64 },
    #[error("line spectral root search failed on frame {frame}: found {found} of {expected} roots")]
    LsfRootSearch { frame: usize, found: usize, expected: usize },
    #[error("non-finite value in {stage} at frame {frame}")]
    NonFinite { stage: &'static str, frame: usize },
    #[error("not enough frames to train {components} components: have {frames}, need at least {required}; use fewer components")]
    InsufficientFrames { frames: usize, components: usize, required: usize },
    #[error("non-positive variance")]
    NonPositiveVariance,
    #[error("speaker `{0}` has no training data")]
    NoTrainingData(String),
    #[error("identification needs at least two enrolled models, have {0}")]
    TooFewModels(usize),
}
