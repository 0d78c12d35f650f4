use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Messages carry their whole cause chain, so `source()` is not used.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: io::Error },
    #[error("{}: unsupported WAV encoding ({detail}); expected 16-bit integer PCM", path.display())]
    UnsupportedWav { path: PathBuf, detail: String },
    #[error("{}: truncated or malformed WAV ({detail})", path.display())]
    TruncatedWav { path: PathBuf, detail: String },
    #[error("{}: WAV contains no samples", path.display())]
    EmptyWav { path: PathBuf },
    #[error("sample {index} = {value} is outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cepstra_core::Error),
    #[error("{}: {cause}", path.display())]
    Context { path: PathBuf, cause: Box<Error> },
    #[error("grid cell {condition} / {feature}: {cause}")]
    Cell { condition: String, feature: String, cause: Box<Error> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), cause: source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format { path: path.into(), detail: detail.into() }
    }

    /// Attaches a file path unless the error already names one.
    pub(crate) fn at(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Core(_) | Error::OutOfRange { .. } => Error::Context { path: path.into(), cause: Box::new(self) },
            other => other,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let path = PathBuf::from("<csv>");
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    }
}
