use std::path::PathBuf;

use thiserror::Error;

/// Every failure the recognition pipeline can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("netpbm format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("empty glyph: no foreground pixels")]
    Empty,

    #[error("feature selection kept no features (all variances are zero)")]
    Degenerate,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dim { expected: usize, got: usize },

    #[error("line {line}: bad magic, expected \"AOCR1\"")]
    Magic { line: usize },

    #[error("line {line}: model file truncated ({message})")]
    Truncated { line: usize, message: String },

    #[error("line {line}: {message}")]
    DimMismatch { line: usize, message: String },

    #[error("line {line}: {message}")]
    ModelSyntax { line: usize, message: String },

    #[error("manifest header must be exactly \"path,label,split\", found {found:?}")]
    Header { found: String },

    #[error("manifest row {row}: unknown label {label:?}")]
    Label { row: usize, label: String },

    #[error("manifest row {row}: split must be \"train\" or \"test\", found {split:?}")]
    Split { row: usize, split: String },

    #[error("manifest row {row}: {message}")]
    Manifest { row: usize, message: String },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("training set is empty")]
    EmptyDataset,

    #[error("evaluation split is empty")]
    EmptySplit,

    #[error("template missing for label {label:?}: {}", .path.display())]
    TemplateMissing { label: String, path: PathBuf },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
