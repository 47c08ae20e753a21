use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text, with the 1-based line it was found on.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A well-formed value outside its legal range.
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },

    /// Structurally inconsistent input (ordering, duplicates, missing references).
    #[error("input error: {0}")]
    Input(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric guard: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Attach a line number to an error raised while decoding one record.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { .. } | Error::Io(_) => self,
            other => Error::Parse {
                line,
                message: other.to_string(),
            },
        }
    }
}
