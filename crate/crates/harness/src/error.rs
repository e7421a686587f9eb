use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    BadArgument(String),

    #[error("unknown experiment `{name}`{}", suggestion.as_ref().map(|s| format!("; did you mean `{s}`?")).unwrap_or_default())]
    UnknownExperiment {
        name: String,
        suggestion: Option<String>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] contract_sched::Error),
}

impl HarnessError {
    /// Process exit status: 2 bad arguments, 3 unknown experiment, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::BadArgument(_) | HarnessError::Core(_) => 2,
            HarnessError::UnknownExperiment { .. } => 3,
            HarnessError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Closest candidate by Levenshtein distance, if reasonably close.
pub(crate) fn nearest<'a>(
    name: &str,
    candidates: impl IntoIterator<Item = &'a str>,
) -> Option<String> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .min()
        .filter(|(d, c)| *d < name.len() && *d <= (c.len().max(name.len()) / 2).max(2))
        .map(|(_, c)| c.to_string())
}
