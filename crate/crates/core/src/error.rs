//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Agent and person occupy the same point; the pairwise field is undefined.
    #[error("degenerate distance (d = 0){}", fmt_person(.person_index))]
    DegenerateDistance { person_index: Option<usize> },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid scenario `{id}`: {reason}")]
    InvalidScenario { id: String, reason: String },

    #[error("scenario file parse error: {0}")]
    ScenarioParse(String),

    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,

    #[error("checkpoint format error in section `{section}`: {reason}")]
    CheckpointFormat { section: String, reason: String },

    #[error("training diverged: {detail}")]
    TrainingDivergence { detail: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_person(idx: &Option<usize>) -> String {
    match idx {
        Some(k) => format!(" at person index {k}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}
