use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate post id `{0}`")]
    DuplicatePost(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Mining hit one of its resource caps. `partial` is the number of
    /// itemsets produced before stopping.
    #[error("resource limit exceeded ({limit}) after {partial} itemsets")]
    ResourceLimit { limit: ResourceKind, partial: usize },

    #[error("initial threshold {threshold} already exceeds the time cap")]
    ThresholdTooSlow { threshold: u32 },

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResourceKind {
    ItemsetCap,
    TimeBudget,
}

impl std::fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResourceKind::ItemsetCap => f.write_str("itemset cap"),
            ResourceKind::TimeBudget => f.write_str("time budget"),
        }
    }
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::ResourceLimit { .. } | Error::ThresholdTooSlow { .. }
        )
    }
}
