use std::path::PathBuf;

use crate::model::{AreaId, Position, UserId, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("position ({}, {}) lies outside the area grid", .0.x, .0.y)]
    OutOfBounds(Position),

    #[error("area {0} does not exist in the grid")]
    UnknownArea(AreaId),

    #[error("invalid scenario configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("a user cannot spot itself ({0})")]
    SelfSighting(UserId),

    #[error("malformed chain of sight: {0}")]
    MalformedChain(String),

    #[error("exhaustive search refused: {nodes} nodes exceeds the guard of {limit}")]
    SearchTooLarge { nodes: usize, limit: usize },

    #[error("coverer {coverer} is not inside covered area {area}")]
    CovererOutsideArea { coverer: UserId, area: AreaId },

    #[error("a single-area grid leaves no area to spoof from")]
    NoAlternativeArea,

    #[error("unknown {kind} `{name}`; valid names: {}", .valid.join(", "))]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: Vec<String>,
    },

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that stem from the scenario input rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::Parse(_)
                | Error::UnknownName { .. }
                | Error::NoAlternativeArea
                | Error::UnknownArea(_)
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
