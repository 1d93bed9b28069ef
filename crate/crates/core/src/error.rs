use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset spec has an empty class set")]
    EmptyClassSet,
    #[error("dataset has no frames")]
    EmptyDataset,
    #[error("frame power {0:e} is below the degenerate threshold")]
    DegenerateFrame(f64),
    #[error("hyper-parameters {params} are not on the {algorithm} grid")]
    InvalidHyperParams { algorithm: String, params: String },
    #[error("case label is invalid: {0}")]
    InvalidLabel(String),
    #[error("no case with seq {0}")]
    UnknownSeq(u64),
    #[error("replacement does not improve on the stored evaluation")]
    NoImprovement,
    #[error("no stored context {0}")]
    MissingContext(u64),
    #[error("case base is empty")]
    EmptyCaseBase,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
