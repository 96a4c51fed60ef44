use thiserror::Error;

use crate::graph::Vertex;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid backbone: {0}")]
    InvalidBackbone(String),

    #[error("invalid k-tree: {0}")]
    InvalidKTree(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("k-tree does not retain backbone edge ({0}, {1})")]
    NotRetaining(Vertex, Vertex),

    #[error("separation of child {child:?} does not partition the region")]
    InconsistentPartition { child: Vec<Vertex> },

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("assignment space of {0} cells exceeds the enumeration limit")]
    AssignmentSpaceTooLarge(u128),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
