use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("segment is empty")]
    EmptySegment,
    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),
    #[error("every element is labeled as an outlier")]
    EmptyInlierSet,
    #[error("triangle term is not concave (a_L < a_U)")]
    NotSubmodular,
    #[error("binary segmentation needs exactly two models, got {0}")]
    NotBinary(usize),
    #[error("negative capacity {0}")]
    NegativeCapacity(i64),
    #[error("self edge on node {0}")]
    SelfEdge(usize),
    #[error("node index {0} out of range")]
    InvalidNode(usize),
    #[error("cannot add zero nodes")]
    ZeroNodes,
    #[error("datum kind does not match model kind")]
    TypeMismatch,
    #[error("invalid input: {0}")]
    Invalid(&'static str),
}
