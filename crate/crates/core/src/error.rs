use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-differentiable point ({x}, {y}): inside the guard region of a boundary primitive")]
    NonDifferentiable { x: f64, y: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("near-resonant wavenumber k = {k}: {detail}")]
    NearResonance { k: f64, detail: String },

    #[error("singular finite element system (relative residual {ratio:e})")]
    SingularSystem { ratio: f64 },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("zero-norm reference field")]
    ZeroReference,

    #[error("format error: {0}")]
    Format(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
