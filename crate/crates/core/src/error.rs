use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("no collision-free initial trajectory: {0}")]
    InfeasibleInit(String),

    #[error("non-finite value in {what} at outer iteration {outer}")]
    NonFiniteValue { what: &'static str, outer: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}
