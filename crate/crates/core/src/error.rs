use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Two bodies are closer than [`crate::mechanics::COLLISION_TOLERANCE`].
    #[error("collision between bodies {i} and {j} (distance {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("invalid mass system: {0}")]
    InvalidMasses(String),

    #[error("invalid scale matrix: sigma_x = {sigma_x}, sigma_y = {sigma_y}")]
    InvalidScale { sigma_x: f64, sigma_y: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("non-finite value encountered")]
    NonFinite,
}
