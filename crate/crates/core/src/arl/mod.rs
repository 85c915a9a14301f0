//! Access-request learning: a feature-mapped autoencoder ensemble per graph
//! edge, trained online until its stop heuristics hold.

mod autoencoder;
mod detector;
mod feature_map;

pub use autoencoder::Autoencoder;
pub use detector::{
    ArlDetector, ArlState, ArlTrainingConfig, AutoencoderEnsemble, Decision, FeedReport, ValidationWindow,
};
pub use feature_map::{correlation_distance, FeatureMap};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArlError {
    #[error("schema mismatch: expected [{expected}], found [{found}]")]
    SchemaMismatch { expected: String, found: String },
    #[error("operation not available in state {0:?}")]
    InvalidState(ArlState),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model: {0}")]
    Model(String),
}
