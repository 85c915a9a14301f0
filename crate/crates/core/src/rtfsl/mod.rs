//! Flow-behavior learning over cumulative flow statistics: first-order
//! differencing, DTW pattern matching and rolling-window monitoring.

mod dtw;
mod model;
mod monitor;

pub use dtw::{dtw_distance, dtw_distance_below, dtw_exact, fast_dtw, EXACT_LIMIT};
pub use model::{
    first_order_diff, match_diffs, split_segments, Channel, DiffSeries, RtfslConfig, RtfslModel, RtfslState,
    TrainReport,
};
pub use monitor::{RtfslMonitor, Verdict, VerdictRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RtfslError {
    #[error("series needs at least 2 samples, got {0}")]
    SeriesTooShort(usize),
    #[error("empty series")]
    EmptySeries,
    #[error("pattern library ({library}) shorter than observation ({observation})")]
    LibraryTooShort { library: usize, observation: usize },
    #[error("operation not available in state {0:?}")]
    InvalidState(RtfslState),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model: {0}")]
    Model(String),
}
