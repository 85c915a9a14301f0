//! Packet and flow-statistics records, trace file formats, feature
//! preprocessing and standard scaling.

mod features;
mod io;
mod record;
mod scaler;

pub use features::{infer_stack, preprocess, schema_for, FeatureVector, Schema};
pub use io::{
    parse_app_mapping, parse_flow_stats, parse_labeled_trace, parse_trace, record_to_line,
    write_app_mapping, write_flow_stats, write_labeled_trace, write_trace, AppMappingEntry,
    FlowStatSample, Label, APP_MAPPING_COLUMNS, FLOW_STATS_COLUMNS, LABEL_COLUMN, TRACE_COLUMNS,
};
pub use record::{day_of_week, mac_for, Layer, MacAddr, PacketRecord, Proto, ProtocolStack, TcpFlags};
pub use scaler::Scaler;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("missing header row")]
    MissingHeader,
    #[error("unexpected header `{0}`")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: timestamp {ts} precedes previous timestamp {prev}")]
    NonMonotonic { line: u64, prev: f64, ts: f64 },
    #[error("unsupported protocol stack for {0}")]
    UnsupportedStack(Proto),
    #[error("invalid protocol stack `{0}`")]
    InvalidStack(String),
    #[error("schema mismatch: expected [{expected}], found [{found}]")]
    SchemaMismatch { expected: String, found: String },
    #[error("empty dataset")]
    EmptyDataset,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
