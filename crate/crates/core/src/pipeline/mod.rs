//! End-to-end commands: ingest traces, train per-edge detectors, mine rules,
//! evaluate enforcement and compare simulated controllers.

mod commands;
mod config;
mod simulate;
mod train;

pub use commands::{
    build_graph, cmd_enforce, cmd_mine, cmd_report, cmd_simulate, cmd_train, load_traces, Confusion, EnforceSummary,
    SimulateReport, TrainSummary, DECISIONS_FILE, ENFORCE_SUMMARY, METRICS_FILE, REPORT_FILE, RULES_FILE, TIMING_FILE,
    TRAIN_REPORT, VERDICTS_FILE,
};
pub use config::PipelineConfig;
pub use simulate::{compare_controllers, Comparison, ComparisonRun, SimulateError};
pub use train::{derive_flow_stats, enforceable, train_graph, EdgeTrainReport, EdgeTrainingConfig, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("config: {0}")]
    Config(String),
    #[error("no supported packets")]
    NoSupportedPackets,
    #[error("no trained models in {0}")]
    MissingModels(String),
    #[error("schema drift: {0}")]
    SchemaDrift(String),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Arl(#[from] crate::arl::ArlError),
    #[error(transparent)]
    Rtfsl(#[from] crate::rtfsl::RtfslError),
    #[error(transparent)]
    Mining(#[from] crate::mining::MiningError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CommandError {
    /// Process exit code: 2 for invalid inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_)
            | CommandError::NoSupportedPackets
            | CommandError::SchemaDrift(_)
            | CommandError::Trace(_)
            | CommandError::Sim(_) => 2,
            _ => 1,
        }
    }
}

/// Exit code for a training run that left edges short of execution.
pub const EXIT_TRAINING_HEURISTICS: i32 = 3;
