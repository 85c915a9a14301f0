//! Deterministic discrete-event simulation of an OpenFlow-style data plane
//! under a zero-trust controller, a training controller or a reactive
//! forwarding baseline.

mod engine;
mod flow_table;
mod scenario;
mod topology;
mod workload;

pub use engine::{
    run_scenario, Arrival, EventRecord, Fate, HostTraffic, Models, RuleLifetime, SimMetrics, SimOutcome, StatRecord,
    TimingReport,
};
pub use flow_table::{FlowEntry, FlowTable, DEFAULT_COOKIE};
pub use scenario::{Mode, IPERF_TRAINING_SECONDS, IPERF_TRAINING_SESSIONS, ScenarioSpec, SimParams, TrainingOverrides};
pub use topology::{HostSpec, Peer, PortNo, SwitchId, Topology};
pub use workload::{expand, Injection, Traffic, WorkloadItem, EPHEMERAL_PORTS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("invalid scenario: {0}")]
    Spec(String),
    #[error("zero-trust mode needs trained models")]
    MissingModels,
}
