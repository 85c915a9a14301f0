use serde::{Deserialize, Serialize};

use super::train::{derive_flow_stats, train_graph, EdgeTrainingConfig, TrainReport};
use crate::mining::{MiningConfig, RuleBook};
use crate::sim::{run_scenario, Mode, Models, ScenarioSpec, SimMetrics, SimOutcome, TimingReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub zt: SimMetrics,
    pub fwd: SimMetrics,
    pub training: TrainReport,
    pub mined_rules: usize,
}

impl Comparison {
    pub fn packet_in_reduced(&self) -> bool {
        self.zt.packet_in_count < self.fwd.packet_in_count
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub comparison: Comparison,
    pub zt: SimOutcome,
    pub fwd: SimOutcome,
    pub models: Models,
    pub timing: Vec<(Mode, TimingReport)>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error(transparent)]
    Mining(#[from] crate::mining::MiningError),
    #[error("training: {0}")]
    Training(String),
}

/// Runs the training pass, trains and mines the models, then replays the
/// scenario under the zero-trust and the forwarding controller.
pub fn compare_controllers(
    spec: &ScenarioSpec,
    training: &EdgeTrainingConfig,
    mining: &MiningConfig,
) -> Result<ComparisonRun, SimulateError> {
    let pass = run_scenario(&spec.training_pass(), None)?;
    let mut graph = pass.graph.expect("training runs build a graph");
    // Switch counters of the training pass drop whenever a per-session rule
    // expires; the mirrored packets give an uninterrupted cumulative series.
    for edge in graph.edges.values_mut() {
        edge.flow_stats = derive_flow_stats(&edge.packet_dataset, spec.params.stats_interval);
    }
    let report = train_graph(&mut graph, training).map_err(SimulateError::Training)?;
    let rules = RuleBook::mine(&graph, mining)?;
    let models = Models { graph, rules };

    let zt = run_scenario(&spec.with_mode(Mode::Zt), Some(&models))?;
    let fwd = run_scenario(&spec.with_mode(Mode::Fwd), None)?;
    let comparison = Comparison {
        zt: zt.metrics.clone(),
        fwd: fwd.metrics.clone(),
        training: report,
        mined_rules: models.rules.rules.len(),
    };
    let timing = vec![(Mode::Zt, zt.timing.clone()), (Mode::Fwd, fwd.timing.clone())];
    Ok(ComparisonRun { comparison, zt, fwd, models, timing })
}
