use serde::{Deserialize, Serialize};

use crate::arl::{ArlDetector, ArlState, ArlTrainingConfig};
use crate::graph::{CrEdge, CrGraph, EdgeKey};
use crate::rtfsl::{RtfslConfig, RtfslModel, RtfslState};
use crate::sim::ScenarioSpec;
use crate::trace::{preprocess, FlowStatSample, PacketRecord};

/// Cumulative packet and byte counts of `packets` sampled every `interval`
/// seconds, from the first packet until one interval past the last.
pub fn derive_flow_stats(packets: &[PacketRecord], interval: f64) -> Vec<FlowStatSample> {
    let Some(first) = packets.first() else { return Vec::new() };
    let last = packets.last().expect("non-empty").ts;
    let mut out = Vec::new();
    let (mut p, mut b) = (0u64, 0u64);
    let mut i = 0;
    let mut k = 1u64;
    loop {
        let t = first.ts + k as f64 * interval;
        while i < packets.len() && packets[i].ts < t {
            p += 1;
            b += u64::from(packets[i].ip_len);
            i += 1;
        }
        out.push(FlowStatSample { t, packets_cum: p, bytes_cum: b });
        if t > last {
            break;
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTrainReport {
    pub edge: String,
    pub packets: usize,
    pub flow_samples: usize,
    pub arl_state: ArlState,
    pub arl_threshold: Option<f64>,
    pub arl_training_stop: Option<u64>,
    pub arl_failed_validations: u32,
    pub rtfsl_state: RtfslState,
    pub rtfsl_library: usize,
    pub rtfsl_failed_validations: u32,
}

impl EdgeTrainReport {
    pub fn converged(&self) -> bool {
        self.arl_state == ArlState::Execute && self.rtfsl_state == RtfslState::Execute
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub edges: Vec<EdgeTrainReport>,
    /// Edges whose detectors did not reach execution on the available data.
    pub failures: Vec<String>,
}

/// Settings for training every edge of a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdgeTrainingConfig {
    pub arl: ArlTrainingConfig,
    pub rtfsl: RtfslConfig,
    /// Use the stack's default window size instead of `rtfsl.window_size`.
    pub window_by_stack: bool,
    pub seed: u64,
}

impl Default for EdgeTrainingConfig {
    fn default() -> Self {
        EdgeTrainingConfig {
            arl: ArlTrainingConfig::default(),
            rtfsl: RtfslConfig::default(),
            window_by_stack: true,
            seed: 1,
        }
    }
}

impl EdgeTrainingConfig {
    /// Adapts the settings to a simulated training pass. Access models may
    /// stop training once nine tenths of the pass are over, so their
    /// validation window ends close to the measured traffic. Flow statistics
    /// are sampled at the simulator's query interval.
    pub fn for_scenario(&self, spec: &ScenarioSpec) -> Self {
        let mut cfg = self.clone();
        let pass = spec.training_pass();
        let span = pass.workload.iter().map(|w| w.duration).fold(0.0, f64::max);
        cfg.arl.min_train_duration = cfg.arl.min_train_duration.min(0.9 * span);
        cfg.rtfsl.sampling_rate = spec.params.stats_interval;
        cfg.rtfsl.min_train_duration = 0.0;
        cfg
    }
}

fn edge_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64)
}

fn train_edge(edge: &mut CrEdge, index: usize, cfg: &EdgeTrainingConfig) -> EdgeTrainReport {
    let mut arl = ArlDetector::new(cfg.arl.clone(), edge_seed(cfg.seed, index)).expect("validated config");
    for rec in &edge.packet_dataset {
        // Stacks were checked when the record joined the edge.
        let v = preprocess(rec).expect("supported stack");
        arl.feed(&v, rec.ts).expect("uniform schema per edge");
    }
    let mut rcfg = cfg.rtfsl.clone();
    if cfg.window_by_stack {
        rcfg.window_size = RtfslConfig::window_for(&edge.key.stack);
        rcfg.min_train_samples = rcfg.min_train_samples.max(rcfg.window_size);
    }
    let mut rtfsl = RtfslModel::new(rcfg).expect("validated config");
    for s in &edge.flow_stats {
        rtfsl.train_feed(*s).expect("model accepts samples");
    }
    let report = EdgeTrainReport {
        edge: edge.key.to_string(),
        packets: edge.packet_dataset.len(),
        flow_samples: edge.flow_stats.len(),
        arl_state: arl.state(),
        arl_threshold: arl.decision_threshold(),
        arl_training_stop: arl.training_stop(),
        arl_failed_validations: arl.failed_validations(),
        rtfsl_state: rtfsl.state(),
        rtfsl_library: rtfsl.library(crate::rtfsl::Channel::Packets).len(),
        rtfsl_failed_validations: rtfsl.failed_validations(),
    };
    edge.arl = Some(arl);
    edge.rtfsl = Some(rtfsl);
    report
}

/// Trains the detectors of every edge, in parallel across edges.
pub fn train_graph(graph: &mut CrGraph, cfg: &EdgeTrainingConfig) -> Result<TrainReport, String> {
    cfg.arl.validate().map_err(|e| e.to_string())?;
    let mut probe = cfg.rtfsl.clone();
    probe.min_train_samples = probe.min_train_samples.max(probe.window_size).max(90);
    probe.validate().map_err(|e| e.to_string())?;

    let mut edges: Vec<(usize, &mut CrEdge)> = graph.edges.values_mut().enumerate().collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(edges.len().max(1));
    let chunk = edges.len().div_ceil(workers).max(1);
    let mut reports: Vec<(usize, EdgeTrainReport)> = std::thread::scope(|s| {
        let handles: Vec<_> = edges
            .chunks_mut(chunk)
            .map(|part| {
                s.spawn(move || part.iter_mut().map(|(i, e)| (*i, train_edge(e, *i, cfg))).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("training thread")).collect()
    });
    reports.sort_by_key(|(i, _)| *i);
    let edges: Vec<EdgeTrainReport> = reports.into_iter().map(|(_, r)| r).collect();
    let failures = edges.iter().filter(|r| !r.converged()).map(|r| r.edge.clone()).collect();
    Ok(TrainReport { edges, failures })
}

/// Edges (by key) that can be enforced: access model in execution.
pub fn enforceable(graph: &CrGraph) -> Vec<&EdgeKey> {
    graph
        .edges
        .values()
        .filter(|e| e.arl.as_ref().is_some_and(|a| a.state() == ArlState::Execute))
        .map(|e| &e.key)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Proto;

    fn pkts(times: &[f64]) -> Vec<PacketRecord> {
        times
            .iter()
            .map(|&t| PacketRecord::transport(t, Proto::Udp, ("10.0.0.1".parse().unwrap(), 1), ("10.0.0.2".parse().unwrap(), 2), 100))
            .collect()
    }

    #[test]
    fn flow_stats_are_cumulative_samples() {
        let s = derive_flow_stats(&pkts(&[0.0, 0.5, 1.2, 3.5]), 1.0);
        let counts: Vec<u64> = s.iter().map(|x| x.packets_cum).collect();
        assert_eq!(counts, vec![2, 3, 3, 4]);
        assert_eq!(s[3].bytes_cum, 400);
        assert!(derive_flow_stats(&[], 1.0).is_empty());
    }
}
