use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::simulate::{compare_controllers, Comparison};
use super::train::{derive_flow_stats, train_graph, TrainReport};
use super::CommandError;
use crate::arl::{ArlError, ArlState, Decision};
use crate::fsutil::{write_atomic, write_atomic_with};
use crate::graph::{AppResolver, CrGraph, EdgeKey};
use crate::mining::RuleBook;
use crate::rtfsl::{RtfslMonitor, RtfslState, Verdict};
use crate::sim::ScenarioSpec;
use crate::trace::{
    infer_stack, parse_app_mapping, parse_labeled_trace, parse_trace, preprocess, AppMappingEntry, FlowStatSample, Label,
    PacketRecord,
};

pub const TRAIN_REPORT: &str = "train_report.json";
pub const RULES_FILE: &str = "rules.json";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const ENFORCE_SUMMARY: &str = "enforce_summary.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TIMING_FILE: &str = "timing.json";
pub const REPORT_FILE: &str = "report.json";

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn read_mapping(path: &Path) -> Result<Vec<AppMappingEntry>, CommandError> {
    Ok(parse_app_mapping(BufReader::new(File::open(path)?))?)
}

/// Packets of all traces merged in time order; ties keep file order.
pub fn load_traces(paths: &[impl AsRef<Path>]) -> Result<Vec<PacketRecord>, CommandError> {
    let mut all = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let f = File::open(p).map_err(|e| CommandError::Config(format!("{}: {e}", p.display())))?;
        all.extend(parse_trace(BufReader::new(f))?);
    }
    all.sort_by(|a, b| a.ts.total_cmp(&b.ts));
    Ok(all)
}

/// Builds the communication graph with a derived flow-statistics series per edge.
pub fn build_graph(
    packets: &[PacketRecord],
    resolver: &AppResolver,
    sampling_rate: f64,
) -> Result<(CrGraph, usize), CommandError> {
    let mut graph = CrGraph::new();
    let mut skipped = 0;
    for rec in packets {
        if graph.observe(rec, resolver).is_err() {
            skipped += 1;
        }
    }
    if graph.edges.is_empty() {
        return Err(CommandError::NoSupportedPackets);
    }
    for edge in graph.edges.values_mut() {
        edge.flow_stats = derive_flow_stats(&edge.packet_dataset, sampling_rate);
    }
    Ok((graph, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub packets: usize,
    pub skipped_unsupported: usize,
    pub nodes: usize,
    #[serde(flatten)]
    pub report: TrainReport,
}

/// Ingests the traces, trains every edge and saves the graph with its models.
/// Edges that fail their training heuristics are listed in the report.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary, CommandError> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    if cfg.traces.is_empty() {
        return Err(CommandError::Config("no traces configured".into()));
    }
    let mapping_path = PipelineConfig::require_file(cfg.app_mapping.as_ref(), "app mapping")?;
    let packets = load_traces(&cfg.traces)?;
    let resolver = AppResolver::new(cfg.hosts.clone(), read_mapping(&mapping_path)?);
    let (mut graph, skipped) = build_graph(&packets, &resolver, cfg.training.rtfsl.sampling_rate)?;
    let report = train_graph(&mut graph, &cfg.training).map_err(CommandError::Config)?;
    graph.save(&cfg.model_dir)?;
    let summary = TrainSummary { packets: packets.len(), skipped_unsupported: skipped, nodes: graph.nodes.len(), report };
    write_atomic(&cfg.output_dir.join(TRAIN_REPORT), to_json(&summary).as_bytes())?;
    Ok(summary)
}

fn load_graph(cfg: &PipelineConfig) -> Result<CrGraph, CommandError> {
    if !cfg.model_dir.join(crate::graph::GRAPH_FILE).is_file() {
        return Err(CommandError::MissingModels(cfg.model_dir.display().to_string()));
    }
    Ok(CrGraph::load(&cfg.model_dir)?)
}

/// Mines flow rules and rule associations from the trained graph.
pub fn cmd_mine(cfg: &PipelineConfig) -> Result<RuleBook, CommandError> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let graph = load_graph(&cfg)?;
    let book = RuleBook::mine(&graph, &cfg.mining)?;
    write_atomic(&cfg.output_dir.join(RULES_FILE), book.to_json().as_bytes())?;
    Ok(book)
}

/// Positive class: abnormal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn record(&mut self, abnormal: bool, flagged: bool) {
        match (abnormal, flagged) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnforceSummary {
    pub packets: u64,
    pub unlabeled: u64,
    pub allowed: u64,
    pub denied: u64,
    /// Denials by reason.
    pub deny_reasons: BTreeMap<String, u64>,
    pub access: Confusion,
    /// Flow-statistics windows; a window is abnormal when it counted an abnormal packet.
    pub windows: Confusion,
    pub anomalous_edges: Vec<String>,
}

enum Outcome {
    Allow(f64),
    Deny(&'static str, Option<f64>),
}

fn decide(graph: &CrGraph, resolver: &AppResolver, rec: &PacketRecord) -> Result<(Option<EdgeKey>, Outcome), CommandError> {
    let Ok(stack) = infer_stack(rec) else { return Ok((None, Outcome::Deny("unsupported_stack", None))) };
    let (src, dst) = resolver.endpoints(rec);
    let key = EdgeKey { src, dst, stack };
    let Some(edge) = graph.edges.get(&key) else { return Ok((Some(key), Outcome::Deny("unknown_edge", None))) };
    let Some(arl) = edge.arl.as_ref().filter(|a| a.state() == ArlState::Execute) else {
        return Ok((Some(key), Outcome::Deny("model_not_ready", None)));
    };
    let v = preprocess(rec)?;
    let outcome = match arl.decide(&v) {
        Ok(Decision::Allow) => Outcome::Allow(arl.score(&v)?),
        Ok(Decision::Deny(score)) => Outcome::Deny("access_score", Some(score)),
        Err(ArlError::SchemaMismatch { expected, found }) => {
            return Err(CommandError::SchemaDrift(format!("{key}: expected [{expected}], found [{found}]")))
        }
        Err(e) => return Err(e.into()),
    };
    Ok((Some(key), outcome))
}

/// Scores a labeled evaluation trace: per-packet access decisions and
/// per-window flow-statistics verdicts, with confusion counts for both.
pub fn cmd_enforce(cfg: &PipelineConfig) -> Result<EnforceSummary, CommandError> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let graph = load_graph(&cfg)?;
    let eval_path = PipelineConfig::require_file(cfg.eval_trace.as_ref(), "eval trace")?;
    let mapping_path =
        PipelineConfig::require_file(cfg.eval_app_mapping.as_ref().or(cfg.app_mapping.as_ref()), "app mapping")?;
    let resolver = AppResolver::new(cfg.hosts.clone(), read_mapping(&mapping_path)?);
    let records = parse_labeled_trace(BufReader::new(File::open(&eval_path)?))?;

    let mut summary = EnforceSummary::default();
    let mut log = Vec::new();
    writeln!(log, "ts,edge,decision,reason,score,label")?;
    let mut per_edge: BTreeMap<EdgeKey, Vec<(PacketRecord, bool)>> = BTreeMap::new();
    for (rec, label) in &records {
        let (key, outcome) = decide(&graph, &resolver, rec)?;
        summary.packets += 1;
        let abnormal = *label == Some(Label::Abnormal);
        let (decision, reason, score) = match outcome {
            Outcome::Allow(s) => ("allow", "", Some(s)),
            Outcome::Deny(r, s) => ("deny", r, s),
        };
        if decision == "allow" {
            summary.allowed += 1;
        } else {
            summary.denied += 1;
            *summary.deny_reasons.entry(reason.to_string()).or_default() += 1;
        }
        match label {
            Some(_) => summary.access.record(abnormal, decision == "deny"),
            None => summary.unlabeled += 1,
        }
        let edge = key.as_ref().map(|k| k.to_string()).unwrap_or_default();
        let score = score.map(|s| format!("{s:e}")).unwrap_or_default();
        let label = match label {
            Some(Label::Benign) => "benign",
            Some(Label::Abnormal) => "abnormal",
            None => "",
        };
        writeln!(log, "{},\"{edge}\",{decision},{reason},{score},{label}", rec.ts)?;
        if let Some(k) = key {
            if graph.edges.contains_key(&k) {
                per_edge.entry(k).or_default().push((rec.clone(), abnormal));
            }
        }
    }

    let rate = cfg.training.rtfsl.sampling_rate;
    let mut verdicts = Vec::new();
    writeln!(verdicts, "edge,t,packets_distance,bytes_distance,verdict,label")?;
    for (key, items) in &per_edge {
        let Some(model) = graph.edges[key].rtfsl.as_ref().filter(|m| m.state() == RtfslState::Execute) else { continue };
        let mut monitor = RtfslMonitor::new(model.clone())?;
        let packets: Vec<PacketRecord> = items.iter().map(|(p, _)| p.clone()).collect();
        let samples = derive_flow_stats(&packets, rate);
        let mut flagged = false;
        let mut prev: Option<FlowStatSample> = None;
        for s in samples {
            let verdict = monitor.step(s)?;
            let from = prev.map_or(0, |p| p.packets_cum as usize);
            let abnormal = items[from..s.packets_cum as usize].iter().any(|(_, a)| *a);
            summary.windows.record(abnormal, verdict.is_anomalous());
            flagged |= verdict.is_anomalous();
            let r = monitor.history().last().expect("step records");
            let (dp, db) = r.distances.map_or((String::new(), String::new()), |d| (d[0].to_string(), d[1].to_string()));
            let v = match verdict {
                Verdict::Normal => "normal",
                Verdict::Anomalous(..) => "anomalous",
            };
            let label = if abnormal { "abnormal" } else { "benign" };
            writeln!(verdicts, "\"{key}\",{},{dp},{db},{v},{label}", s.t)?;
            prev = Some(s);
        }
        if flagged {
            summary.anomalous_edges.push(key.to_string());
        }
    }

    let out = &cfg.output_dir;
    write_atomic(&out.join(DECISIONS_FILE), &log)?;
    write_atomic(&out.join(VERDICTS_FILE), &verdicts)?;
    write_atomic(&out.join(ENFORCE_SUMMARY), to_json(&summary).as_bytes())?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub scenario: ScenarioSpec,
    #[serde(flatten)]
    pub comparison: Comparison,
}

/// Trains on the scenario's training pass, then runs it under both controllers.
pub fn cmd_simulate(cfg: &PipelineConfig) -> Result<SimulateReport, CommandError> {
    let mut cfg = cfg.clone();
    cfg.validate()?;
    let path = PipelineConfig::require_file(cfg.scenario.as_ref(), "scenario")?;
    let spec = ScenarioSpec::from_json(&std::fs::read_to_string(&path)?)?;
    let run = compare_controllers(&spec, &cfg.training.for_scenario(&spec), &cfg.mining)?;
    let out = &cfg.output_dir;
    let report = SimulateReport { scenario: spec, comparison: run.comparison };
    let timing: BTreeMap<&str, _> = run.timing.iter().map(|(m, t)| (m.as_str(), t)).collect();
    write_atomic(&out.join(METRICS_FILE), to_json(&report).as_bytes())?;
    write_atomic(&out.join(TIMING_FILE), to_json(&timing).as_bytes())?;
    write_atomic_with(&out.join("events_zt.csv"), |b| run.zt.write_events(b))?;
    write_atomic_with(&out.join("events_fwd.csv"), |b| run.fwd.write_events(b))?;
    Ok(report)
}

/// Collects the reports present in the output directory into one document.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<serde_json::Value, CommandError> {
    let out = &cfg.output_dir;
    let mut doc = serde_json::Map::new();
    for (name, file) in [("train", TRAIN_REPORT), ("enforce", ENFORCE_SUMMARY), ("simulate", METRICS_FILE)] {
        let path = out.join(file);
        if path.is_file() {
            let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
            doc.insert(name.into(), value);
        }
    }
    let rules = out.join(RULES_FILE);
    if rules.is_file() {
        let book = RuleBook::from_json(&std::fs::read_to_string(&rules)?)?;
        let per_app: BTreeMap<String, usize> =
            book.applications.iter().map(|a| (a.app.to_string(), a.rules.len())).collect();
        doc.insert(
            "mine".into(),
            serde_json::json!({ "rules": book.rules.len(), "rules_per_application": per_app }),
        );
    }
    if doc.is_empty() {
        return Err(CommandError::Config(format!("no reports found in {}", out.display())));
    }
    let value = serde_json::Value::Object(doc);
    write_atomic(&out.join(REPORT_FILE), to_json(&value).as_bytes())?;
    Ok(value)
}
