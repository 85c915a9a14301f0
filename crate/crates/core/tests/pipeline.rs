mod common;

use common::{tree, Fixture};
use ztsdn::graph::CrGraph;
use ztsdn::pipeline::{
    cmd_enforce, cmd_mine, cmd_report, cmd_simulate, cmd_train, CommandError, PipelineConfig, DECISIONS_FILE,
    METRICS_FILE, REPORT_FILE, RULES_FILE, TIMING_FILE, TRAIN_REPORT, VERDICTS_FILE,
};
use ztsdn::sim::ScenarioSpec;

#[test]
fn train_saves_four_edges_with_both_models() {
    let fx = Fixture::new();
    let summary = cmd_train(&fx.config).unwrap();
    assert_eq!(summary.report.edges.len(), 4);
    assert_eq!(summary.nodes, 4);
    assert_eq!(summary.skipped_unsupported, 0);

    let files = tree(&fx.config.model_dir);
    let count = |suffix: &str| files.iter().filter(|(p, _)| p.to_string_lossy().ends_with(suffix)).count();
    assert_eq!((count("arl.json"), count("rtfsl.json"), count("packets.csv")), (4, 4, 4));
    assert!(fx.config.output_dir.join(TRAIN_REPORT).is_file());

    let graph = CrGraph::load(&fx.config.model_dir).unwrap();
    assert_eq!(graph.total_packets(), summary.packets);
    assert!(graph.edges.values().all(|e| e.arl.is_some() && e.rtfsl.is_some()));
}

#[test]
fn header_only_trace_has_no_supported_packets() {
    let fx = Fixture::new();
    let empty = fx.path().join("empty.csv");
    let header = std::fs::read_to_string(fx.path().join("train.csv")).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&empty, header + "\n").unwrap();
    let cfg = PipelineConfig { traces: vec![empty], ..fx.config.clone() };
    let err = cmd_train(&cfg).unwrap_err();
    assert!(matches!(err, CommandError::NoSupportedPackets), "{err}");
    assert_eq!(err.to_string(), "no supported packets");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn training_is_byte_identical_across_runs() {
    let fx = Fixture::new();
    let (a, b) = (fx.variant("a"), fx.variant("b"));
    cmd_train(&a).unwrap();
    cmd_train(&b).unwrap();
    let (ta, tb) = (tree(&a.model_dir), tree(&b.model_dir));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    assert_eq!(tree(&a.output_dir), tree(&b.output_dir));

    let c = PipelineConfig { seed: 2, ..fx.variant("c") };
    cmd_train(&c).unwrap();
    assert_ne!(tree(&c.model_dir), ta);
}

#[test]
fn mining_reruns_are_identical() {
    let fx = Fixture::new();
    cmd_train(&fx.config).unwrap();
    let first = cmd_mine(&fx.config).unwrap();
    let bytes = std::fs::read(fx.config.output_dir.join(RULES_FILE)).unwrap();
    let second = cmd_mine(&fx.config).unwrap();
    assert_eq!(first, second);
    assert_eq!(bytes, std::fs::read(fx.config.output_dir.join(RULES_FILE)).unwrap());
    assert_eq!(first.edges.len(), 4);
    assert!(first.edges.iter().all(|e| e.rules.len() == 1));
}

#[test]
fn mine_without_models_fails() {
    let fx = Fixture::new();
    let err = cmd_mine(&fx.config).unwrap_err();
    assert!(matches!(err, CommandError::MissingModels(_)), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn enforce_accounts_for_every_packet() {
    let fx = Fixture::new();
    cmd_train(&fx.config).unwrap();
    let s = cmd_enforce(&fx.config).unwrap();
    assert!(s.packets > 0);
    assert_eq!(s.allowed + s.denied, s.packets);
    assert_eq!(s.access.total() + s.unlabeled, s.packets);
    assert_eq!(s.unlabeled, 0);
    assert_eq!(s.deny_reasons.values().sum::<u64>(), s.denied);

    let decisions = std::fs::read_to_string(fx.config.output_dir.join(DECISIONS_FILE)).unwrap();
    assert_eq!(decisions.lines().count() as u64, s.packets + 1);
    assert!(decisions.starts_with("ts,edge,decision,reason,score,label\n"));
    let verdicts = std::fs::read_to_string(fx.config.output_dir.join(VERDICTS_FILE)).unwrap();
    assert_eq!(verdicts.lines().count() as u64, s.windows.total() + 1);
}

#[test]
fn report_merges_what_exists() {
    let fx = Fixture::new();
    assert!(matches!(cmd_report(&fx.config), Err(CommandError::Config(_))));
    cmd_train(&fx.config).unwrap();
    cmd_mine(&fx.config).unwrap();
    let doc = cmd_report(&fx.config).unwrap();
    assert!(doc.get("train").is_some());
    assert_eq!(doc["mine"]["rules"], 4);
    assert!(doc.get("enforce").is_none());
    assert!(fx.config.output_dir.join(REPORT_FILE).is_file());
}

#[test]
fn simulate_writes_metrics_and_events() {
    let fx = Fixture::new();
    let mut spec = ScenarioSpec::iperf_line(2, 2, 1, 3.0);
    spec.training.sessions = Some(200);
    let path = fx.path().join("scenario.json");
    std::fs::write(&path, spec.to_json()).unwrap();
    let cfg = PipelineConfig { scenario: Some(path), ..fx.config.clone() };
    let report = cmd_simulate(&cfg).unwrap();
    let c = &report.comparison;
    assert!(c.zt.conserved() && c.fwd.conserved());
    assert_eq!(c.fwd.delivered, c.fwd.injected);
    for f in [METRICS_FILE, TIMING_FILE, "events_zt.csv", "events_fwd.csv"] {
        assert!(cfg.output_dir.join(f).is_file(), "{f}");
    }
}
