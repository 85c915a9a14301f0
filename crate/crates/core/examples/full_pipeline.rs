//! Runs train, mine, enforce and report on files in a scratch directory,
//! the same way the command-line tool does.

use std::fs::File;

use ztsdn::pipeline::{cmd_enforce, cmd_mine, cmd_report, cmd_train, PipelineConfig};
use ztsdn::synth::{flood, labeled, swapped_app, two_app_hosts, two_app_mapping, TwoAppCorpus};
use ztsdn::trace::{write_app_mapping, write_labeled_trace, write_trace};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let train = TwoAppCorpus::contiguous(612.0, 200.0, 1).generate();
    let end = 612.0;
    let held = TwoAppCorpus { window_start: end, ..TwoAppCorpus::contiguous(4.0, 200.0, 2) }.generate();
    let mut bad = swapped_app(end + 1.0, 200, 3);
    bad.extend(flood(end + 2.0, 500, 1000.0));
    let eval = labeled(held, bad);

    write_trace(File::create(dir.path().join("train.csv"))?, &train)?;
    write_labeled_trace(File::create(dir.path().join("eval.csv"))?, eval.iter().map(|(p, l)| (p, *l)))?;
    write_app_mapping(File::create(dir.path().join("apps.csv"))?, &two_app_mapping())?;

    let mut cfg = PipelineConfig {
        traces: vec!["train.csv".into()],
        app_mapping: Some("apps.csv".into()),
        eval_trace: Some("eval.csv".into()),
        hosts: two_app_hosts(),
        ..PipelineConfig::default()
    };
    // Ten minutes of capture: sample flow counters every second so the
    // behaviour model has enough samples to fit and validate.
    cfg.training.rtfsl.sampling_rate = 1.0;
    cfg.training.rtfsl.min_train_duration = 300.0;
    cfg.rebase(dir.path());
    cfg.validate()?;

    let trained = cmd_train(&cfg)?;
    println!("train: {} packets, {} edges, {} failures", trained.packets, trained.report.edges.len(), trained.report.failures.len());
    let rules = cmd_mine(&cfg)?;
    println!("mine: {} rules", rules.rules.len());
    let enforced = cmd_enforce(&cfg)?;
    println!(
        "enforce: {} allowed, {} denied, access tp {} fp {} fn {}",
        enforced.allowed, enforced.denied, enforced.access.tp, enforced.access.fp, enforced.access.fn_
    );
    let report = cmd_report(&cfg)?;
    println!("report sections: {:?}", report.as_object().map(|o| o.keys().collect::<Vec<_>>()));
    Ok(())
}
