#![allow(dead_code)]

use std::fs::File;
use std::path::{Path, PathBuf};

use tempfile::TempDir;
use ztsdn::pipeline::PipelineConfig;
use ztsdn::synth::{flood, labeled, swapped_app, two_app_hosts, two_app_mapping, TwoAppCorpus};
use ztsdn::trace::{write_app_mapping, write_labeled_trace, write_trace};

pub const TRAIN_SECONDS: f64 = 60.0;

/// Scratch directory with a two-application training trace, a labeled
/// evaluation trace, the app mapping and a matching config file.
pub struct Fixture {
    pub dir: TempDir,
    pub config: PipelineConfig,
}

impl Fixture {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().expect("temp dir");
        let p = dir.path();
        let train = TwoAppCorpus::contiguous(TRAIN_SECONDS, 50.0, 1).generate();
        let held = TwoAppCorpus { window_start: TRAIN_SECONDS, ..TwoAppCorpus::contiguous(5.0, 50.0, 2) }.generate();
        let mut bad = swapped_app(TRAIN_SECONDS + 1.0, 50, 3);
        bad.extend(flood(TRAIN_SECONDS + 2.0, 100, 500.0));
        let eval = labeled(held, bad);
        write_trace(File::create(p.join("train.csv")).unwrap(), &train).unwrap();
        write_labeled_trace(File::create(p.join("eval.csv")).unwrap(), eval.iter().map(|(r, l)| (r, *l))).unwrap();
        write_app_mapping(File::create(p.join("apps.csv")).unwrap(), &two_app_mapping()).unwrap();

        let mut config = PipelineConfig {
            traces: vec!["train.csv".into()],
            app_mapping: Some("apps.csv".into()),
            eval_trace: Some("eval.csv".into()),
            hosts: two_app_hosts(),
            ..PipelineConfig::default()
        };
        config.training.arl.min_train_samples = 1_000;
        config.training.arl.min_train_duration = 20.0;
        config.training.rtfsl.sampling_rate = 1.0;
        config.training.rtfsl.min_train_duration = 20.0;
        std::fs::write(p.join("config.json"), serde_json::to_string_pretty(&config).unwrap()).unwrap();
        config.rebase(p);
        Fixture { dir, config }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn config_file(&self) -> PathBuf {
        self.path().join("config.json")
    }

    /// The same config writing models and reports under `name`.
    pub fn variant(&self, name: &str) -> PipelineConfig {
        PipelineConfig {
            model_dir: self.path().join(name).join("model"),
            output_dir: self.path().join(name).join("out"),
            ..self.config.clone()
        }
    }
}

/// Relative path to contents of every file below `dir`, sorted by path.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
