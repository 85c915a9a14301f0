use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::train::EdgeTrainingConfig;
use super::CommandError;
use crate::mining::MiningConfig;

/// Experiment bundle read by every command. Relative paths resolve against
/// the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub traces: Vec<PathBuf>,
    pub app_mapping: Option<PathBuf>,
    /// Host id to address bindings used to resolve endpoints.
    pub hosts: BTreeMap<String, Ipv4Addr>,
    pub eval_trace: Option<PathBuf>,
    /// App mapping for the evaluation trace; defaults to `app_mapping`.
    pub eval_app_mapping: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub model_dir: PathBuf,
    pub output_dir: PathBuf,
    pub training: EdgeTrainingConfig,
    pub mining: MiningConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            traces: Vec::new(),
            app_mapping: None,
            hosts: BTreeMap::new(),
            eval_trace: None,
            eval_app_mapping: None,
            scenario: None,
            model_dir: PathBuf::from("model"),
            output_dir: PathBuf::from("out"),
            training: EdgeTrainingConfig::default(),
            mining: MiningConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CommandError> {
        let text = std::fs::read_to_string(path).map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| CommandError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    /// Makes every relative path relative to `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.traces.iter_mut().for_each(fix);
        for p in [&mut self.app_mapping, &mut self.eval_trace, &mut self.eval_app_mapping, &mut self.scenario]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.model_dir);
        fix(&mut self.output_dir);
    }

    /// Checks thresholds and copies the seed into the training settings.
    pub fn validate(&mut self) -> Result<(), CommandError> {
        self.training.seed = self.seed;
        self.training.arl.validate().map_err(|e| CommandError::Config(e.to_string()))?;
        let mut r = self.training.rtfsl.clone();
        r.min_train_samples = r.min_train_samples.max(r.window_size);
        r.validate().map_err(|e| CommandError::Config(e.to_string()))?;
        self.mining.validate().map_err(|e| CommandError::Config(e.to_string()))?;
        Ok(())
    }

    pub(crate) fn require_file(path: Option<&PathBuf>, what: &str) -> Result<PathBuf, CommandError> {
        let p = path.ok_or_else(|| CommandError::Config(format!("no {what} configured")))?;
        if !p.is_file() {
            return Err(CommandError::Config(format!("{what} {} does not exist", p.display())));
        }
        Ok(p.clone())
    }
}
