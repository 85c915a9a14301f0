use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::autoencoder::Autoencoder;
use super::feature_map::FeatureMap;
use super::ArlError;
use crate::trace::{FeatureVector, Scaler};

const MODEL_VERSION: u32 = 1;

/// How long the detector scores unseen samples before deciding whether to
/// enter execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationWindow {
    Samples(u64),
    Duration(f64),
}

/// Training-stop heuristics and model hyperparameters for one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArlTrainingConfig {
    pub map_samples: usize,
    pub max_cluster_size: usize,
    pub min_train_samples: u64,
    /// Seconds of traffic the detector must have observed before validating.
    pub min_train_duration: f64,
    pub validation: ValidationWindow,
    pub max_train_rmse: f64,
    pub max_validation_rmse: f64,
    pub enforcement_margin: f64,
    pub hidden_ratio: f64,
    pub learning_rate: f64,
    /// Smoothing factor of the running training RMSE.
    pub rmse_smoothing: f64,
}

impl Default for ArlTrainingConfig {
    fn default() -> Self {
        let min_train_samples = 20_000;
        ArlTrainingConfig {
            map_samples: 200,
            max_cluster_size: 10,
            min_train_samples,
            min_train_duration: 600.0,
            validation: ValidationWindow::Samples(min_train_samples / 10),
            max_train_rmse: 0.009,
            max_validation_rmse: 0.05,
            enforcement_margin: 2.0,
            hidden_ratio: 0.75,
            learning_rate: 0.05,
            rmse_smoothing: 0.01,
        }
    }
}

impl ArlTrainingConfig {
    pub fn validate(&self) -> Result<(), ArlError> {
        let positive = self.map_samples > 1
            && self.max_cluster_size > 0
            && self.min_train_samples > 0
            && self.min_train_duration >= 0.0
            && self.max_train_rmse > 0.0
            && self.max_validation_rmse > 0.0
            && self.enforcement_margin > 0.0
            && self.hidden_ratio > 0.0
            && self.learning_rate > 0.0
            && self.rmse_smoothing > 0.0
            && self.rmse_smoothing <= 1.0
            && match self.validation {
                ValidationWindow::Samples(n) => n > 0,
                ValidationWindow::Duration(d) => d > 0.0,
            };
        if !positive {
            return Err(ArlError::InvalidConfig("all parameters must be positive".into()));
        }
        if self.max_train_rmse > self.max_validation_rmse {
            return Err(ArlError::InvalidConfig("max_train_rmse exceeds max_validation_rmse".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArlState {
    Mapping,
    Training,
    Validating,
    Execute,
}

/// Outcome of one [`ArlDetector::feed`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedReport {
    pub state: ArlState,
    /// Set when this sample caused a state change, as `(from, to)`.
    pub transition: Option<(ArlState, ArlState)>,
    /// Training RMSE of the step, or validation score.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    Allow,
    Deny(f64),
}

impl Decision {
    pub fn is_allow(self) -> bool {
        matches!(self, Decision::Allow)
    }
}

/// Per-cluster autoencoders feeding an output autoencoder over their errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderEnsemble {
    pub clusters: Vec<Autoencoder>,
    pub output: Autoencoder,
}

impl AutoencoderEnsemble {
    fn new(map: &FeatureMap, config: &ArlTrainingConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clusters = map
            .clusters
            .iter()
            .map(|c| Autoencoder::new(c.len(), config.hidden_ratio, config.learning_rate, &mut rng))
            .collect();
        let output = Autoencoder::new(map.clusters.len(), config.hidden_ratio, config.learning_rate, &mut rng);
        AutoencoderEnsemble { clusters, output }
    }

    fn train(&mut self, map: &FeatureMap, x: &[f64]) -> f64 {
        let errors: Vec<f64> =
            self.clusters.iter_mut().enumerate().map(|(c, ae)| ae.train(&map.gather(c, x))).collect();
        self.output.train(&errors)
    }

    fn score(&self, map: &FeatureMap, x: &[f64]) -> f64 {
        let errors: Vec<f64> = self.clusters.iter().enumerate().map(|(c, ae)| ae.score(&map.gather(c, x))).collect();
        self.output.score(&errors)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Progress {
    fed: u64,
    first_ts: Option<f64>,
    train_samples: u64,
    running_rmse: Option<f64>,
    /// Training samples (and start time) since the last failed validation.
    retrain_samples: u64,
    retrain_start: Option<f64>,
    failed_validations: u32,
    validation_count: u64,
    validation_start: Option<f64>,
    validation_max: f64,
    training_stop: Option<u64>,
}

/// Access-request detector for one graph edge.
///
/// Lifecycle: buffer `map_samples` vectors to fit the scaler and feature map,
/// train incrementally until the stop heuristics hold, validate on unseen
/// samples without learning, and either execute or resume training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArlDetector {
    version: u32,
    config: ArlTrainingConfig,
    seed: u64,
    state: ArlState,
    schema: Vec<String>,
    buffer: Vec<Vec<f64>>,
    scaler: Option<Scaler>,
    map: Option<FeatureMap>,
    ensemble: Option<AutoencoderEnsemble>,
    decision_threshold: Option<f64>,
    max_validation_score: Option<f64>,
    progress: Progress,
}

impl ArlDetector {
    pub fn new(config: ArlTrainingConfig, seed: u64) -> Result<Self, ArlError> {
        config.validate()?;
        Ok(ArlDetector {
            version: MODEL_VERSION,
            config,
            seed,
            state: ArlState::Mapping,
            schema: Vec::new(),
            buffer: Vec::new(),
            scaler: None,
            map: None,
            ensemble: None,
            decision_threshold: None,
            max_validation_score: None,
            progress: Progress::default(),
        })
    }

    pub fn state(&self) -> ArlState {
        self.state
    }

    pub fn config(&self) -> &ArlTrainingConfig {
        &self.config
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn scaler(&self) -> Option<&Scaler> {
        self.scaler.as_ref()
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        self.map.as_ref()
    }

    pub fn ensemble(&self) -> Option<&AutoencoderEnsemble> {
        self.ensemble.as_ref()
    }

    pub fn decision_threshold(&self) -> Option<f64> {
        self.decision_threshold
    }

    /// Largest score seen in the validation window that admitted execution.
    pub fn max_validation_score(&self) -> Option<f64> {
        self.max_validation_score
    }

    /// Samples consumed when training last stopped, mapping samples included.
    pub fn training_stop(&self) -> Option<u64> {
        self.progress.training_stop
    }

    pub fn samples_fed(&self) -> u64 {
        self.progress.fed
    }

    pub fn failed_validations(&self) -> u32 {
        self.progress.failed_validations
    }

    pub fn running_train_rmse(&self) -> Option<f64> {
        self.progress.running_rmse
    }

    fn check_schema(&self, v: &FeatureVector) -> Result<(), ArlError> {
        if self.schema.len() != v.schema.len() || !self.schema.iter().zip(v.schema.iter()).all(|(a, b)| a == b) {
            return Err(ArlError::SchemaMismatch { expected: self.schema.join(","), found: v.schema.join(",") });
        }
        Ok(())
    }

    fn scaled(&self, v: &FeatureVector) -> Vec<f64> {
        self.scaler.as_ref().map(|s| s.scale_values(&v.values)).unwrap_or_else(|| v.values.clone())
    }

    fn validation_done(&self, ts: f64) -> bool {
        match self.config.validation {
            ValidationWindow::Samples(n) => self.progress.validation_count >= n,
            ValidationWindow::Duration(d) => self.progress.validation_start.is_some_and(|s| ts - s >= d),
        }
    }

    fn retrain_done(&self, ts: f64) -> bool {
        if self.progress.failed_validations == 0 {
            return true;
        }
        match self.config.validation {
            ValidationWindow::Samples(n) => self.progress.retrain_samples >= n,
            ValidationWindow::Duration(d) => self.progress.retrain_start.is_some_and(|s| ts - s >= d),
        }
    }

    /// Consumes one training-stream sample observed at `ts`.
    pub fn feed(&mut self, v: &FeatureVector, ts: f64) -> Result<FeedReport, ArlError> {
        if self.schema.is_empty() && self.progress.fed == 0 {
            self.schema = v.schema.iter().map(|s| s.to_string()).collect();
        }
        self.check_schema(v)?;
        self.progress.fed += 1;
        let first_ts = *self.progress.first_ts.get_or_insert(ts);
        let from = self.state;
        let mut rmse = None;

        match self.state {
            ArlState::Mapping => {
                self.buffer.push(v.values.clone());
                if self.buffer.len() >= self.config.map_samples {
                    let rows: Vec<&[f64]> = self.buffer.iter().map(Vec::as_slice).collect();
                    let mut scaler = Scaler::fit_rows(&rows).map_err(|e| ArlError::InvalidConfig(e.to_string()))?;
                    scaler.schema = self.schema.clone();
                    let scaled: Vec<Vec<f64>> = self.buffer.iter().map(|r| scaler.scale_values(r)).collect();
                    let map = FeatureMap::build(&scaled, self.config.max_cluster_size);
                    debug_assert!(map.is_partition(self.schema.len()));
                    self.ensemble = Some(AutoencoderEnsemble::new(&map, &self.config, self.seed));
                    self.map = Some(map);
                    self.scaler = Some(scaler);
                    self.buffer = Vec::new();
                    self.state = ArlState::Training;
                }
            }
            ArlState::Training => {
                let x = self.scaled(v);
                let map = self.map.as_ref().expect("map built before training");
                let err = self.ensemble.as_mut().expect("ensemble built").train(map, &x);
                rmse = Some(err);
                let p = &mut self.progress;
                p.train_samples += 1;
                p.retrain_samples += 1;
                p.retrain_start.get_or_insert(ts);
                let a = self.config.rmse_smoothing;
                let running = match p.running_rmse {
                    Some(prev) => (1.0 - a) * prev + a * err,
                    None => err,
                };
                p.running_rmse = Some(running);
                if p.train_samples >= self.config.min_train_samples
                    && ts - first_ts >= self.config.min_train_duration
                    && running <= self.config.max_train_rmse
                    && self.retrain_done(ts)
                {
                    let p = &mut self.progress;
                    p.training_stop = Some(p.fed);
                    p.validation_count = 0;
                    p.validation_start = None;
                    p.validation_max = 0.0;
                    self.state = ArlState::Validating;
                }
            }
            ArlState::Validating => {
                let score = self.score_unchecked(v);
                rmse = Some(score);
                let p = &mut self.progress;
                p.validation_count += 1;
                p.validation_start.get_or_insert(ts);
                p.validation_max = p.validation_max.max(score);
                if self.validation_done(ts) {
                    let max = self.progress.validation_max;
                    if max <= self.config.max_validation_rmse {
                        self.max_validation_score = Some(max);
                        self.decision_threshold = Some(self.config.enforcement_margin * max);
                        self.state = ArlState::Execute;
                    } else {
                        let p = &mut self.progress;
                        p.failed_validations += 1;
                        p.retrain_samples = 0;
                        p.retrain_start = None;
                        self.state = ArlState::Training;
                    }
                }
            }
            ArlState::Execute => {
                rmse = Some(self.score_unchecked(v));
            }
        }
        let transition = (from != self.state).then_some((from, self.state));
        Ok(FeedReport { state: self.state, transition, rmse })
    }

    fn score_unchecked(&self, v: &FeatureVector) -> f64 {
        let x = self.scaled(v);
        let map = self.map.as_ref().expect("map built");
        self.ensemble.as_ref().expect("ensemble built").score(map, &x)
    }

    /// Ensemble reconstruction RMSE of `v`; never updates the model.
    pub fn score(&self, v: &FeatureVector) -> Result<f64, ArlError> {
        if !matches!(self.state, ArlState::Validating | ArlState::Execute) {
            return Err(ArlError::InvalidState(self.state));
        }
        self.check_schema(v)?;
        Ok(self.score_unchecked(v))
    }

    pub fn decide(&self, v: &FeatureVector) -> Result<Decision, ArlError> {
        if self.state != ArlState::Execute {
            return Err(ArlError::InvalidState(self.state));
        }
        let score = self.score(v)?;
        let threshold = self.decision_threshold.expect("threshold fixed on entering execute");
        Ok(if score <= threshold { Decision::Allow } else { Decision::Deny(score) })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("detector serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ArlError> {
        let det: ArlDetector = serde_json::from_str(s).map_err(|e| ArlError::Model(e.to_string()))?;
        if det.version != MODEL_VERSION {
            return Err(ArlError::Model(format!("unsupported model version {}", det.version)));
        }
        Ok(det)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[&str] = &["a", "b", "c"];

    fn small_config() -> ArlTrainingConfig {
        ArlTrainingConfig {
            map_samples: 20,
            min_train_samples: 500,
            min_train_duration: 0.0,
            validation: ValidationWindow::Samples(50),
            ..ArlTrainingConfig::default()
        }
    }

    fn fv(v: [f64; 3]) -> FeatureVector {
        FeatureVector::new(v.to_vec(), SCHEMA)
    }

    #[test]
    fn stays_in_mapping_until_map_samples() {
        let mut det = ArlDetector::new(ArlTrainingConfig::default(), 1).unwrap();
        for i in 0..199 {
            det.feed(&fv([1.0, 2.0, 3.0]), i as f64).unwrap();
        }
        assert_eq!(det.state(), ArlState::Mapping);
        let r = det.feed(&fv([1.0, 2.0, 3.0]), 199.0).unwrap();
        assert_eq!(r.transition, Some((ArlState::Mapping, ArlState::Training)));
        assert!(det.score(&fv([1.0, 2.0, 3.0])).is_err());
    }

    #[test]
    fn constant_data_reaches_execute() {
        let mut det = ArlDetector::new(small_config(), 1).unwrap();
        let mut t = 0.0;
        while det.state() != ArlState::Execute && det.samples_fed() < 10_000 {
            det.feed(&fv([4.0, 4.0, 4.0]), t).unwrap();
            t += 0.01;
        }
        assert_eq!(det.state(), ArlState::Execute);
        assert!(det.score(&fv([4.0, 4.0, 4.0])).unwrap() < 0.01);
        assert!(det.decide(&fv([4.0, 4.0, 4.0])).unwrap().is_allow());
        assert!(!det.decide(&fv([4.0, 9.0, 4.0])).unwrap().is_allow());
    }

    #[test]
    fn failed_validation_returns_to_training() {
        let mut det = ArlDetector::new(small_config(), 2).unwrap();
        let mut t = 0.0;
        while det.state() != ArlState::Validating {
            det.feed(&fv([4.0, 4.0, 4.0]), t).unwrap();
            t += 0.01;
        }
        let r = det.feed(&fv([400.0, 4.0, 4.0]), t).unwrap();
        assert_eq!(r.state, ArlState::Validating);
        let mut last = r;
        for _ in 1..50 {
            last = det.feed(&fv([4.0, 4.0, 4.0]), t).unwrap();
        }
        assert_eq!(last.transition, Some((ArlState::Validating, ArlState::Training)));
        assert_eq!(det.failed_validations(), 1);
    }

    #[test]
    fn scoring_leaves_model_untouched_and_round_trips() {
        let mut det = ArlDetector::new(small_config(), 3).unwrap();
        for i in 0..2_000 {
            let x = (i % 5) as f64;
            det.feed(&fv([x, 2.0 * x, 1.0]), i as f64 * 0.1).unwrap();
        }
        let before = det.clone();
        let _ = det.score(&fv([1.0, 2.0, 1.0]));
        assert_eq!(before, det);
        let back = ArlDetector::from_json(&det.to_json()).unwrap();
        assert_eq!(back, det);
    }

    #[test]
    fn schema_is_checked() {
        const OTHER: &[&str] = &["x", "y", "z"];
        let mut det = ArlDetector::new(small_config(), 1).unwrap();
        det.feed(&fv([1.0, 2.0, 3.0]), 0.0).unwrap();
        assert!(matches!(
            det.feed(&FeatureVector::new(vec![1.0, 2.0, 3.0], OTHER), 1.0),
            Err(ArlError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn rejects_inverted_thresholds() {
        let cfg = ArlTrainingConfig { max_train_rmse: 0.1, max_validation_rmse: 0.05, ..Default::default() };
        assert!(ArlDetector::new(cfg, 0).is_err());
    }
}
