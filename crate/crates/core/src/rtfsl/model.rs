use serde::{Deserialize, Serialize};

use super::dtw::dtw_distance_below;
use super::RtfslError;
use crate::trace::{FlowStatSample, ProtocolStack, Proto, Scaler};

const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Packets,
    Bytes,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::Packets, Channel::Bytes];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Packets => "packets",
            Channel::Bytes => "bytes",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    pub fn value(self, s: &FlowStatSample) -> f64 {
        match self {
            Channel::Packets => s.packets_cum as f64,
            Channel::Bytes => s.bytes_cum as f64,
        }
    }
}

/// First differences of one channel, in sample order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSeries {
    pub values: Vec<f64>,
    pub channel: Channel,
    pub sampling_rate: f64,
}

/// `out[i] = x[i + 1] - x[i]`.
pub fn first_order_diff(x: &[f64]) -> Result<Vec<f64>, RtfslError> {
    if x.len() < 2 {
        return Err(RtfslError::SeriesTooShort(x.len()));
    }
    Ok(x.windows(2).map(|w| w[1] - w[0]).collect())
}

impl DiffSeries {
    pub fn from_cumulative(x: &[f64], channel: Channel, sampling_rate: f64) -> Result<Self, RtfslError> {
        Ok(DiffSeries { values: first_order_diff(x)?, channel, sampling_rate })
    }
}

/// Slides `observation` (already differenced) over every equal-length segment
/// of `library` and returns the smallest DTW distance with its segment start.
/// Ties keep the earliest segment.
pub fn match_diffs(library: &[f64], observation: &[f64], radius: usize) -> Result<(f64, usize), RtfslError> {
    let m = observation.len();
    if m == 0 {
        return Err(RtfslError::EmptySeries);
    }
    if library.len() < m {
        return Err(RtfslError::LibraryTooShort { library: library.len(), observation: m });
    }
    let (obs_lo, obs_hi) = range(observation);
    let mut best = (f64::INFINITY, 0);
    for start in 0..=library.len() - m {
        let segment = &library[start..start + m];
        if lower_bound(segment, observation, obs_lo, obs_hi) >= best.0 {
            continue;
        }
        let d = dtw_distance_below(segment, observation, radius, best.0)?;
        if d < best.0 {
            best = (d, start);
            if d == 0.0 {
                break;
            }
        }
    }
    Ok(best)
}

fn range(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

fn gap(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo - v
    } else if v > hi {
        v - hi
    } else {
        0.0
    }
}

// Every element of either series lies on the warp path at least once, paired
// with some element of the other series, so its distance to the other's range
// bounds its contribution from below. The first and last pairs are always on it.
fn lower_bound(segment: &[f64], observation: &[f64], obs_lo: f64, obs_hi: f64) -> f64 {
    let n = segment.len();
    let ends = (segment[0] - observation[0]).abs()
        + if n > 1 { (segment[n - 1] - observation[n - 1]).abs() } else { 0.0 };
    let by_segment: f64 = segment.iter().map(|v| gap(*v, obs_lo, obs_hi)).sum();
    let (seg_lo, seg_hi) = range(segment);
    let by_observation: f64 = observation.iter().map(|v| gap(*v, seg_lo, seg_hi)).sum();
    by_segment.max(by_observation).max(ends)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RtfslConfig {
    /// Seconds between flow-statistics samples.
    pub sampling_rate: f64,
    pub min_train_samples: usize,
    pub min_train_duration: f64,
    /// Seconds of validation data; `None` means one window of samples.
    pub validation_duration: Option<f64>,
    pub train_add_threshold: f64,
    pub anomaly_threshold: f64,
    pub window_size: usize,
    pub radius: usize,
}

impl Default for RtfslConfig {
    fn default() -> Self {
        RtfslConfig {
            sampling_rate: 5.0,
            min_train_samples: 150,
            min_train_duration: 600.0,
            validation_duration: None,
            train_add_threshold: 0.8,
            anomaly_threshold: 0.8,
            window_size: 90,
            radius: 1,
        }
    }
}

impl RtfslConfig {
    pub fn window_for(stack: &ProtocolStack) -> usize {
        if stack.proto() == Proto::Tcp {
            90
        } else {
            70
        }
    }

    pub fn for_stack(stack: &ProtocolStack) -> Self {
        RtfslConfig { window_size: Self::window_for(stack), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), RtfslError> {
        let ok = self.sampling_rate > 0.0
            && self.min_train_samples > 0
            && self.min_train_duration >= 0.0
            && self.validation_duration.is_none_or(|d| d > 0.0)
            && self.train_add_threshold > 0.0
            && self.anomaly_threshold > 0.0
            && self.window_size >= 2;
        if !ok {
            return Err(RtfslError::InvalidConfig("all parameters must be positive and window_size >= 2".into()));
        }
        if self.min_train_samples < self.window_size {
            return Err(RtfslError::InvalidConfig("min_train_samples must cover one window".into()));
        }
        Ok(())
    }

    pub fn validation_samples(&self) -> usize {
        match self.validation_duration {
            Some(d) => ((d / self.sampling_rate).round() as usize).max(2),
            None => self.window_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RtfslState {
    Collecting,
    Validating,
    Training,
    Execute,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    pub state: RtfslState,
    pub transition: Option<(RtfslState, RtfslState)>,
    /// Largest channel distance of a chunk evaluated by this sample.
    pub distance: Option<f64>,
    pub library_len: usize,
}

/// Learned transmission behavior of one edge: per-channel scaler and library
/// of scaled first differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtfslModel {
    version: u32,
    pub config: RtfslConfig,
    state: RtfslState,
    scalers: Option<[Scaler; 2]>,
    libraries: [Vec<f64>; 2],
    /// Raw samples of the current collection, validation or training chunk.
    pending: Vec<FlowStatSample>,
    first_t: Option<f64>,
    samples_seen: u64,
    failed_validations: u32,
}

/// Splits at counter resets; each segment is a separate flow lifetime.
pub fn split_segments(samples: &[FlowStatSample]) -> Vec<&[FlowStatSample]> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..samples.len() {
        let (a, b) = (&samples[i - 1], &samples[i]);
        if b.packets_cum < a.packets_cum || b.bytes_cum < a.bytes_cum {
            out.push(&samples[start..i]);
            start = i;
        }
    }
    if start < samples.len() {
        out.push(&samples[start..]);
    }
    out
}

impl RtfslModel {
    pub fn new(config: RtfslConfig) -> Result<Self, RtfslError> {
        config.validate()?;
        Ok(RtfslModel {
            version: MODEL_VERSION,
            config,
            state: RtfslState::Collecting,
            scalers: None,
            libraries: [Vec::new(), Vec::new()],
            pending: Vec::new(),
            first_t: None,
            samples_seen: 0,
            failed_validations: 0,
        })
    }

    pub fn state(&self) -> RtfslState {
        self.state
    }

    pub fn library(&self, channel: Channel) -> &[f64] {
        &self.libraries[channel.index()]
    }

    pub fn scaler(&self, channel: Channel) -> Option<&Scaler> {
        self.scalers.as_ref().map(|s| &s[channel.index()])
    }

    pub fn failed_validations(&self) -> u32 {
        self.failed_validations
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    /// Scaled first differences of one flow segment.
    pub fn scaled_diffs(&self, segment: &[FlowStatSample], channel: Channel) -> Result<Vec<f64>, RtfslError> {
        let scaler = self.scaler(channel).ok_or(RtfslError::InvalidState(self.state))?;
        let scaled: Vec<f64> = segment.iter().map(|s| scaler.scale_value(0, channel.value(s))).collect();
        first_order_diff(&scaled)
    }

    /// Best library match for a window of raw samples on one channel.
    pub fn match_window(&self, window: &[FlowStatSample], channel: Channel) -> Result<(f64, usize), RtfslError> {
        let diffs = self.scaled_diffs(window, channel)?;
        match_diffs(self.library(channel), &diffs, self.config.radius)
    }

    /// Per-channel distances of `samples`, evaluated in chunks of at most one window.
    fn chunk_distances(&self, samples: &[FlowStatSample]) -> Result<[f64; 2], RtfslError> {
        let mut worst = [0.0f64; 2];
        for segment in split_segments(samples) {
            for chunk in segment.chunks(self.config.window_size) {
                if chunk.len() < 2 {
                    continue;
                }
                for ch in Channel::ALL {
                    let (d, _) = self.match_window(chunk, ch)?;
                    worst[ch.index()] = worst[ch.index()].max(d);
                }
            }
        }
        Ok(worst)
    }

    fn absorb(&mut self, samples: &[FlowStatSample], only: [bool; 2]) -> Result<(), RtfslError> {
        for segment in split_segments(samples) {
            if segment.len() < 2 {
                continue;
            }
            for ch in Channel::ALL {
                if only[ch.index()] {
                    let diffs = self.scaled_diffs(segment, ch)?;
                    self.libraries[ch.index()].extend(diffs);
                }
            }
        }
        Ok(())
    }

    fn fit(&mut self) -> Result<bool, RtfslError> {
        let scalers = Channel::ALL.map(|ch| {
            let series: Vec<f64> = self.pending.iter().map(|s| ch.value(s)).collect();
            Scaler::fit_series(&series)
        });
        let [p, b] = scalers;
        let p = p.map_err(|e| RtfslError::Model(e.to_string()))?;
        let b = b.map_err(|e| RtfslError::Model(e.to_string()))?;
        self.scalers = Some([p, b]);
        let pending = std::mem::take(&mut self.pending);
        self.absorb(&pending, [true, true])?;
        let need = self.config.window_size - 1;
        Ok(self.libraries.iter().all(|l| l.len() >= need))
    }

    /// Consumes one training sample.
    pub fn train_feed(&mut self, sample: FlowStatSample) -> Result<TrainReport, RtfslError> {
        let from = self.state;
        self.samples_seen += 1;
        let first_t = *self.first_t.get_or_insert(sample.t);
        let mut distance = None;
        match self.state {
            RtfslState::Collecting => {
                self.pending.push(sample);
                if self.pending.len() >= self.config.min_train_samples
                    && sample.t - first_t >= self.config.min_train_duration
                {
                    if self.fit()? {
                        self.state = RtfslState::Validating;
                    } else {
                        // Too many resets left the library short; keep collecting from scratch.
                        self.scalers = None;
                        self.libraries = [Vec::new(), Vec::new()];
                    }
                }
            }
            RtfslState::Validating => {
                self.pending.push(sample);
                if self.pending.len() >= self.config.validation_samples() {
                    let worst = self.chunk_distances(&self.pending)?;
                    let max = worst[0].max(worst[1]);
                    distance = Some(max);
                    let pending = std::mem::take(&mut self.pending);
                    if max <= self.config.anomaly_threshold {
                        self.state = RtfslState::Execute;
                    } else {
                        self.failed_validations += 1;
                        let add = worst.map(|d| d > self.config.train_add_threshold);
                        self.absorb(&pending, add)?;
                        self.state = RtfslState::Training;
                    }
                }
            }
            RtfslState::Training => {
                self.pending.push(sample);
                if self.pending.len() >= self.config.window_size {
                    let worst = self.chunk_distances(&self.pending)?;
                    distance = Some(worst[0].max(worst[1]));
                    let pending = std::mem::take(&mut self.pending);
                    let add = worst.map(|d| d > self.config.train_add_threshold);
                    self.absorb(&pending, add)?;
                    self.state = RtfslState::Validating;
                }
            }
            RtfslState::Execute => {}
        }
        let transition = (from != self.state).then_some((from, self.state));
        Ok(TrainReport { state: self.state, transition, distance, library_len: self.libraries[0].len() })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, RtfslError> {
        let m: RtfslModel = serde_json::from_str(s).map_err(|e| RtfslError::Model(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(RtfslError::Model(format!("unsupported model version {}", m.version)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(n: usize, rate: f64, f: f64) -> Vec<FlowStatSample> {
        (0..n)
            .map(|i| {
                let p = (i as f64 * rate * f).round() as u64;
                FlowStatSample { t: i as f64 * f, packets_cum: p, bytes_cum: p * 1000 }
            })
            .collect()
    }

    fn config() -> RtfslConfig {
        RtfslConfig { window_size: 20, min_train_samples: 40, min_train_duration: 0.0, ..RtfslConfig::default() }
    }

    #[test]
    fn diff_examples() {
        assert_eq!(first_order_diff(&[1.0, 3.0, 6.0, 10.0]).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(first_order_diff(&[4.0, 4.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert!(first_order_diff(&[1.0]).is_err());
    }

    #[test]
    fn zero_library_closed_form() {
        let lib = vec![0.0; 30];
        let (d, idx) = match_diffs(&lib, &[0.5; 9], 1).unwrap();
        assert!((d - 4.5).abs() < 1e-12);
        assert_eq!(idx, 0);
        assert!(match_diffs(&lib[..3], &[0.5; 9], 1).is_err());
    }

    #[test]
    fn stable_pattern_reaches_execute() {
        let mut m = RtfslModel::new(config()).unwrap();
        for s in stream(200, 10.0, 5.0) {
            m.train_feed(s).unwrap();
        }
        assert_eq!(m.state(), RtfslState::Execute);
        assert_eq!(m.failed_validations(), 0);
    }

    #[test]
    fn repeated_window_does_not_grow_library() {
        let mut m = RtfslModel::new(config()).unwrap();
        let data = stream(400, 10.0, 5.0);
        for s in &data[..40] {
            m.train_feed(*s).unwrap();
        }
        let len = m.library(Channel::Packets).len();
        for s in &data[40..60] {
            m.train_feed(*s).unwrap();
        }
        assert_eq!(m.library(Channel::Packets).len(), len);
    }

    #[test]
    fn exact_subseries_matches_at_zero() {
        let mut m = RtfslModel::new(config()).unwrap();
        let data = stream(60, 7.0, 5.0);
        for s in &data {
            m.train_feed(*s).unwrap();
        }
        let (d, _) = m.match_window(&data[5..25], Channel::Packets).unwrap();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn segments_split_on_reset() {
        let mut s = stream(10, 1.0, 1.0);
        s[5].packets_cum = 0;
        let parts = split_segments(&s);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].len(), 5);
    }

    #[test]
    fn config_checks() {
        assert!(RtfslModel::new(RtfslConfig { window_size: 1, ..RtfslConfig::default() }).is_err());
        assert!(RtfslModel::new(RtfslConfig { min_train_samples: 10, ..RtfslConfig::default() }).is_err());
        assert_eq!(RtfslConfig::window_for(&ProtocolStack::ethernet_ip(crate::trace::Layer::Udp)), 70);
    }
}
