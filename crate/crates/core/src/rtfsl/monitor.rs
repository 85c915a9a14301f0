use std::collections::VecDeque;
use std::io::Write;

use super::model::{split_segments, Channel, RtfslModel, RtfslState};
use super::RtfslError;
use crate::trace::FlowStatSample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Normal,
    Anomalous(Channel, f64),
}

impl Verdict {
    pub fn is_anomalous(self) -> bool {
        matches!(self, Verdict::Anomalous(..))
    }
}

/// One monitoring step. Distances are absent until two samples are buffered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRecord {
    pub t: f64,
    pub distances: Option<[f64; 2]>,
    pub verdict: Verdict,
}

/// Rolling-window enforcement over a trained model. The model is never modified.
#[derive(Debug, Clone)]
pub struct RtfslMonitor {
    model: RtfslModel,
    buffer: VecDeque<FlowStatSample>,
    history: Vec<VerdictRecord>,
}

impl RtfslMonitor {
    pub fn new(model: RtfslModel) -> Result<Self, RtfslError> {
        if model.state() != RtfslState::Execute {
            return Err(RtfslError::InvalidState(model.state()));
        }
        Ok(RtfslMonitor { model, buffer: VecDeque::new(), history: Vec::new() })
    }

    pub fn model(&self) -> &RtfslModel {
        &self.model
    }

    pub fn history(&self) -> &[VerdictRecord] {
        &self.history
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn step(&mut self, sample: FlowStatSample) -> Result<Verdict, RtfslError> {
        if let Some(last) = self.buffer.back() {
            if split_segments(&[*last, sample]).len() > 1 {
                self.buffer.clear();
            }
        }
        self.buffer.push_back(sample);
        if self.buffer.len() > self.model.config.window_size {
            self.buffer.pop_front();
        }
        let mut record = VerdictRecord { t: sample.t, distances: None, verdict: Verdict::Normal };
        if self.buffer.len() >= 2 {
            let window: Vec<FlowStatSample> = self.buffer.iter().copied().collect();
            let mut distances = [0.0; 2];
            for (i, ch) in Channel::ALL.into_iter().enumerate() {
                distances[i] = self.model.match_window(&window, ch)?.0;
            }
            let threshold = self.model.config.anomaly_threshold;
            let (i, worst) = if distances[1] > distances[0] { (1, distances[1]) } else { (0, distances[0]) };
            if worst > threshold {
                record.verdict = Verdict::Anomalous(Channel::ALL[i], worst);
            }
            record.distances = Some(distances);
        }
        self.history.push(record);
        Ok(record.verdict)
    }

    /// Verdict log as CSV `t,channel,distance,verdict`, one row per channel per step.
    pub fn write_log<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,channel,distance,verdict")?;
        for r in &self.history {
            let Some(d) = r.distances else { continue };
            for (i, ch) in Channel::ALL.into_iter().enumerate() {
                let verdict = if d[i] > self.model.config.anomaly_threshold { "anomalous" } else { "normal" };
                writeln!(out, "{},{},{},{}", r.t, ch.as_str(), d[i], verdict)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtfsl::RtfslConfig;

    fn trained(rate: f64) -> RtfslModel {
        let cfg = RtfslConfig { window_size: 20, min_train_samples: 60, min_train_duration: 0.0, ..RtfslConfig::default() };
        let mut m = RtfslModel::new(cfg).unwrap();
        let mut p = 0u64;
        for i in 0..200 {
            p += rate as u64 + (i % 3) as u64;
            m.train_feed(FlowStatSample { t: i as f64 * 5.0, packets_cum: p, bytes_cum: p * 500 }).unwrap();
        }
        assert_eq!(m.state(), RtfslState::Execute);
        m
    }

    #[test]
    fn first_sample_is_normal_without_distance() {
        let mut mon = RtfslMonitor::new(trained(50.0)).unwrap();
        let v = mon.step(FlowStatSample { t: 0.0, packets_cum: 0, bytes_cum: 0 }).unwrap();
        assert_eq!(v, Verdict::Normal);
        assert!(mon.history()[0].distances.is_none());
    }

    #[test]
    fn flood_is_flagged_and_model_untouched() {
        let model = trained(50.0);
        let mut mon = RtfslMonitor::new(model.clone()).unwrap();
        let mut p = 0u64;
        let mut flagged = None;
        for i in 0..60 {
            p += if i < 30 { 50 + (i % 3) as u64 } else { 500 };
            let v = mon.step(FlowStatSample { t: i as f64 * 5.0, packets_cum: p, bytes_cum: p * 500 }).unwrap();
            if i < 30 {
                assert_eq!(v, Verdict::Normal, "sample {i}");
            } else if v.is_anomalous() && flagged.is_none() {
                flagged = Some(i - 30);
            }
        }
        assert!(flagged.unwrap() < 20);
        assert_eq!(mon.model(), &model);
        let mut log = Vec::new();
        mon.write_log(&mut log).unwrap();
        assert!(String::from_utf8(log).unwrap().starts_with("t,channel,distance,verdict\n"));
    }

    #[test]
    fn reset_clears_buffer() {
        let mut mon = RtfslMonitor::new(trained(50.0)).unwrap();
        for i in 0..5 {
            mon.step(FlowStatSample { t: i as f64, packets_cum: 50 * i, bytes_cum: 25_000 * i }).unwrap();
        }
        mon.step(FlowStatSample { t: 6.0, packets_cum: 3, bytes_cum: 1500 }).unwrap();
        assert_eq!(mon.buffered(), 1);
    }

    #[test]
    fn untrained_model_rejected() {
        assert!(RtfslMonitor::new(RtfslModel::new(RtfslConfig::default()).unwrap()).is_err());
    }
}
