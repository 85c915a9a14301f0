use serde::{Deserialize, Serialize};

use super::topology::{HostSpec, SwitchId, Topology};
use super::workload::WorkloadItem;
use super::SimError;

pub const IPERF_TRAINING_SECONDS: f64 = 300.0;
/// Short sessions put enough handshakes into the training data for the
/// access model to learn them.
pub const IPERF_TRAINING_SESSIONS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Zt,
    Fwd,
    Train,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Zt => "zt",
            Mode::Fwd => "fwd",
            Mode::Train => "train",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimParams {
    pub seed: u64,
    /// Seconds between a PACKET_IN leaving a switch and the controller's answer taking effect.
    pub controller_latency: f64,
    pub hop_latency: f64,
    pub idle_timeout: f64,
    pub hard_timeout: f64,
    /// Flow-statistics query interval.
    pub stats_interval: f64,
    pub mirror_port: u32,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            seed: 1,
            controller_latency: 0.002,
            hop_latency: 0.0005,
            idle_timeout: 10.0,
            hard_timeout: 0.0,
            stats_interval: 1.0,
            mirror_port: 999,
        }
    }
}

/// Changes applied to the workload of the training pass that precedes a
/// zero-trust run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingOverrides {
    pub start: Option<f64>,
    pub duration: Option<f64>,
    pub sessions: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub switches: Vec<SwitchId>,
    pub links: Vec<[u32; 4]>,
    pub hosts: Vec<HostSpec>,
    #[serde(default)]
    pub workload: Vec<WorkloadItem>,
    pub mode: Mode,
    #[serde(default)]
    pub params: SimParams,
    #[serde(default)]
    pub training: TrainingOverrides,
}

impl ScenarioSpec {
    pub fn topology(&self) -> Topology {
        Topology { switches: self.switches.clone(), links: self.links.clone(), hosts: self.hosts.clone() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.topology().validate()?;
        let p = &self.params;
        if !(p.controller_latency >= 0.0 && p.hop_latency >= 0.0 && p.stats_interval > 0.0) {
            return Err(SimError::Spec("latencies must be non-negative and stats_interval positive".into()));
        }
        if !(p.idle_timeout >= 0.0 && p.hard_timeout >= 0.0) {
            return Err(SimError::Spec("timeouts must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        ScenarioSpec { mode, ..self.clone() }
    }

    /// The training pass: train mode with the overrides applied.
    pub fn training_pass(&self) -> Self {
        let mut spec = self.with_mode(Mode::Train);
        for item in &mut spec.workload {
            if let Some(s) = self.training.start {
                item.start = s;
            }
            if let Some(d) = self.training.duration {
                item.duration = d;
            }
            if let Some(s) = self.training.sessions {
                item.sessions = s;
            }
        }
        spec
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let spec: ScenarioSpec = serde_json::from_str(s).map_err(|e| SimError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Switches `1..=switches` in a line; host `h1` serves on switch 1 and
    /// every other host attaches to its own switch (cycling), running
    /// `channels` parallel TCP connections to `h1`.
    ///
    /// The measured traffic starts at [`IPERF_TRAINING_SECONDS`], right after
    /// a training pass of many short sessions.
    pub fn iperf_line(switches: u32, hosts: u32, channels: u32, duration: f64) -> Self {
        let mut topo = Topology::line(switches);
        topo.attach("h1", 1);
        for h in 2..=hosts {
            let sw = if hosts == 2 { switches } else { 2 + (h - 2) % switches.saturating_sub(1).max(1) };
            topo.attach(&format!("h{h}"), sw.min(switches));
        }
        let workload = (2..=hosts)
            .map(|h| {
                let mut w =
                    WorkloadItem::new(&format!("h{h}"), "h1", crate::trace::Proto::Tcp, 100.0, IPERF_TRAINING_SECONDS, duration);
                w.channels = channels;
                w.src_app = Some("iperf-client".into());
                w.dst_app = Some("iperf-server".into());
                w.reply_ratio = Some(0.5);
                w
            })
            .collect();
        ScenarioSpec {
            switches: topo.switches,
            links: topo.links,
            hosts: topo.hosts,
            workload,
            mode: Mode::Zt,
            params: SimParams::default(),
            training: TrainingOverrides {
                start: Some(0.0),
                duration: Some(IPERF_TRAINING_SECONDS),
                sessions: Some(IPERF_TRAINING_SESSIONS),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_defaults() {
        let json = r#"{
            "switches": [1, 2],
            "links": [[1, 2, 2, 1]],
            "hosts": [{"id": "h1", "switch": 1, "port": 10, "addr": "10.0.0.1"},
                      {"id": "h2", "switch": 2, "port": 10, "addr": "10.0.0.2"}],
            "workload": [{"src": "h2", "dst": "h1", "channels": 2, "proto": "TCP",
                          "rate_pps": 10, "start": 0, "duration": 5}],
            "mode": "fwd"
        }"#;
        let spec = ScenarioSpec::from_json(json).unwrap();
        assert_eq!(spec.mode, Mode::Fwd);
        assert_eq!(spec.params, SimParams::default());
        assert_eq!(spec.workload[0].sessions, 1);
        assert_eq!(ScenarioSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn iperf_line_layouts() {
        let two = ScenarioSpec::iperf_line(4, 2, 2, 10.0);
        two.validate().unwrap();
        assert_eq!(two.hosts[1].switch, 4);
        let four = ScenarioSpec::iperf_line(4, 4, 2, 10.0);
        four.validate().unwrap();
        let switches: Vec<u32> = four.hosts.iter().map(|h| h.switch).collect();
        assert_eq!(switches, vec![1, 2, 3, 4]);
        assert_eq!(four.workload.len(), 3);
    }

    #[test]
    fn training_pass_overrides() {
        let mut spec = ScenarioSpec::iperf_line(2, 2, 1, 10.0);
        spec.training = TrainingOverrides { start: None, duration: Some(100.0), sessions: Some(20) };
        let t = spec.training_pass();
        assert_eq!(t.mode, Mode::Train);
        assert_eq!((t.workload[0].duration, t.workload[0].sessions), (100.0, 20));
    }
}
