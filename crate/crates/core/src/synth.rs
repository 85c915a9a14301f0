//! Seeded synthetic corpora: a two-application UDP trace with attack
//! variants, flow-statistics streams, and an iperf-style TCP trace.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::{expand, ScenarioSpec, SimError};
use crate::trace::{AppMappingEntry, FlowStatSample, Label, PacketRecord, Proto};

pub const CLIENT_HOST: &str = "h1";
pub const SERVER_HOST: &str = "h2";
pub const CLIENT_ADDR: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 1);
pub const SERVER_ADDR: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 2);

/// Header profile of one synthetic UDP application.
#[derive(Debug, Clone, PartialEq)]
pub struct AppProfile {
    pub name: &'static str,
    pub server_name: &'static str,
    pub client_port: u16,
    pub server_port: u16,
    pub ttl: u8,
    /// IP lengths, drawn uniformly.
    pub lengths: &'static [u32],
    pub dscp: u8,
}

impl AppProfile {
    pub fn alpha() -> Self {
        AppProfile {
            name: "alpha",
            server_name: "alpha-sink",
            client_port: 4000,
            server_port: 7000,
            ttl: 64,
            lengths: &[120, 180, 240],
            dscp: 0,
        }
    }

    pub fn beta() -> Self {
        AppProfile {
            name: "beta",
            server_name: "beta-sink",
            client_port: 5000,
            server_port: 9000,
            ttl: 128,
            lengths: &[860, 1020, 1180],
            dscp: 10,
        }
    }

    fn packet(&self, rng: &mut ChaCha8Rng, ts: f64, to_server: bool) -> PacketRecord {
        let client = (CLIENT_ADDR, self.client_port);
        let server = (SERVER_ADDR, self.server_port);
        let (src, dst) = if to_server { (client, server) } else { (server, client) };
        let mut p = PacketRecord::transport(ts, Proto::Udp, src, dst, self.lengths[rng.gen_range(0..self.lengths.len())]);
        p.ttl = self.ttl;
        p.dscp = self.dscp;
        p
    }

    pub fn mapping(&self) -> [AppMappingEntry; 2] {
        let entry = |host: &str, app: &str, port| AppMappingEntry {
            ts: 0.0,
            host_id: host.into(),
            app_name: app.into(),
            proto: Proto::Udp,
            local_port: Some(port),
            remote_ip: None,
            remote_port: None,
        };
        [entry(CLIENT_HOST, self.name, self.client_port), entry(SERVER_HOST, self.server_name, self.server_port)]
    }
}

pub fn two_app_hosts() -> BTreeMap<String, Ipv4Addr> {
    BTreeMap::from([(CLIENT_HOST.to_string(), CLIENT_ADDR), (SERVER_HOST.to_string(), SERVER_ADDR)])
}

pub fn two_app_mapping() -> Vec<AppMappingEntry> {
    let mut m: Vec<AppMappingEntry> = AppProfile::alpha().mapping().into_iter().chain(AppProfile::beta().mapping()).collect();
    m.sort_by(|a, b| (&a.host_id, a.local_port).cmp(&(&b.host_id, b.local_port)));
    m
}

/// Benign traffic of both apps in daily capture windows: on each of `days`
/// consecutive days from `first_day`, the window opens at `window_start`
/// seconds after midnight and lasts `window` seconds. Each app sends
/// `rate_pps` requests per second with jittered gaps and the server answers a
/// `reply_ratio` share.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAppCorpus {
    pub rate_pps: f64,
    pub reply_ratio: f64,
    pub first_day: u32,
    pub days: u32,
    pub window_start: f64,
    pub window: f64,
    pub seed: u64,
}

impl TwoAppCorpus {
    /// Fifteen-minute captures starting at 14:00.
    pub fn daily(first_day: u32, days: u32, rate_pps: f64, seed: u64) -> Self {
        TwoAppCorpus { rate_pps, reply_ratio: 1.0, first_day, days, window_start: 14.0 * 3600.0, window: 900.0, seed }
    }

    /// One contiguous capture of `duration` seconds starting at time 0.
    pub fn contiguous(duration: f64, rate_pps: f64, seed: u64) -> Self {
        TwoAppCorpus { rate_pps, reply_ratio: 1.0, first_day: 0, days: 1, window_start: 0.0, window: duration, seed }
    }

    pub fn generate(&self) -> Vec<PacketRecord> {
        let mut out = Vec::new();
        for (i, app) in [AppProfile::alpha(), AppProfile::beta()].iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(31).wrapping_add(i as u64));
            for day in self.first_day..self.first_day + self.days {
                let open = f64::from(day) * 86_400.0 + self.window_start;
                let mut t = open + rng.gen_range(0.0..0.01);
                while t < open + self.window {
                    out.push(app.packet(&mut rng, t, true));
                    if rng.gen_bool(self.reply_ratio) {
                        out.push(app.packet(&mut rng, t + 0.001, false));
                    }
                    t += rng.gen_range(0.5..1.5) / self.rate_pps;
                }
            }
        }
        out.sort_by(|a, b| a.ts.total_cmp(&b.ts));
        out
    }
}

/// Packets of `alpha`'s client edge carrying `beta`'s header profile.
pub fn swapped_app(start: f64, count: usize, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (AppProfile::alpha(), AppProfile::beta());
    (0..count)
        .map(|i| {
            let mut p = b.packet(&mut rng, start + i as f64 * 0.01, true);
            p.src_port = Some(a.client_port);
            p.dst_port = Some(a.server_port);
            p
        })
        .collect()
}

/// `alpha` probing consecutive server ports from `first_port`.
pub fn port_scan(start: f64, first_port: u16, count: usize) -> Vec<PacketRecord> {
    let a = AppProfile::alpha();
    (0..count)
        .map(|i| {
            let mut p =
                PacketRecord::transport(start + i as f64 * 0.001, Proto::Udp, (CLIENT_ADDR, a.client_port), (SERVER_ADDR, first_port + i as u16), 28);
            p.ttl = a.ttl;
            p
        })
        .collect()
}

/// Fixed-size packets on `alpha`'s client edge at `rate_pps`.
pub fn flood(start: f64, count: usize, rate_pps: f64) -> Vec<PacketRecord> {
    let a = AppProfile::alpha();
    (0..count)
        .map(|i| {
            let mut p = PacketRecord::transport(
                start + i as f64 / rate_pps,
                Proto::Udp,
                (CLIENT_ADDR, a.client_port),
                (SERVER_ADDR, a.server_port),
                1472,
            );
            p.ttl = a.ttl;
            p
        })
        .collect()
}

/// Labels and time-merges benign and abnormal packets.
pub fn labeled(benign: Vec<PacketRecord>, abnormal: Vec<PacketRecord>) -> Vec<(PacketRecord, Label)> {
    let mut all: Vec<(PacketRecord, Label)> = benign
        .into_iter()
        .map(|p| (p, Label::Benign))
        .chain(abnormal.into_iter().map(|p| (p, Label::Abnormal)))
        .collect();
    all.sort_by(|a, b| a.0.ts.total_cmp(&b.0.ts));
    all
}

/// One stretch of a flow-statistics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub samples: usize,
    pub rate_pps: f64,
    pub bytes_per_packet: f64,
}

/// Cumulative flow-statistics samples every `interval` seconds; each
/// sample's increments carry uniform multiplicative noise of `±noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatStream {
    pub interval: f64,
    pub noise: f64,
    pub seed: u64,
    pub segments: Vec<Segment>,
}

impl StatStream {
    pub fn steady(samples: usize, rate_pps: f64, bytes_per_packet: f64, interval: f64, noise: f64, seed: u64) -> Self {
        StatStream { interval, noise, seed, segments: vec![Segment { samples, rate_pps, bytes_per_packet }] }
    }

    pub fn then(mut self, samples: usize, rate_pps: f64, bytes_per_packet: f64) -> Self {
        self.segments.push(Segment { samples, rate_pps, bytes_per_packet });
        self
    }

    pub fn generate(&self) -> Vec<FlowStatSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (mut p, mut b) = (0u64, 0u64);
        let mut out = Vec::new();
        for seg in &self.segments {
            for _ in 0..seg.samples {
                let factor = if self.noise > 0.0 { rng.gen_range(1.0 - self.noise..=1.0 + self.noise) } else { 1.0 };
                let dp = (seg.rate_pps * self.interval * factor).round() as u64;
                p += dp;
                b += (dp as f64 * seg.bytes_per_packet).round() as u64;
                out.push(FlowStatSample { t: (out.len() + 1) as f64 * self.interval, packets_cum: p, bytes_cum: b });
            }
        }
        out
    }
}

/// Packets, socket reports and host bindings of an iperf-style run: `channels`
/// parallel TCP connections from a client on `h2` to the server on `h1`.
pub fn iperf_corpus(
    channels: u32,
    duration: f64,
    seed: u64,
) -> Result<(Vec<PacketRecord>, Vec<AppMappingEntry>, BTreeMap<String, Ipv4Addr>), SimError> {
    let mut spec = ScenarioSpec::iperf_line(2, 2, channels, duration);
    for w in &mut spec.workload {
        w.start = 0.0;
    }
    let traffic = expand(&spec.topology(), &spec.workload, seed)?;
    let hosts = spec.hosts.iter().map(|h| (h.id.clone(), h.addr)).collect();
    Ok((traffic.injections.into_iter().map(|i| i.pkt).collect(), traffic.mapping, hosts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_sorted_and_seeded() {
        let c = TwoAppCorpus::contiguous(20.0, 50.0, 3);
        let a = c.generate();
        assert!(a.windows(2).all(|w| w[0].ts <= w[1].ts));
        assert_eq!(a, c.generate());
        assert_ne!(a, TwoAppCorpus::contiguous(20.0, 50.0, 4).generate());
        let alpha = a.iter().filter(|p| p.dst_port == Some(7000)).count();
        assert!((800..1200).contains(&alpha), "{alpha}");
    }

    #[test]
    fn daily_windows_share_time_of_day() {
        let a = TwoAppCorpus::daily(0, 3, 2.0, 1).generate();
        let days: std::collections::BTreeSet<u8> = a.iter().map(|p| p.day).collect();
        assert_eq!(days.len(), 3);
        assert!(a.iter().all(|p| (50_400.0..51_301.0).contains(&p.time_of_day())));
    }

    #[test]
    fn stat_stream_segments() {
        let s = StatStream::steady(3, 10.0, 100.0, 5.0, 0.0, 1).then(2, 100.0, 10.0).generate();
        let p: Vec<u64> = s.iter().map(|x| x.packets_cum).collect();
        assert_eq!(p, vec![50, 100, 150, 650, 1150]);
        assert_eq!(s[4].bytes_cum, 15000 + 10000);
        assert_eq!(s[4].t, 25.0);
    }

    #[test]
    fn iperf_corpus_uses_ephemeral_client_ports() {
        let (pkts, mapping, hosts) = iperf_corpus(2, 5.0, 1).unwrap();
        assert_eq!(hosts.len(), 2);
        assert!(mapping.iter().any(|m| m.app_name == "iperf-server" && m.local_port == Some(5001)));
        assert!(pkts.iter().filter(|p| p.dst_port == Some(5001)).all(|p| p.src_port.is_some_and(|s| s >= 32768)));
    }
}
