use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::Topology;
use super::SimError;
use crate::trace::{AppMappingEntry, PacketRecord, Proto, TcpFlags};

pub const EPHEMERAL_PORTS: std::ops::RangeInclusive<u16> = 32768..=60999;

fn default_channels() -> u32 {
    1
}

fn default_sessions() -> u32 {
    1
}

fn default_packet_size() -> u32 {
    1400
}

fn default_jitter() -> f64 {
    0.2
}

fn default_rtt() -> f64 {
    0.001
}

/// One client/server traffic source: `channels` parallel connections, each
/// split into `sessions` consecutive connections with fresh client ports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadItem {
    pub src: String,
    pub dst: String,
    #[serde(default = "default_channels")]
    pub channels: u32,
    pub proto: Proto,
    pub rate_pps: f64,
    pub start: f64,
    pub duration: f64,
    /// Server port; defaults to 5001 for TCP and 5010 for UDP.
    #[serde(default)]
    pub dst_port: Option<u16>,
    #[serde(default = "default_sessions")]
    pub sessions: u32,
    #[serde(default = "default_packet_size")]
    pub packet_size: u32,
    /// Probability that a client packet is answered; defaults to 1 for TCP, 0 for UDP.
    #[serde(default)]
    pub reply_ratio: Option<f64>,
    /// Relative spread of inter-packet gaps.
    #[serde(default = "default_jitter")]
    pub jitter: f64,
    /// Delay between a packet and its reply.
    #[serde(default = "default_rtt")]
    pub reply_delay: f64,
    #[serde(default)]
    pub src_app: Option<String>,
    #[serde(default)]
    pub dst_app: Option<String>,
}

impl WorkloadItem {
    pub fn new(src: &str, dst: &str, proto: Proto, rate_pps: f64, start: f64, duration: f64) -> Self {
        WorkloadItem {
            src: src.into(),
            dst: dst.into(),
            channels: 1,
            proto,
            rate_pps,
            start,
            duration,
            dst_port: None,
            sessions: 1,
            packet_size: default_packet_size(),
            reply_ratio: None,
            jitter: default_jitter(),
            reply_delay: default_rtt(),
            src_app: None,
            dst_app: None,
        }
    }

    pub fn server_port(&self) -> u16 {
        self.dst_port.unwrap_or(if self.proto == Proto::Tcp { 5001 } else { 5010 })
    }

    pub fn client_app(&self) -> String {
        self.src_app.clone().unwrap_or_else(|| format!("{}-client", self.proto.as_str().to_lowercase()))
    }

    pub fn server_app(&self) -> String {
        self.dst_app.clone().unwrap_or_else(|| format!("{}-server", self.proto.as_str().to_lowercase()))
    }

    fn replies(&self) -> f64 {
        self.reply_ratio.unwrap_or(if self.proto == Proto::Tcp { 1.0 } else { 0.0 })
    }

    fn validate(&self) -> Result<(), SimError> {
        let ok = matches!(self.proto, Proto::Tcp | Proto::Udp)
            && self.rate_pps > 0.0
            && self.duration >= 0.0
            && self.start >= 0.0
            && self.sessions > 0
            && (0.0..1.0).contains(&self.jitter)
            && self.reply_delay > 0.0
            && (0.0..=1.0).contains(&self.replies())
            && self.packet_size >= 40;
        if ok {
            Ok(())
        } else {
            Err(SimError::Workload(format!("invalid workload item {} -> {}", self.src, self.dst)))
        }
    }
}

/// A packet leaving host `host` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub t: f64,
    pub host: usize,
    pub pkt: PacketRecord,
}

/// Expanded workload: time-ordered injections plus the host-side socket reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Traffic {
    pub injections: Vec<Injection>,
    pub mapping: Vec<AppMappingEntry>,
}

fn session_rng(seed: u64, item: usize, channel: u32, session: u32) -> ChaCha8Rng {
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [item as u64, channel as u64, session as u64] {
        s = s.wrapping_mul(0xbf58_476d_1ce4_e5b9).wrapping_add(v.wrapping_add(1));
        s ^= s >> 31;
    }
    ChaCha8Rng::seed_from_u64(s)
}

struct Session<'a> {
    item: &'a WorkloadItem,
    client: (usize, Ipv4Addr, u16),
    server: (usize, Ipv4Addr, u16),
    out: &'a mut Vec<Injection>,
}

impl Session<'_> {
    fn send(&mut self, t: f64, from_client: bool, len: u32, flags: u8) {
        let (a, b) = if from_client { (self.client, self.server) } else { (self.server, self.client) };
        let mut pkt = PacketRecord::transport(t, self.item.proto, (a.1, a.2), (b.1, b.2), len);
        if self.item.proto == Proto::Tcp {
            pkt.tcp_flags = Some(TcpFlags(flags));
        }
        self.out.push(Injection { t, host: a.0, pkt });
    }
}

/// Deterministic packet schedule for `items` over `topo`.
pub fn expand(topo: &Topology, items: &[WorkloadItem], seed: u64) -> Result<Traffic, SimError> {
    let mut traffic = Traffic::default();
    for (i, item) in items.iter().enumerate() {
        item.validate()?;
        let src = topo.host_by_id(&item.src).ok_or_else(|| SimError::Workload(format!("unknown host {}", item.src)))?;
        let dst = topo.host_by_id(&item.dst).ok_or_else(|| SimError::Workload(format!("unknown host {}", item.dst)))?;
        let (src_addr, dst_addr) = (topo.hosts[src].addr, topo.hosts[dst].addr);
        let server_port = item.server_port();
        let server_entry = AppMappingEntry {
            ts: 0.0,
            host_id: item.dst.clone(),
            app_name: item.server_app(),
            proto: item.proto,
            local_port: Some(server_port),
            remote_ip: None,
            remote_port: None,
        };
        if !traffic.mapping.contains(&server_entry) {
            traffic.mapping.push(server_entry);
        }
        let span = item.duration / item.sessions as f64;
        let d = item.reply_delay;
        for c in 0..item.channels {
            for s in 0..item.sessions {
                let mut rng = session_rng(seed, i, c, s);
                let client_port = rng.gen_range(EPHEMERAL_PORTS);
                let begin = item.start + s as f64 * span + rng.gen_range(0.0..0.01);
                let end = item.start + (s + 1) as f64 * span;
                traffic.mapping.push(AppMappingEntry {
                    ts: begin,
                    host_id: item.src.clone(),
                    app_name: item.client_app(),
                    proto: item.proto,
                    local_port: Some(client_port),
                    remote_ip: Some(dst_addr),
                    remote_port: Some(server_port),
                });
                let mut sess = Session {
                    item,
                    client: (src, src_addr, client_port),
                    server: (dst, dst_addr, server_port),
                    out: &mut traffic.injections,
                };
                let tcp = item.proto == Proto::Tcp;
                let mut t = begin;
                if tcp {
                    sess.send(t, true, 60, TcpFlags::SYN);
                    sess.send(t + d, false, 60, TcpFlags::SYN | TcpFlags::ACK);
                    sess.send(t + 2.0 * d, true, 52, TcpFlags::ACK);
                    t += 3.0 * d;
                }
                let gap = 1.0 / item.rate_pps;
                let stop = if tcp { end - 3.0 * d } else { end };
                while t < stop {
                    sess.send(t, true, item.packet_size, TcpFlags::PSH | TcpFlags::ACK);
                    if rng.gen_bool(item.replies()) {
                        sess.send(t + d * rng.gen_range(0.5..1.0), false, 52, TcpFlags::ACK);
                    }
                    t += gap * rng.gen_range(1.0 - item.jitter..=1.0 + item.jitter);
                }
                if tcp {
                    let t = t.min(stop.max(begin + 3.0 * d));
                    sess.send(t, true, 52, TcpFlags::FIN | TcpFlags::ACK);
                    sess.send(t + d, false, 52, TcpFlags::FIN | TcpFlags::ACK);
                    sess.send(t + 2.0 * d, true, 52, TcpFlags::ACK);
                }
            }
        }
    }
    traffic.injections.sort_by(|a, b| a.t.total_cmp(&b.t));
    traffic.mapping.sort_by(|a, b| a.ts.total_cmp(&b.ts));
    Ok(traffic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo() -> Topology {
        let mut t = Topology::line(2);
        t.attach("h1", 1).attach("h2", 2);
        t
    }

    #[test]
    fn tcp_session_shape() {
        let mut item = WorkloadItem::new("h1", "h2", Proto::Tcp, 100.0, 1.0, 2.0);
        item.channels = 2;
        let tr = expand(&topo(), &[item], 7).unwrap();
        let syns: Vec<_> = tr.injections.iter().filter(|i| i.pkt.tcp_flags == Some(TcpFlags(TcpFlags::SYN))).collect();
        assert_eq!(syns.len(), 2);
        assert!(syns.iter().all(|i| i.pkt.dst_port == Some(5001) && EPHEMERAL_PORTS.contains(&i.pkt.src_port.unwrap())));
        let data = tr.injections.iter().filter(|i| i.pkt.ip_len == 1400).count();
        assert!((340..=460).contains(&data), "{data}");
        assert!(tr.injections.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(tr.mapping.len(), 3);
    }

    #[test]
    fn deterministic_and_duration_independent_ports() {
        let mut a = WorkloadItem::new("h1", "h2", Proto::Udp, 50.0, 0.0, 4.0);
        a.sessions = 4;
        let x = expand(&topo(), &[a.clone()], 3).unwrap();
        assert_eq!(x, expand(&topo(), &[a.clone()], 3).unwrap());
        let mut longer = a.clone();
        longer.duration = 40.0;
        let y = expand(&topo(), &[longer], 3).unwrap();
        let ports = |t: &Traffic| t.mapping.iter().filter_map(|m| m.remote_port.and(m.local_port)).collect::<Vec<_>>();
        assert_eq!(ports(&x), ports(&y));
        assert!(x.injections.iter().all(|i| i.host == 0));
    }

    #[test]
    fn rejects_unknown_hosts() {
        assert!(expand(&topo(), &[WorkloadItem::new("h1", "zz", Proto::Tcp, 1.0, 0.0, 1.0)], 1).is_err());
    }
}
