//! Communication-requirements graph: entities as nodes, directed
//! protocol-stack edges owning their packet and flow-statistics datasets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arl::{ArlDetector, ArlError};
use crate::fsutil::{write_atomic, write_atomic_with};
use crate::rtfsl::{RtfslError, RtfslModel};
use crate::trace::{
    infer_stack, parse_flow_stats, parse_trace, write_flow_stats, write_trace, AppMappingEntry, FlowStatSample,
    PacketRecord, Proto, ProtocolStack, TraceError,
};

const GRAPH_VERSION: u32 = 1;
pub const GRAPH_FILE: &str = "graph.json";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Arl(#[from] ArlError),
    #[error(transparent)]
    Rtfsl(#[from] RtfslError),
    #[error("graph document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An application on a host.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub host_id: String,
    pub app_name: String,
}

impl Entity {
    pub fn new(host_id: impl Into<String>, app_name: impl Into<String>) -> Self {
        Entity { host_id: host_id.into(), app_name: app_name.into() }
    }

    pub fn is_unknown_service(&self) -> bool {
        self.app_name.starts_with("unknown-service")
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.host_id, self.app_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub src: Entity,
    pub dst: Entity,
    pub stack: ProtocolStack,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} [{}]", self.src, self.dst, self.stack)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrEdge {
    pub key: EdgeKey,
    pub packet_dataset: Vec<PacketRecord>,
    pub flow_stats: Vec<FlowStatSample>,
    pub arl: Option<ArlDetector>,
    pub rtfsl: Option<RtfslModel>,
}

impl CrEdge {
    fn new(key: EdgeKey) -> Self {
        CrEdge { key, packet_dataset: Vec::new(), flow_stats: Vec::new(), arl: None, rtfsl: None }
    }

    /// Most frequent (source, destination) address pair of the dataset.
    pub fn addresses(&self) -> Option<(Ipv4Addr, Ipv4Addr)> {
        let mut counts: BTreeMap<(Ipv4Addr, Ipv4Addr), usize> = BTreeMap::new();
        for r in &self.packet_dataset {
            *counts.entry((r.src_ip, r.dst_ip)).or_default() += 1;
        }
        let best = counts.values().copied().max()?;
        counts.into_iter().find(|(_, c)| *c == best).map(|(k, _)| k)
    }
}

/// Resolves packet endpoints to entities from host bindings and app-mapping reports.
#[derive(Debug, Clone, Default)]
pub struct AppResolver {
    hosts: BTreeMap<Ipv4Addr, String>,
    entries: BTreeMap<(String, Proto, Option<u16>), Vec<AppMappingEntry>>,
}

impl AppResolver {
    pub fn new(hosts: impl IntoIterator<Item = (String, Ipv4Addr)>, mapping: impl IntoIterator<Item = AppMappingEntry>) -> Self {
        let hosts = hosts.into_iter().map(|(h, a)| (a, h)).collect();
        let mut entries: BTreeMap<_, Vec<AppMappingEntry>> = BTreeMap::new();
        for e in mapping {
            entries.entry((e.host_id.clone(), e.proto, e.local_port)).or_default().push(e);
        }
        for list in entries.values_mut() {
            list.sort_by(|a, b| a.ts.total_cmp(&b.ts));
        }
        AppResolver { hosts, entries }
    }

    pub fn host_of(&self, addr: Ipv4Addr) -> Option<&str> {
        self.hosts.get(&addr).map(String::as_str)
    }

    /// Entity owning `(addr, port)` at `ts`, talking to `(remote, remote_port)`.
    /// The latest applicable report at or before `ts` wins; unresolved
    /// endpoints become `unknown-service:{proto}[:{port}]` on the host or address.
    pub fn resolve(&self, addr: Ipv4Addr, port: Option<u16>, proto: Proto, remote: Ipv4Addr, remote_port: Option<u16>, ts: f64) -> Entity {
        let host = self.host_of(addr).map(str::to_string).unwrap_or_else(|| addr.to_string());
        let app = self.entries.get(&(host.clone(), proto, port)).and_then(|list| {
            list.iter()
                .rev()
                .filter(|e| e.ts <= ts)
                .find(|e| e.remote_ip.is_none_or(|r| r == remote) && e.remote_port.is_none_or(|p| Some(p) == remote_port))
                .map(|e| e.app_name.clone())
        });
        let app = app.unwrap_or_else(|| match port {
            Some(p) => format!("unknown-service:{proto}:{p}"),
            None => format!("unknown-service:{proto}"),
        });
        Entity { host_id: host, app_name: app }
    }

    pub fn endpoints(&self, rec: &PacketRecord) -> (Entity, Entity) {
        let src = self.resolve(rec.src_ip, rec.src_port, rec.proto, rec.dst_ip, rec.dst_port, rec.ts);
        let dst = self.resolve(rec.dst_ip, rec.dst_port, rec.proto, rec.src_ip, rec.src_port, rec.ts);
        (src, dst)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrGraph {
    pub nodes: BTreeSet<Entity>,
    pub edges: BTreeMap<EdgeKey, CrEdge>,
}

/// Edge totals: componentwise sums of per-rule `(packets, bytes)` counters.
pub fn aggregate_stats(rules: &[(u64, u64)]) -> (u64, u64) {
    rules.iter().fold((0, 0), |(p, b), (rp, rb)| (p + rp, b + rb))
}

#[derive(Serialize, Deserialize)]
struct EdgeDocument {
    key: EdgeKey,
    packets: String,
    flow_stats: String,
    arl: Option<String>,
    rtfsl: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    version: u32,
    nodes: Vec<Entity>,
    edges: Vec<EdgeDocument>,
}

impl CrGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Attributes `rec` to its edge, creating nodes and the edge as needed.
    pub fn observe(&mut self, rec: &PacketRecord, resolver: &AppResolver) -> Result<EdgeKey, TraceError> {
        let stack = infer_stack(rec)?;
        let (src, dst) = resolver.endpoints(rec);
        let key = EdgeKey { src, dst, stack };
        self.nodes.insert(key.src.clone());
        self.nodes.insert(key.dst.clone());
        self.edges.entry(key.clone()).or_insert_with(|| CrEdge::new(key.clone())).packet_dataset.push(rec.clone());
        Ok(key)
    }

    pub fn lookup(&self, src: &Entity, dst: &Entity, stack: &ProtocolStack) -> Option<&CrEdge> {
        let key = EdgeKey { src: src.clone(), dst: dst.clone(), stack: stack.clone() };
        self.edges.get(&key)
    }

    pub fn edge_mut(&mut self, key: &EdgeKey) -> Option<&mut CrEdge> {
        self.edges.get_mut(key)
    }

    /// Edges with `app` at either end.
    pub fn edges_of<'a>(&'a self, app: &'a Entity) -> impl Iterator<Item = &'a CrEdge> + 'a {
        self.edges.values().filter(move |e| &e.key.src == app || &e.key.dst == app)
    }

    pub fn total_packets(&self) -> usize {
        self.edges.values().map(|e| e.packet_dataset.len()).sum()
    }

    /// Writes `graph.json` plus per-edge dataset and model files under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), GraphError> {
        let mut docs = Vec::new();
        for (i, edge) in self.edges.values().enumerate() {
            let base = format!("edges/{i:04}");
            let packets = format!("{base}/packets.csv");
            let flow_stats = format!("{base}/flow_stats.csv");
            write_atomic_with(&dir.join(&packets), |b| write_trace(b, &edge.packet_dataset))?;
            write_atomic_with(&dir.join(&flow_stats), |b| write_flow_stats(b, &edge.flow_stats))?;
            let arl = match &edge.arl {
                Some(m) => {
                    let p = format!("{base}/arl.json");
                    write_atomic(&dir.join(&p), m.to_json().as_bytes())?;
                    Some(p)
                }
                None => None,
            };
            let rtfsl = match &edge.rtfsl {
                Some(m) => {
                    let p = format!("{base}/rtfsl.json");
                    write_atomic(&dir.join(&p), m.to_json().as_bytes())?;
                    Some(p)
                }
                None => None,
            };
            docs.push(EdgeDocument { key: edge.key.clone(), packets, flow_stats, arl, rtfsl });
        }
        let doc = GraphDocument { version: GRAPH_VERSION, nodes: self.nodes.iter().cloned().collect(), edges: docs };
        let json = serde_json::to_string_pretty(&doc).map_err(|e| GraphError::Document(e.to_string()))?;
        write_atomic(&dir.join(GRAPH_FILE), json.as_bytes())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, GraphError> {
        let text = fs::read_to_string(dir.join(GRAPH_FILE))?;
        let doc: GraphDocument = serde_json::from_str(&text).map_err(|e| GraphError::Document(e.to_string()))?;
        if doc.version != GRAPH_VERSION {
            return Err(GraphError::Document(format!("unsupported graph version {}", doc.version)));
        }
        let open = |rel: &str| -> Result<fs::File, GraphError> { Ok(fs::File::open(resolve(dir, rel))?) };
        let mut graph = CrGraph { nodes: doc.nodes.into_iter().collect(), edges: BTreeMap::new() };
        for e in doc.edges {
            if !graph.nodes.contains(&e.key.src) || !graph.nodes.contains(&e.key.dst) {
                return Err(GraphError::Document(format!("edge {} references a missing node", e.key)));
            }
            let arl = match e.arl {
                Some(p) => Some(ArlDetector::from_json(&fs::read_to_string(resolve(dir, &p))?)?),
                None => None,
            };
            let rtfsl = match e.rtfsl {
                Some(p) => Some(RtfslModel::from_json(&fs::read_to_string(resolve(dir, &p))?)?),
                None => None,
            };
            let edge = CrEdge {
                key: e.key.clone(),
                packet_dataset: parse_trace(open(&e.packets)?)?,
                flow_stats: parse_flow_stats(open(&e.flow_stats)?)?,
                arl,
                rtfsl,
            };
            graph.edges.insert(e.key, edge);
        }
        Ok(graph)
    }
}

fn resolve(dir: &Path, rel: &str) -> PathBuf {
    dir.join(rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Layer;

    fn ip(s: &str) -> Ipv4Addr {
        s.parse().unwrap()
    }

    fn mapping(ts: f64, host: &str, app: &str, proto: Proto, port: u16) -> AppMappingEntry {
        AppMappingEntry {
            ts,
            host_id: host.into(),
            app_name: app.into(),
            proto,
            local_port: Some(port),
            remote_ip: None,
            remote_port: None,
        }
    }

    fn resolver() -> AppResolver {
        AppResolver::new(
            [("h1".to_string(), ip("10.0.0.1")), ("h2".to_string(), ip("10.0.0.2"))],
            [
                mapping(0.0, "h1", "client", Proto::Tcp, 40000),
                mapping(0.0, "h2", "server", Proto::Tcp, 5001),
                mapping(100.0, "h1", "other-client", Proto::Tcp, 40000),
            ],
        )
    }

    fn pkt(ts: f64, src: (&str, u16), dst: (&str, u16)) -> PacketRecord {
        PacketRecord::transport(ts, Proto::Tcp, (ip(src.0), src.1), (ip(dst.0), dst.1), 60)
    }

    #[test]
    fn request_and_reply_are_distinct_edges() {
        let r = resolver();
        let mut g = CrGraph::new();
        let a = g.observe(&pkt(1.0, ("10.0.0.1", 40000), ("10.0.0.2", 5001)), &r).unwrap();
        assert_eq!((g.nodes.len(), g.edges.len()), (2, 1));
        let b = g.observe(&pkt(1.1, ("10.0.0.2", 5001), ("10.0.0.1", 40000)), &r).unwrap();
        assert_ne!(a, b);
        assert_eq!(g.edges.len(), 2);
        assert!(g.lookup(&a.src, &a.dst, &a.stack).is_some());
        assert!(g.lookup(&a.src, &a.dst, &ProtocolStack::ethernet_ip(Layer::Udp)).is_none());
        assert_eq!(g.total_packets(), 2);
    }

    #[test]
    fn latest_mapping_wins() {
        let r = resolver();
        let mut g = CrGraph::new();
        let early = g.observe(&pkt(50.0, ("10.0.0.1", 40000), ("10.0.0.2", 5001)), &r).unwrap();
        let late = g.observe(&pkt(100.0, ("10.0.0.1", 40000), ("10.0.0.2", 5001)), &r).unwrap();
        assert_eq!(early.src.app_name, "client");
        assert_eq!(late.src.app_name, "other-client");
    }

    #[test]
    fn unknown_services_are_named_by_port() {
        let r = resolver();
        let mut g = CrGraph::new();
        let k = g.observe(&pkt(1.0, ("10.0.0.1", 40000), ("10.0.0.9", 443)), &r).unwrap();
        assert_eq!(k.dst, Entity::new("10.0.0.9", "unknown-service:TCP:443"));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate_stats(&[(10, 100), (5, 50)]), (15, 150));
        assert_eq!(aggregate_stats(&[]), (0, 0));
        assert_eq!(aggregate_stats(&[(7, 70)]), (7, 70));
    }

    #[test]
    fn save_load_round_trip() {
        let r = resolver();
        let mut g = CrGraph::new();
        for i in 0..5 {
            g.observe(&pkt(i as f64, ("10.0.0.1", 40000), ("10.0.0.2", 5001)), &r).unwrap();
        }
        let key = g.edges.keys().next().unwrap().clone();
        g.edge_mut(&key).unwrap().flow_stats.push(FlowStatSample { t: 0.0, packets_cum: 1, bytes_cum: 60 });
        let dir = tempfile::tempdir().unwrap();
        g.save(dir.path()).unwrap();
        let back = CrGraph::load(dir.path()).unwrap();
        assert_eq!(back, g);
    }
}
