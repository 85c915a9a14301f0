use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::apriori::{apriori, association_rules, BinaryTable};
use super::association::{mine_rule_associations, RuleAssociation};
use super::rules::{FlowRule, MatchField};
use super::MiningError;
use crate::graph::{CrEdge, CrGraph, EdgeKey, Entity};
use crate::trace::PacketRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    /// Seconds per association window.
    pub window_duration: f64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig { min_support: 0.9, min_confidence: 1.0, window_duration: 1.0 }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        if !(self.min_support > 0.0 && self.min_support <= 1.0) {
            return Err(MiningError::Threshold(self.min_support));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) {
            return Err(MiningError::Threshold(self.min_confidence));
        }
        if self.window_duration <= 0.0 {
            return Err(MiningError::Threshold(self.window_duration));
        }
        Ok(())
    }
}

/// Binary table of `field:value` columns over the mined header fields.
pub fn header_table(packets: &[PacketRecord]) -> BinaryTable {
    BinaryTable::from_transactions(
        packets.iter().map(|p| MatchField::MINED.iter().filter_map(|f| f.extract(p).map(|v| f.label(&v))).collect::<Vec<_>>()),
    )
}

/// Predicate sets for one edge dataset: unified antecedent and consequent
/// sets of every strong association, deduplicated, keeping only those of
/// maximum cardinality. The edge addresses are added to each set.
pub fn edge_rule_matches(
    packets: &[PacketRecord],
    addresses: Option<(std::net::Ipv4Addr, std::net::Ipv4Addr)>,
    config: &MiningConfig,
) -> Result<Vec<BTreeMap<MatchField, String>>, MiningError> {
    if packets.is_empty() {
        return Ok(Vec::new());
    }
    let table = header_table(packets);
    let itemsets = apriori(&table, config.min_support)?;
    let unified: BTreeSet<BTreeSet<String>> = association_rules(&itemsets, config.min_confidence)
        .into_iter()
        .map(|r| r.antecedents.into_iter().chain(r.consequents).collect())
        .collect();
    let Some(max) = unified.iter().map(BTreeSet::len).max() else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for set in unified.into_iter().filter(|s| s.len() == max) {
        let mut m: BTreeMap<MatchField, String> =
            set.iter().filter_map(|label| MatchField::parse_label(label)).collect();
        if let Some((src, dst)) = addresses {
            m.insert(MatchField::SrcAddr, src.to_string());
            m.insert(MatchField::DstAddr, dst.to_string());
        }
        out.push(m);
    }
    Ok(out)
}

/// Allocates `r{n}` ids and matching cookies.
#[derive(Debug, Clone, Default)]
pub struct RuleIds {
    next: u64,
}

impl RuleIds {
    pub fn starting_at(next: u64) -> Self {
        RuleIds { next }
    }

    pub fn allocate(&mut self) -> (String, u64) {
        self.next += 1;
        (format!("r{}", self.next), self.next)
    }
}

fn rules_for_edge(edge: &CrEdge, config: &MiningConfig, ids: &mut RuleIds) -> Result<Vec<FlowRule>, MiningError> {
    Ok(edge_rule_matches(&edge.packet_dataset, edge.addresses(), config)?
        .into_iter()
        .map(|m| {
            let (id, cookie) = ids.allocate();
            FlowRule::new(id, cookie, m)
        })
        .collect())
}

/// Rule generator for every edge touching `app`.
pub fn generate_rules(
    graph: &CrGraph,
    app: &Entity,
    config: &MiningConfig,
    ids: &mut RuleIds,
) -> Result<Vec<(EdgeKey, Vec<FlowRule>)>, MiningError> {
    if !graph.nodes.contains(app) {
        return Err(MiningError::UnknownEntity(app.to_string()));
    }
    graph.edges_of(app).map(|e| Ok((e.key.clone(), rules_for_edge(e, config, ids)?))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRules {
    pub key: EdgeKey,
    pub rules: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationRules {
    pub app: Entity,
    pub rules: Vec<String>,
    pub associations: Vec<RuleAssociation>,
}

/// All mined rules of a graph with their edges and per-application associations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBook {
    pub config: MiningConfig,
    pub rules: Vec<FlowRule>,
    pub edges: Vec<EdgeRules>,
    pub applications: Vec<ApplicationRules>,
}

impl RuleBook {
    /// Mines every edge once, then associations per application over the
    /// time-merged datasets of that application's edges.
    pub fn mine(graph: &CrGraph, config: &MiningConfig) -> Result<Self, MiningError> {
        config.validate()?;
        let mut ids = RuleIds::default();
        let mut rules = Vec::new();
        let mut edges = Vec::new();
        for edge in graph.edges.values() {
            let mined = rules_for_edge(edge, config, &mut ids)?;
            edges.push(EdgeRules { key: edge.key.clone(), rules: mined.iter().map(|r| r.id.clone()).collect() });
            rules.extend(mined);
        }
        let by_id: BTreeMap<&str, &FlowRule> = rules.iter().map(|r| (r.id.as_str(), r)).collect();
        let mut applications = Vec::new();
        for app in graph.nodes.iter().filter(|n| !n.is_unknown_service()) {
            let mut app_rules: Vec<FlowRule> = Vec::new();
            let mut trace: Vec<&PacketRecord> = Vec::new();
            for e in edges.iter().filter(|e| &e.key.src == app || &e.key.dst == app) {
                app_rules.extend(e.rules.iter().map(|id| by_id[id.as_str()].clone()));
                trace.extend(&graph.edges[&e.key].packet_dataset);
            }
            if app_rules.is_empty() {
                continue;
            }
            trace.sort_by(|a, b| a.ts.total_cmp(&b.ts));
            let trace: Vec<PacketRecord> = trace.into_iter().cloned().collect();
            let associations = mine_rule_associations(
                &app_rules,
                &trace,
                config.window_duration,
                config.min_support,
                config.min_confidence,
            )?;
            applications.push(ApplicationRules {
                app: app.clone(),
                rules: app_rules.iter().map(|r| r.id.clone()).collect(),
                associations,
            });
        }
        Ok(RuleBook { config: *config, rules, edges, applications })
    }

    pub fn rule(&self, id: &str) -> Option<&FlowRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn edge_rules(&self, key: &EdgeKey) -> Vec<&FlowRule> {
        self.edges
            .iter()
            .filter(|e| &e.key == key)
            .flat_map(|e| e.rules.iter().filter_map(|id| self.rule(id)))
            .collect()
    }

    /// Rules of `key` plus every rule grouped with one of them in an
    /// association of either endpoint application. Sorted by id, no duplicates.
    pub fn deployment_set(&self, key: &EdgeKey) -> Vec<&FlowRule> {
        let own: BTreeSet<&str> = self.edge_rules(key).iter().map(|r| r.id.as_str()).collect();
        let mut ids = own.clone();
        for app in self.applications.iter().filter(|a| a.app == key.src || a.app == key.dst) {
            for assoc in &app.associations {
                if assoc.rules.iter().any(|r| own.contains(r.as_str())) {
                    ids.extend(assoc.rules.iter().map(String::as_str));
                }
            }
        }
        ids.into_iter().filter_map(|id| self.rule(id)).collect()
    }

    /// Edges owning rule `id`.
    pub fn edges_of_rule(&self, id: &str) -> Vec<&EdgeKey> {
        self.edges.iter().filter(|e| e.rules.iter().any(|r| r == id)).map(|e| &e.key).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rule book serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, MiningError> {
        serde_json::from_str(s).map_err(|e| MiningError::Document(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Proto;

    fn iperf(n: usize) -> Vec<PacketRecord> {
        (0..n)
            .map(|i| {
                let port = 32768 + ((i * 7919) % 28000) as u16;
                PacketRecord::transport(i as f64, Proto::Tcp, ("10.0.0.1".parse().unwrap(), port), ("10.0.0.2".parse().unwrap(), 5001), 60)
            })
            .collect()
    }

    #[test]
    fn client_port_is_not_mined() {
        let pkts = iperf(200);
        let addrs = Some((pkts[0].src_ip, pkts[0].dst_ip));
        let rules = edge_rule_matches(&pkts, addrs, &MiningConfig::default()).unwrap();
        assert_eq!(rules.len(), 1);
        let r = &rules[0];
        assert_eq!(r.get(&MatchField::DstPort).map(String::as_str), Some("5001"));
        assert!(!r.contains_key(&MatchField::SrcPort));
        let keys: Vec<&str> = r.keys().map(|k| k.name()).collect();
        assert_eq!(keys, ["vlanID", "etherType", "srcAddr", "dstAddr", "proto", "dscp", "ecn", "dstPort"]);
    }

    #[test]
    fn identical_rows_give_every_pair() {
        let pkts = vec![iperf(1)[0].clone(); 10];
        let rules = edge_rule_matches(&pkts, None, &MiningConfig::default()).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].len(), 7);
    }

    #[test]
    fn split_ports_are_dropped() {
        let mut pkts = iperf(10);
        for (i, p) in pkts.iter_mut().enumerate() {
            p.dst_port = Some(if i % 2 == 0 { 80 } else { 443 });
        }
        let rules = edge_rule_matches(&pkts, None, &MiningConfig::default()).unwrap();
        assert!(rules.iter().all(|r| !r.contains_key(&MatchField::DstPort)));
        assert!(edge_rule_matches(&[], None, &MiningConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn ids_are_sequential() {
        let mut ids = RuleIds::default();
        assert_eq!(ids.allocate(), ("r1".to_string(), 1));
        assert_eq!(ids.allocate(), ("r2".to_string(), 2));
    }
}
