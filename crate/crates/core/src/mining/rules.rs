use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::trace::PacketRecord;

/// Header fields a flow rule may match on.
///
/// TCP flags, MAC addresses, TTL and IP length are left out: they are either
/// not matchable in a standard flow table or vary per packet of one flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchField {
    #[serde(rename = "vlanID")]
    VlanId,
    #[serde(rename = "etherType")]
    EtherType,
    #[serde(rename = "srcAddr")]
    SrcAddr,
    #[serde(rename = "dstAddr")]
    DstAddr,
    #[serde(rename = "proto")]
    Proto,
    #[serde(rename = "dscp")]
    Dscp,
    #[serde(rename = "ecn")]
    Ecn,
    #[serde(rename = "srcPort")]
    SrcPort,
    #[serde(rename = "dstPort")]
    DstPort,
    #[serde(rename = "icmpType")]
    IcmpType,
    #[serde(rename = "icmpCode")]
    IcmpCode,
    #[serde(rename = "arpOp")]
    ArpOp,
}

impl MatchField {
    pub const ALL: [MatchField; 12] = [
        MatchField::VlanId,
        MatchField::EtherType,
        MatchField::SrcAddr,
        MatchField::DstAddr,
        MatchField::Proto,
        MatchField::Dscp,
        MatchField::Ecn,
        MatchField::SrcPort,
        MatchField::DstPort,
        MatchField::IcmpType,
        MatchField::IcmpCode,
        MatchField::ArpOp,
    ];

    /// Fields mined from a dataset; addresses come from the edge instead.
    pub const MINED: [MatchField; 10] = [
        MatchField::VlanId,
        MatchField::EtherType,
        MatchField::Proto,
        MatchField::Dscp,
        MatchField::Ecn,
        MatchField::SrcPort,
        MatchField::DstPort,
        MatchField::IcmpType,
        MatchField::IcmpCode,
        MatchField::ArpOp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MatchField::VlanId => "vlanID",
            MatchField::EtherType => "etherType",
            MatchField::SrcAddr => "srcAddr",
            MatchField::DstAddr => "dstAddr",
            MatchField::Proto => "proto",
            MatchField::Dscp => "dscp",
            MatchField::Ecn => "ecn",
            MatchField::SrcPort => "srcPort",
            MatchField::DstPort => "dstPort",
            MatchField::IcmpType => "icmpType",
            MatchField::IcmpCode => "icmpCode",
            MatchField::ArpOp => "arpOp",
        }
    }

    /// Canonical string value of this field in `pkt`, if the packet carries it.
    pub fn extract(self, pkt: &PacketRecord) -> Option<String> {
        let is_ip = pkt.proto != crate::trace::Proto::Arp;
        match self {
            MatchField::VlanId => Some(pkt.vlan_id.to_string()),
            MatchField::EtherType => Some(pkt.eth_type.to_string()),
            MatchField::SrcAddr => Some(pkt.src_ip.to_string()),
            MatchField::DstAddr => Some(pkt.dst_ip.to_string()),
            MatchField::Proto => is_ip.then(|| pkt.proto.to_string()),
            MatchField::Dscp => is_ip.then(|| pkt.dscp.to_string()),
            MatchField::Ecn => is_ip.then(|| pkt.ecn.to_string()),
            MatchField::SrcPort => pkt.src_port.map(|p| p.to_string()),
            MatchField::DstPort => pkt.dst_port.map(|p| p.to_string()),
            MatchField::IcmpType => pkt.icmp_type.map(|v| v.to_string()),
            MatchField::IcmpCode => pkt.icmp_code.map(|v| v.to_string()),
            MatchField::ArpOp => pkt.arp_op.map(|v| v.to_string()),
        }
    }

    /// Binary-table column label `name:value`.
    pub fn label(self, value: &str) -> String {
        format!("{}:{value}", self.name())
    }

    /// Splits a column label back into field and value.
    pub fn parse_label(label: &str) -> Option<(MatchField, String)> {
        let (name, value) = label.split_once(':')?;
        Some((name.parse().ok()?, value.to_string()))
    }
}

impl fmt::Display for MatchField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MatchField::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown match field `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward(u32),
    Mirror(u32),
    ToController,
}

pub const RULE_PRIORITY: u16 = 100;

/// A positive flow rule: a conjunction of `field = value` predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRule {
    pub id: String,
    #[serde(rename = "match")]
    pub matches: BTreeMap<MatchField, String>,
    pub priority: u16,
    pub cookie: u64,
    /// Seconds; 0 disables the timer.
    pub idle_timeout: f64,
    pub hard_timeout: f64,
    #[serde(default)]
    pub actions: Vec<Action>,
}

impl FlowRule {
    pub fn new(id: impl Into<String>, cookie: u64, matches: BTreeMap<MatchField, String>) -> Self {
        FlowRule {
            id: id.into(),
            matches,
            priority: RULE_PRIORITY,
            cookie,
            idle_timeout: 0.0,
            hard_timeout: 0.0,
            actions: Vec::new(),
        }
    }

    /// Full 5-tuple rule (addresses, protocol and both ports when present) for `pkt`.
    pub fn five_tuple(id: impl Into<String>, cookie: u64, pkt: &PacketRecord) -> Self {
        let mut matches = BTreeMap::new();
        for field in [MatchField::EtherType, MatchField::SrcAddr, MatchField::DstAddr, MatchField::Proto, MatchField::SrcPort, MatchField::DstPort] {
            if let Some(v) = field.extract(pkt) {
                matches.insert(field, v);
            }
        }
        FlowRule::new(id, cookie, matches)
    }

    pub fn matches(&self, pkt: &PacketRecord) -> bool {
        match_rule(self, pkt)
    }
}

/// True iff every predicate of `rule` holds for `pkt`.
pub fn match_rule(rule: &FlowRule, pkt: &PacketRecord) -> bool {
    rule.matches.iter().all(|(field, value)| field.extract(pkt).as_deref() == Some(value.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::Proto;

    fn pkt(dst_port: u16) -> PacketRecord {
        PacketRecord::transport(0.0, Proto::Tcp, ("10.0.0.1".parse().unwrap(), 40000), ("10.0.0.2".parse().unwrap(), dst_port), 60)
    }

    #[test]
    fn predicate_semantics() {
        let mut m = BTreeMap::new();
        m.insert(MatchField::Proto, "TCP".to_string());
        m.insert(MatchField::DstPort, "5001".to_string());
        let rule = FlowRule::new("r1", 1, m);
        assert!(match_rule(&rule, &pkt(5001)));
        assert!(!match_rule(&rule, &pkt(5002)));
        assert!(match_rule(&FlowRule::new("any", 2, BTreeMap::new()), &pkt(1)));
    }

    #[test]
    fn absent_fields_never_match() {
        let mut m = BTreeMap::new();
        m.insert(MatchField::IcmpType, "8".to_string());
        assert!(!match_rule(&FlowRule::new("r", 1, m), &pkt(5001)));
    }

    #[test]
    fn labels_round_trip() {
        let label = MatchField::DstPort.label("5001");
        assert_eq!(label, "dstPort:5001");
        assert_eq!(MatchField::parse_label(&label), Some((MatchField::DstPort, "5001".into())));
        assert!(MatchField::parse_label("ttl:64").is_none());
    }

    #[test]
    fn five_tuple_has_both_ports() {
        let r = FlowRule::five_tuple("f", 9, &pkt(5001));
        assert_eq!(r.matches.get(&MatchField::SrcPort).map(String::as_str), Some("40000"));
        assert_eq!(r.matches.len(), 6);
        assert!(r.matches(&pkt(5001)));
    }

    #[test]
    fn json_uses_header_names() {
        let r = FlowRule::five_tuple("f", 9, &pkt(5001));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"dstPort\":\"5001\""), "{json}");
        assert_eq!(serde_json::from_str::<FlowRule>(&json).unwrap(), r);
    }
}
