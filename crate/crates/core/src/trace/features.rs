//! Protocol-specific preprocessing of packet headers into numeric vectors.
//!
//! Addresses never enter the vector: they select the graph edge instead.
//! Checksums, sequence/acknowledgment numbers and IP identifiers are not
//! part of [`PacketRecord`] and so are excluded by construction.

use super::record::{Layer, PacketRecord, ProtocolStack, Proto, TcpFlags};
use super::TraceError;

/// Ordered feature names shared by all vectors of one stack.
pub type Schema = &'static [&'static str];

const ARP_SCHEMA: Schema = &["day", "time_of_day", "vlan_id", "ip_len", "arp_op"];
const IP_SCHEMA: Schema = &["day", "time_of_day", "vlan_id", "ttl", "ip_len", "dscp", "ecn"];
const ICMP_SCHEMA: Schema =
    &["day", "time_of_day", "vlan_id", "ttl", "ip_len", "dscp", "ecn", "icmp_type", "icmp_code"];
const UDP_SCHEMA: Schema =
    &["day", "time_of_day", "vlan_id", "ttl", "ip_len", "dscp", "ecn", "src_port", "dst_port"];
const TCP_SCHEMA: Schema = &[
    "day", "time_of_day", "vlan_id", "ttl", "ip_len", "dscp", "ecn", "src_port", "dst_port",
    "flag_fin", "flag_syn", "flag_rst", "flag_psh", "flag_ack", "flag_urg", "flag_ece", "flag_cwr",
];

/// Numeric feature vector tagged with the schema that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Schema,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Schema) -> Self {
        debug_assert_eq!(values.len(), schema.len());
        FeatureVector { values, schema }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of the named feature, if the schema has it.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.schema.iter().position(|n| *n == name).map(|i| self.values[i])
    }
}

/// Protocol stack a record travels over.
pub fn infer_stack(rec: &PacketRecord) -> Result<ProtocolStack, TraceError> {
    Ok(match rec.proto {
        Proto::Arp => ProtocolStack::ethernet_arp(),
        Proto::Tcp => ProtocolStack::ethernet_ip(Layer::Tcp),
        Proto::Udp => ProtocolStack::ethernet_ip(Layer::Udp),
        Proto::Icmp => ProtocolStack::ethernet_ip(Layer::Icmp),
        Proto::Igmp => ProtocolStack::ethernet_ip(Layer::Igmp),
        Proto::Other => return Err(TraceError::UnsupportedStack(rec.proto)),
    })
}

pub fn schema_for(proto: Proto) -> Result<Schema, TraceError> {
    Ok(match proto {
        Proto::Arp => ARP_SCHEMA,
        Proto::Tcp => TCP_SCHEMA,
        Proto::Udp => UDP_SCHEMA,
        Proto::Icmp => ICMP_SCHEMA,
        Proto::Igmp => IP_SCHEMA,
        Proto::Other => return Err(TraceError::UnsupportedStack(proto)),
    })
}

/// Turns a record into the feature vector of its stack.
pub fn preprocess(rec: &PacketRecord) -> Result<FeatureVector, TraceError> {
    let schema = schema_for(rec.proto)?;
    let mut v = Vec::with_capacity(schema.len());
    v.push(f64::from(rec.day));
    v.push(rec.time_of_day());
    v.push(f64::from(rec.vlan_id));
    if rec.proto == Proto::Arp {
        v.push(f64::from(rec.ip_len));
        v.push(f64::from(rec.arp_op.unwrap_or(0)));
        return Ok(FeatureVector::new(v, schema));
    }
    v.extend([f64::from(rec.ttl), f64::from(rec.ip_len), f64::from(rec.dscp), f64::from(rec.ecn)]);
    match rec.proto {
        Proto::Tcp | Proto::Udp => {
            v.push(f64::from(rec.src_port.unwrap_or(0)));
            v.push(f64::from(rec.dst_port.unwrap_or(0)));
            if rec.proto == Proto::Tcp {
                let flags = rec.tcp_flags.unwrap_or_default();
                v.extend((0..TcpFlags::NAMES.len()).map(|i| if flags.is_set(i) { 1.0 } else { 0.0 }));
            }
        }
        Proto::Icmp => {
            v.push(f64::from(rec.icmp_type.unwrap_or(0)));
            v.push(f64::from(rec.icmp_code.unwrap_or(0)));
        }
        _ => {}
    }
    Ok(FeatureVector::new(v, schema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::Ipv4Addr;

    fn tcp(flags: u8, ts: f64) -> PacketRecord {
        let mut r = PacketRecord::transport(
            ts,
            Proto::Tcp,
            (Ipv4Addr::new(10, 0, 0, 1), 43512),
            (Ipv4Addr::new(10, 0, 0, 2), 5001),
            60,
        );
        r.tcp_flags = Some(TcpFlags(flags));
        r
    }

    #[test]
    fn stacks() {
        assert_eq!(infer_stack(&tcp(0, 0.0)).unwrap().to_string(), "ETHERNET_IP_TCP");
        let mut r = tcp(0, 0.0);
        r.proto = Proto::Arp;
        assert_eq!(infer_stack(&r).unwrap().to_string(), "ETHERNET_ARP");
        r.proto = Proto::Other;
        assert!(matches!(infer_stack(&r), Err(TraceError::UnsupportedStack(Proto::Other))));
    }

    #[test]
    fn syn_is_one_hot() {
        let v = preprocess(&tcp(TcpFlags::SYN, 10.0)).unwrap();
        assert_eq!(v.get("flag_syn"), Some(1.0));
        for name in ["flag_fin", "flag_rst", "flag_psh", "flag_ack", "flag_urg", "flag_ece", "flag_cwr"] {
            assert_eq!(v.get(name), Some(0.0), "{name}");
        }
        assert_eq!(v.get("dst_port"), Some(5001.0));
    }

    #[test]
    fn udp_has_no_flag_features() {
        let r = PacketRecord::transport(
            0.0,
            Proto::Udp,
            (Ipv4Addr::new(10, 0, 0, 1), 1),
            (Ipv4Addr::new(10, 0, 0, 2), 2),
            60,
        );
        let v = preprocess(&r).unwrap();
        assert!(v.schema.iter().all(|n| !n.starts_with("flag_")));
        assert_eq!(v.len(), v.schema.len());
    }

    #[test]
    fn midnight_is_time_zero() {
        let v = preprocess(&tcp(0, 86_400.0 * 19_000.0)).unwrap();
        assert_eq!(v.get("time_of_day"), Some(0.0));
    }
}
