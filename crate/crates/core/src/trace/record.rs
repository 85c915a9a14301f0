use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TraceError;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Transport or network protocol carried by a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Proto {
    Arp,
    Icmp,
    Igmp,
    Tcp,
    Udp,
    Other,
}

impl Proto {
    pub fn as_str(self) -> &'static str {
        match self {
            Proto::Arp => "ARP",
            Proto::Icmp => "ICMP",
            Proto::Igmp => "IGMP",
            Proto::Tcp => "TCP",
            Proto::Udp => "UDP",
            Proto::Other => "OTHER",
        }
    }

    /// True for protocols that carry source and destination ports.
    pub fn has_ports(self) -> bool {
        matches!(self, Proto::Tcp | Proto::Udp)
    }
}

impl fmt::Display for Proto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Proto {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ARP" => Ok(Proto::Arp),
            "ICMP" => Ok(Proto::Icmp),
            "IGMP" => Ok(Proto::Igmp),
            "TCP" => Ok(Proto::Tcp),
            "UDP" => Ok(Proto::Udp),
            "OTHER" => Ok(Proto::Other),
            _ => Err(format!("unknown protocol `{s}`")),
        }
    }
}

/// 48-bit Ethernet address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MacAddr(pub u64);

impl MacAddr {
    pub const MAX: u64 = (1 << 48) - 1;
}

impl fmt::Display for MacAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0.to_be_bytes();
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[2], b[3], b[4], b[5], b[6], b[7]
        )
    }
}

impl FromStr for MacAddr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut value = 0u64;
        let mut count = 0;
        for part in s.split(':') {
            if part.len() != 2 {
                return Err(format!("malformed MAC address `{s}`"));
            }
            let byte = u8::from_str_radix(part, 16).map_err(|_| format!("malformed MAC address `{s}`"))?;
            value = (value << 8) | u64::from(byte);
            count += 1;
        }
        if count != 6 {
            return Err(format!("malformed MAC address `{s}`"));
        }
        Ok(MacAddr(value))
    }
}

/// The eight standard TCP header flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
    pub const ECE: u8 = 0x40;
    pub const CWR: u8 = 0x80;

    /// Flag names in bit order, which is also the one-hot feature order.
    pub const NAMES: [&'static str; 8] = ["FIN", "SYN", "RST", "PSH", "ACK", "URG", "ECE", "CWR"];

    pub fn empty() -> Self {
        TcpFlags(0)
    }

    pub fn contains(self, bit: u8) -> bool {
        self.0 & bit == bit
    }

    /// Whether the flag at position `index` of [`TcpFlags::NAMES`] is set.
    pub fn is_set(self, index: usize) -> bool {
        self.0 & (1 << index) != 0
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, name) in Self::NAMES.iter().enumerate() {
            if self.is_set(i) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for TcpFlags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = 0u8;
        for name in s.split('|').filter(|n| !n.is_empty()) {
            let upper = name.trim().to_ascii_uppercase();
            let idx = Self::NAMES
                .iter()
                .position(|n| *n == upper)
                .ok_or_else(|| format!("unknown TCP flag `{name}`"))?;
            bits |= 1 << idx;
        }
        Ok(TcpFlags(bits))
    }
}

/// One layer of a protocol stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Ethernet,
    Arp,
    Ip,
    Icmp,
    Igmp,
    Tcp,
    Udp,
}

impl Layer {
    fn as_str(self) -> &'static str {
        match self {
            Layer::Ethernet => "ETHERNET",
            Layer::Arp => "ARP",
            Layer::Ip => "IP",
            Layer::Icmp => "ICMP",
            Layer::Igmp => "IGMP",
            Layer::Tcp => "TCP",
            Layer::Udp => "UDP",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ETHERNET" => Layer::Ethernet,
            "ARP" => Layer::Arp,
            "IP" => Layer::Ip,
            "ICMP" => Layer::Icmp,
            "IGMP" => Layer::Igmp,
            "TCP" => Layer::Tcp,
            "UDP" => Layer::Udp,
            _ => return None,
        })
    }
}

/// Ordered protocol layers of a packet, link layer first.
///
/// The canonical string form joins the layers with `_`, e.g. `ETHERNET_IP_TCP`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProtocolStack {
    layers: Vec<Layer>,
}

impl ProtocolStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self, TraceError> {
        match layers.first() {
            Some(Layer::Ethernet) => Ok(ProtocolStack { layers }),
            _ => Err(TraceError::InvalidStack(format!("{layers:?}"))),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Protocol at the top of the stack.
    pub fn proto(&self) -> Proto {
        match self.layers.last() {
            Some(Layer::Arp) => Proto::Arp,
            Some(Layer::Icmp) => Proto::Icmp,
            Some(Layer::Igmp) => Proto::Igmp,
            Some(Layer::Tcp) => Proto::Tcp,
            Some(Layer::Udp) => Proto::Udp,
            _ => Proto::Other,
        }
    }

    pub fn ethernet_arp() -> Self {
        ProtocolStack { layers: vec![Layer::Ethernet, Layer::Arp] }
    }

    pub fn ethernet_ip(top: Layer) -> Self {
        ProtocolStack { layers: vec![Layer::Ethernet, Layer::Ip, top] }
    }
}

impl fmt::Display for ProtocolStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                f.write_str("_")?;
            }
            f.write_str(l.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for ProtocolStack {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let layers = s
            .split('_')
            .map(|p| Layer::parse(p).ok_or_else(|| TraceError::InvalidStack(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        ProtocolStack::new(layers)
    }
}

impl Serialize for ProtocolStack {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProtocolStack {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One parsed packet header with its capture time.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    /// Seconds since the Unix epoch.
    pub ts: f64,
    /// Day of week, Monday = 0.
    pub day: u8,
    pub src_mac: MacAddr,
    pub dst_mac: MacAddr,
    pub eth_type: u16,
    /// -1 when untagged.
    pub vlan_id: i32,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub proto: Proto,
    pub ttl: u8,
    pub ip_len: u32,
    pub dscp: u8,
    pub ecn: u8,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    pub tcp_flags: Option<TcpFlags>,
    pub icmp_type: Option<u8>,
    pub icmp_code: Option<u8>,
    pub arp_op: Option<u16>,
}

impl PacketRecord {
    /// Seconds elapsed since UTC midnight.
    pub fn time_of_day(&self) -> f64 {
        self.ts.rem_euclid(SECONDS_PER_DAY)
    }

    /// Checks that exactly the protocol-applicable optional fields are present.
    pub fn validate(&self) -> Result<(), String> {
        if self.day > 6 {
            return Err(format!("day {} out of range 0-6", self.day));
        }
        if !self.ts.is_finite() {
            return Err("timestamp is not finite".into());
        }
        let ports = self.proto.has_ports();
        if ports != self.src_port.is_some() || ports != self.dst_port.is_some() {
            return Err(format!("port fields do not match protocol {}", self.proto));
        }
        if (self.proto == Proto::Tcp) != self.tcp_flags.is_some() {
            return Err(format!("tcp_flags do not match protocol {}", self.proto));
        }
        let icmp = self.proto == Proto::Icmp;
        if icmp != self.icmp_type.is_some() || icmp != self.icmp_code.is_some() {
            return Err(format!("icmp fields do not match protocol {}", self.proto));
        }
        if (self.proto == Proto::Arp) != self.arp_op.is_some() {
            return Err(format!("arp_op does not match protocol {}", self.proto));
        }
        Ok(())
    }

    /// A TCP or UDP record template with zeroed optional header fields.
    pub fn transport(
        ts: f64,
        proto: Proto,
        src: (Ipv4Addr, u16),
        dst: (Ipv4Addr, u16),
        ip_len: u32,
    ) -> Self {
        PacketRecord {
            ts,
            day: day_of_week(ts),
            src_mac: mac_for(src.0),
            dst_mac: mac_for(dst.0),
            eth_type: 0x0800,
            vlan_id: -1,
            src_ip: src.0,
            dst_ip: dst.0,
            proto,
            ttl: 64,
            ip_len,
            dscp: 0,
            ecn: 0,
            src_port: Some(src.1),
            dst_port: Some(dst.1),
            tcp_flags: (proto == Proto::Tcp).then(TcpFlags::empty),
            icmp_type: None,
            icmp_code: None,
            arp_op: None,
        }
    }
}

/// Day of week for a Unix timestamp in UTC, Monday = 0.
pub fn day_of_week(ts: f64) -> u8 {
    let days = (ts / SECONDS_PER_DAY).floor() as i64;
    // 1970-01-01 was a Thursday.
    (days + 3).rem_euclid(7) as u8
}

/// Locally administered MAC derived from an IPv4 address.
pub fn mac_for(ip: Ipv4Addr) -> MacAddr {
    MacAddr(0x02_00_0000_0000 | u64::from(u32::from(ip)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mac_round_trip() {
        let mac: MacAddr = "aa:bb:cc:00:11:ff".parse().unwrap();
        assert_eq!(mac.to_string(), "aa:bb:cc:00:11:ff");
        assert!("aa:bb".parse::<MacAddr>().is_err());
    }

    #[test]
    fn flags_parse_and_print_in_bit_order() {
        let f: TcpFlags = "ACK|SYN".parse().unwrap();
        assert!(f.contains(TcpFlags::SYN) && f.contains(TcpFlags::ACK));
        assert_eq!(f.to_string(), "SYN|ACK");
        assert!("SYN|BOGUS".parse::<TcpFlags>().is_err());
    }

    #[test]
    fn epoch_was_thursday() {
        assert_eq!(day_of_week(0.0), 3);
        assert_eq!(day_of_week(86_400.0 * 4.0), 0);
    }

    #[test]
    fn stack_string_form() {
        let s = ProtocolStack::ethernet_ip(Layer::Tcp);
        assert_eq!(s.to_string(), "ETHERNET_IP_TCP");
        assert_eq!("ETHERNET_ARP".parse::<ProtocolStack>().unwrap(), ProtocolStack::ethernet_arp());
        assert!("IP_TCP".parse::<ProtocolStack>().is_err());
    }
}
