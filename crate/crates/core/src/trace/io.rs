//! CSV readers and writers for packet traces, flow statistics and
//! application mappings.

use std::io::{Read, Write};
use std::net::Ipv4Addr;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::{day_of_week, MacAddr, PacketRecord, Proto, TcpFlags};
use super::TraceError;

/// Header of the packet trace format, in column order.
pub const TRACE_COLUMNS: [&str; 19] = [
    "ts", "day", "src_mac", "dst_mac", "eth_type", "vlan_id", "src_ip", "dst_ip", "proto", "ttl",
    "ip_len", "dscp", "ecn", "src_port", "dst_port", "tcp_flags", "icmp_type", "icmp_code", "arp_op",
];

/// Optional trailing column carrying ground truth for evaluation traces.
pub const LABEL_COLUMN: &str = "label";

// Rows may omit the trailing icmp_type/icmp_code/arp_op cells.
const MIN_TRACE_CELLS: usize = 16;

pub const FLOW_STATS_COLUMNS: [&str; 3] = ["t", "packets_cum", "bytes_cum"];

pub const APP_MAPPING_COLUMNS: [&str; 7] =
    ["ts", "host_id", "app_name", "proto", "local_port", "remote_ip", "remote_port"];

/// Ground-truth label of an evaluation packet. Never seen by the models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Abnormal,
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benign" | "normal" => Ok(Label::Benign),
            "abnormal" | "malicious" | "anomalous" => Ok(Label::Abnormal),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Abnormal => "abnormal",
        }
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(source)
}

fn csv_err(e: csv::Error) -> TraceError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    TraceError::Parse { line, message: e.to_string() }
}

fn opt<T: FromStr>(cell: &str, name: &str) -> Result<Option<T>, String> {
    if cell.is_empty() {
        Ok(None)
    } else {
        cell.parse::<T>().map(Some).map_err(|_| format!("invalid {name} `{cell}`"))
    }
}

fn req<T: FromStr>(cell: &str, name: &str) -> Result<T, String> {
    opt(cell, name)?.ok_or_else(|| format!("missing {name}"))
}

fn parse_record(cells: &csv::StringRecord) -> Result<PacketRecord, String> {
    let cell = |i: usize| cells.get(i).unwrap_or("");
    let ts: f64 = req(cell(0), "ts")?;
    if !ts.is_finite() {
        return Err(format!("invalid ts `{}`", cell(0)));
    }
    let day = match opt::<u8>(cell(1), "day")? {
        Some(d) => d,
        None => day_of_week(ts),
    };
    let proto: Proto = req(cell(8), "proto")?;
    let tcp_flags = if proto == Proto::Tcp {
        Some(cell(15).parse::<TcpFlags>()?)
    } else {
        opt::<TcpFlags>(cell(15), "tcp_flags")?
    };
    let rec = PacketRecord {
        ts,
        day,
        src_mac: req::<MacAddr>(cell(2), "src_mac")?,
        dst_mac: req::<MacAddr>(cell(3), "dst_mac")?,
        eth_type: req(cell(4), "eth_type")?,
        vlan_id: req(cell(5), "vlan_id")?,
        src_ip: req(cell(6), "src_ip")?,
        dst_ip: req(cell(7), "dst_ip")?,
        proto,
        ttl: req(cell(9), "ttl")?,
        ip_len: req(cell(10), "ip_len")?,
        dscp: req(cell(11), "dscp")?,
        ecn: req(cell(12), "ecn")?,
        src_port: opt(cell(13), "src_port")?,
        dst_port: opt(cell(14), "dst_port")?,
        tcp_flags,
        icmp_type: opt(cell(16), "icmp_type")?,
        icmp_code: opt(cell(17), "icmp_code")?,
        arp_op: opt(cell(18), "arp_op")?,
    };
    rec.validate()?;
    Ok(rec)
}

fn read_trace<R: Read>(source: R) -> Result<Vec<(PacketRecord, Option<Label>)>, TraceError> {
    let mut reader = csv_reader(source);
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.map_err(csv_err)?,
        None => return Err(TraceError::MissingHeader),
    };
    let names: Vec<&str> = header.iter().collect();
    let labeled = match names.as_slice() {
        n if n == TRACE_COLUMNS => false,
        [rest @ .., last] if rest == TRACE_COLUMNS && *last == LABEL_COLUMN => true,
        _ => return Err(TraceError::BadHeader(names.join(","))),
    };

    let mut out = Vec::new();
    let mut prev_ts = f64::NEG_INFINITY;
    for row in rows {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row.get(0) == Some("") {
            continue;
        }
        let expected_max = TRACE_COLUMNS.len() + usize::from(labeled);
        if row.len() < MIN_TRACE_CELLS || row.len() > expected_max {
            return Err(TraceError::Parse { line, message: format!("expected {expected_max} columns, found {}", row.len()) });
        }
        let rec = parse_record(&row).map_err(|message| TraceError::Parse { line, message })?;
        if rec.ts < prev_ts {
            return Err(TraceError::NonMonotonic { line, prev: prev_ts, ts: rec.ts });
        }
        prev_ts = rec.ts;
        let label = if labeled && row.len() == expected_max {
            opt::<Label>(row.get(TRACE_COLUMNS.len()).unwrap_or(""), "label")
                .map_err(|message| TraceError::Parse { line, message })?
        } else {
            None
        };
        out.push((rec, label));
    }
    Ok(out)
}

/// Parses a packet trace, one record per non-header line, preserving order.
pub fn parse_trace<R: Read>(source: R) -> Result<Vec<PacketRecord>, TraceError> {
    Ok(read_trace(source)?.into_iter().map(|(r, _)| r).collect())
}

/// Parses a packet trace that may carry a trailing `label` column.
pub fn parse_labeled_trace<R: Read>(source: R) -> Result<Vec<(PacketRecord, Option<Label>)>, TraceError> {
    read_trace(source)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Canonical CSV line (without newline) for a record.
pub fn record_to_line(rec: &PacketRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        rec.ts,
        rec.day,
        rec.src_mac,
        rec.dst_mac,
        rec.eth_type,
        rec.vlan_id,
        rec.src_ip,
        rec.dst_ip,
        rec.proto,
        rec.ttl,
        rec.ip_len,
        rec.dscp,
        rec.ecn,
        fmt_opt(rec.src_port),
        fmt_opt(rec.dst_port),
        fmt_opt(rec.tcp_flags),
        fmt_opt(rec.icmp_type),
        fmt_opt(rec.icmp_code),
        fmt_opt(rec.arp_op),
    )
}

pub fn write_trace<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a PacketRecord>,
) -> std::io::Result<()> {
    writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
    for rec in records {
        writeln!(out, "{}", record_to_line(rec))?;
    }
    Ok(())
}

pub fn write_labeled_trace<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = (&'a PacketRecord, Label)>,
) -> std::io::Result<()> {
    writeln!(out, "{},{}", TRACE_COLUMNS.join(","), LABEL_COLUMN)?;
    for (rec, label) in records {
        writeln!(out, "{},{}", record_to_line(rec), label.as_str())?;
    }
    Ok(())
}

/// One flow-statistics query result: cumulative counters at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowStatSample {
    pub t: f64,
    pub packets_cum: u64,
    pub bytes_cum: u64,
}

fn expect_header(
    rows: &mut csv::StringRecordsIter<'_, impl Read>,
    columns: &[&str],
) -> Result<bool, TraceError> {
    match rows.next() {
        None => Ok(false),
        Some(h) => {
            let h = h.map_err(csv_err)?;
            let names: Vec<&str> = h.iter().collect();
            if names != columns {
                return Err(TraceError::BadHeader(names.join(",")));
            }
            Ok(true)
        }
    }
}

pub fn parse_flow_stats<R: Read>(source: R) -> Result<Vec<FlowStatSample>, TraceError> {
    let mut reader = csv_reader(source);
    let mut rows = reader.records();
    if !expect_header(&mut rows, &FLOW_STATS_COLUMNS)? {
        return Err(TraceError::MissingHeader);
    }
    let mut out: Vec<FlowStatSample> = Vec::new();
    for row in rows {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let parse = || -> Result<FlowStatSample, String> {
            Ok(FlowStatSample {
                t: req(row.get(0).unwrap_or(""), "t")?,
                packets_cum: req(row.get(1).unwrap_or(""), "packets_cum")?,
                bytes_cum: req(row.get(2).unwrap_or(""), "bytes_cum")?,
            })
        };
        let sample = parse().map_err(|message| TraceError::Parse { line, message })?;
        if let Some(prev) = out.last() {
            if sample.t < prev.t {
                return Err(TraceError::NonMonotonic { line, prev: prev.t, ts: sample.t });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_flow_stats<W: Write>(mut out: W, samples: &[FlowStatSample]) -> std::io::Result<()> {
    writeln!(out, "{}", FLOW_STATS_COLUMNS.join(","))?;
    for s in samples {
        writeln!(out, "{},{},{}", s.t, s.packets_cum, s.bytes_cum)?;
    }
    Ok(())
}

/// A host-side report that `app_name` owns a socket from `ts` onward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppMappingEntry {
    pub ts: f64,
    pub host_id: String,
    pub app_name: String,
    pub proto: Proto,
    pub local_port: Option<u16>,
    pub remote_ip: Option<Ipv4Addr>,
    pub remote_port: Option<u16>,
}

pub fn parse_app_mapping<R: Read>(source: R) -> Result<Vec<AppMappingEntry>, TraceError> {
    let mut reader = csv_reader(source);
    let mut rows = reader.records();
    if !expect_header(&mut rows, &APP_MAPPING_COLUMNS)? {
        return Err(TraceError::MissingHeader);
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let cell = |i: usize| row.get(i).unwrap_or("");
        let parse = || -> Result<AppMappingEntry, String> {
            let host_id = cell(1).to_string();
            let app_name = cell(2).to_string();
            if host_id.is_empty() || app_name.is_empty() {
                return Err("host_id and app_name are required".into());
            }
            Ok(AppMappingEntry {
                ts: req(cell(0), "ts")?,
                host_id,
                app_name,
                proto: req(cell(3), "proto")?,
                local_port: opt(cell(4), "local_port")?,
                remote_ip: opt(cell(5), "remote_ip")?,
                remote_port: opt(cell(6), "remote_port")?,
            })
        };
        out.push(parse().map_err(|message| TraceError::Parse { line, message })?);
    }
    Ok(out)
}

pub fn write_app_mapping<W: Write>(mut out: W, entries: &[AppMappingEntry]) -> std::io::Result<()> {
    writeln!(out, "{}", APP_MAPPING_COLUMNS.join(","))?;
    for e in entries {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.ts,
            e.host_id,
            e.app_name,
            e.proto,
            fmt_opt(e.local_port),
            fmt_opt(e.remote_ip),
            fmt_opt(e.remote_port)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "ts,day,src_mac,dst_mac,eth_type,vlan_id,src_ip,dst_ip,proto,ttl,ip_len,dscp,ecn,src_port,dst_port,tcp_flags,icmp_type,icmp_code,arp_op";

    #[test]
    fn parses_tcp_line() {
        let body = format!(
            "{HEADER}\n1700000000.5,2,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,TCP,64,60,0,0,43512,5001,SYN\n"
        );
        let recs = parse_trace(body.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].proto, Proto::Tcp);
        assert_eq!(recs[0].dst_port, Some(5001));
        assert_eq!(recs[0].src_port, Some(43512));
        assert!(recs[0].tcp_flags.unwrap().contains(TcpFlags::SYN));
        assert_eq!(recs[0].day, 2);
    }

    #[test]
    fn empty_body_is_empty_list() {
        assert!(parse_trace(format!("{HEADER}\n").as_bytes()).unwrap().is_empty());
        assert!(matches!(parse_trace("".as_bytes()), Err(TraceError::MissingHeader)));
    }

    #[test]
    fn decreasing_ts_is_rejected_at_its_line() {
        let body = format!(
            "{HEADER}\n10,,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,UDP,64,60,0,0,1,2,,,,\n9,,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,UDP,64,60,0,0,1,2,,,,\n"
        );
        match parse_trace(body.as_bytes()) {
            Err(TraceError::NonMonotonic { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let body = format!(
            "{HEADER}\n10,,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,UDP,64,sixty,0,0,1,2,,,,\n"
        );
        match parse_trace(body.as_bytes()) {
            Err(TraceError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("ip_len"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blank_day_is_derived_from_ts() {
        let body = format!(
            "{HEADER}\n0,,aa:00:00:00:00:01,bb:00:00:00:00:02,2054,-1,10.0.0.1,10.0.0.2,ARP,0,28,0,0,,,,,,1\n"
        );
        let recs = parse_trace(body.as_bytes()).unwrap();
        assert_eq!(recs[0].day, 3);
        assert_eq!(recs[0].arp_op, Some(1));
    }

    #[test]
    fn inapplicable_fields_are_rejected() {
        // UDP record carrying TCP flags.
        let body = format!(
            "{HEADER}\n0,,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,UDP,64,60,0,0,1,2,SYN,,,\n"
        );
        assert!(matches!(parse_trace(body.as_bytes()), Err(TraceError::Parse { line: 2, .. })));
    }

    #[test]
    fn labeled_trace_reads_labels() {
        let body = format!(
            "{HEADER},label\n0,,aa:00:00:00:00:01,bb:00:00:00:00:02,2048,-1,10.0.0.1,10.0.0.2,UDP,64,60,0,0,1,2,,,,,abnormal\n"
        );
        let recs = parse_labeled_trace(body.as_bytes()).unwrap();
        assert_eq!(recs[0].1, Some(Label::Abnormal));
    }

    #[test]
    fn flow_stats_and_mapping_round_trip() {
        let stats = vec![
            FlowStatSample { t: 0.0, packets_cum: 0, bytes_cum: 0 },
            FlowStatSample { t: 5.0, packets_cum: 10, bytes_cum: 15000 },
        ];
        let mut buf = Vec::new();
        write_flow_stats(&mut buf, &stats).unwrap();
        assert_eq!(parse_flow_stats(buf.as_slice()).unwrap(), stats);

        let entries = vec![AppMappingEntry {
            ts: 1.5,
            host_id: "h1".into(),
            app_name: "iperf".into(),
            proto: Proto::Tcp,
            local_port: Some(40000),
            remote_ip: Some(Ipv4Addr::new(10, 0, 0, 2)),
            remote_port: Some(5001),
        }];
        let mut buf = Vec::new();
        write_app_mapping(&mut buf, &entries).unwrap();
        assert_eq!(parse_app_mapping(buf.as_slice()).unwrap(), entries);
    }
}
