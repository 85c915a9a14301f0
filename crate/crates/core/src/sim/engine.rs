use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::flow_table::FlowTable;
use super::scenario::{Mode, ScenarioSpec, SimParams};
use super::topology::{Peer, PortNo, SwitchId, Topology};
use super::workload::{expand, Traffic};
use super::SimError;
use crate::arl::{ArlState, Decision};
use crate::graph::{aggregate_stats, AppResolver, CrGraph, EdgeKey};
use crate::mining::{Action, FlowRule, MatchField, RuleBook};
use crate::rtfsl::{RtfslMonitor, RtfslState, Verdict, VerdictRecord};
use crate::trace::{infer_stack, preprocess, FlowStatSample, PacketRecord};

/// Cookies of controller-built rules start here, above any mined rule number.
const DYNAMIC_COOKIE_BASE: u64 = 1_000_000;

/// Trained graph and mined rules used by the zero-trust controller.
#[derive(Debug, Clone)]
pub struct Models {
    pub graph: CrGraph,
    pub rules: RuleBook,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fate {
    InFlight,
    Delivered,
    Denied,
    DroppedUnsupported,
    DroppedUnroutable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HostTraffic {
    pub sent_packets: u64,
    pub sent_bytes: u64,
    pub received_packets: u64,
    pub received_bytes: u64,
    /// Received bits per second over the host's active receive span.
    pub throughput_bps: f64,
}

/// Deterministic outcome counters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub mode: Mode,
    pub packet_in_count: u64,
    pub packet_out_count: u64,
    pub flow_mod_add: u64,
    pub flow_mod_remove: u64,
    /// Peak number of installed rules per switch, default rule excluded.
    pub rules_per_switch: BTreeMap<SwitchId, usize>,
    pub injected: u64,
    pub delivered: u64,
    pub denied: u64,
    pub dropped_unsupported: u64,
    pub dropped_unroutable: u64,
    pub fallback_rules: u64,
    pub anomalies: u64,
    pub revoked_edges: Vec<String>,
    pub hosts: BTreeMap<String, HostTraffic>,
}

impl SimMetrics {
    pub fn max_rules_per_switch(&self) -> usize {
        self.rules_per_switch.values().copied().max().unwrap_or(0)
    }

    /// Every injected packet has exactly one final fate.
    pub fn conserved(&self) -> bool {
        self.injected == self.delivered + self.denied + self.dropped_unsupported + self.dropped_unroutable
    }
}

/// Wall-clock controller cost; kept apart from the deterministic metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub controller_processing_seconds: f64,
    pub packet_in_handled: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub ts: f64,
    pub kind: &'static str,
    pub switch: Option<SwitchId>,
    pub detail: String,
}

/// One installation of a rule on a switch. `installed_step`/`removed_step`
/// order it against [`Arrival`] steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleLifetime {
    pub switch: SwitchId,
    pub rule: FlowRule,
    pub instance: u64,
    pub installed_step: u64,
    pub removed_step: Option<u64>,
    pub packets: u64,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub step: u64,
    pub t: f64,
    pub switch: SwitchId,
    pub packet: usize,
}

/// A flow-statistics query and the per-rule `(cookie, packets, bytes)` it summed.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRecord {
    pub edge: EdgeKey,
    pub switch: SwitchId,
    pub per_rule: Vec<(u64, u64, u64)>,
    pub sample: FlowStatSample,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub metrics: SimMetrics,
    pub timing: TimingReport,
    pub events: Vec<EventRecord>,
    pub lifetimes: Vec<RuleLifetime>,
    pub arrivals: Vec<Arrival>,
    pub packets: Vec<PacketRecord>,
    pub fates: Vec<Fate>,
    pub stats: Vec<StatRecord>,
    /// Graph built by a training run, datasets sorted by time.
    pub graph: Option<CrGraph>,
    /// Packet copies delivered to mirror ports.
    pub mirror: Vec<PacketRecord>,
    pub verdicts: BTreeMap<EdgeKey, Vec<VerdictRecord>>,
}

impl SimOutcome {
    /// Event log as CSV `ts,kind,switch,detail`.
    pub fn write_events<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ts,kind,switch,detail")?;
        for e in &self.events {
            let sw = e.switch.map(|s| s.to_string()).unwrap_or_default();
            writeln!(out, "{:.6},{},{},\"{}\"", e.ts, e.kind, sw, e.detail.replace('"', "'"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    Inject(usize),
    Arrive { switch: SwitchId, packet: usize },
    PacketIn { switch: SwitchId, packet: usize },
    StatsTick,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event; seq breaks ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct ZtState<'m> {
    models: &'m Models,
    monitors: BTreeMap<EdgeKey, RtfslMonitor>,
    revoked: BTreeSet<EdgeKey>,
}

enum Controller<'m> {
    Fwd,
    Train { graph: CrGraph },
    Zt(ZtState<'m>),
}

struct Engine<'m> {
    topo: Topology,
    params: SimParams,
    resolver: AppResolver,
    traffic: Traffic,
    tables: BTreeMap<SwitchId, FlowTable>,
    queue: BinaryHeap<Event>,
    seq: u64,
    step: u64,
    instance: u64,
    next_cookie: u64,
    controller: Controller<'m>,
    /// Cookies whose counters make up each edge's statistics.
    edge_cookies: BTreeMap<EdgeKey, BTreeSet<u64>>,
    live: BTreeMap<(SwitchId, u64), usize>,
    metrics: SimMetrics,
    timing: TimingReport,
    events: Vec<EventRecord>,
    lifetimes: Vec<RuleLifetime>,
    arrivals: Vec<Arrival>,
    packets: Vec<PacketRecord>,
    fates: Vec<Fate>,
    stats: Vec<StatRecord>,
    mirror: Vec<PacketRecord>,
    end_time: f64,
    first_rx: BTreeMap<usize, (f64, f64)>,
}

impl<'m> Engine<'m> {
    fn push(&mut self, t: f64, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event { t, seq: self.seq, kind });
    }

    fn log(&mut self, ts: f64, kind: &'static str, switch: Option<SwitchId>, detail: String) {
        self.events.push(EventRecord { ts, kind, switch, detail });
    }

    fn next_step(&mut self) -> u64 {
        self.step += 1;
        self.step
    }

    fn install(&mut self, t: f64, switch: SwitchId, mut rule: FlowRule, egress: PortNo, mirror: bool) {
        rule.idle_timeout = self.params.idle_timeout;
        rule.hard_timeout = self.params.hard_timeout;
        rule.actions = vec![Action::Forward(egress)];
        if mirror {
            rule.actions.push(Action::Mirror(self.params.mirror_port));
        }
        self.instance += 1;
        let instance = self.instance;
        let table = self.tables.get_mut(&switch).expect("known switch");
        if !table.install(rule.clone(), t, instance) {
            return;
        }
        let count = table.rule_count();
        let step = self.next_step();
        self.metrics.flow_mod_add += 1;
        let peak = self.metrics.rules_per_switch.entry(switch).or_default();
        *peak = (*peak).max(count);
        self.log(t, "flow_mod_add", Some(switch), format!("{} cookie={}", rule.id, rule.cookie));
        self.live.insert((switch, rule.cookie), self.lifetimes.len());
        self.lifetimes.push(RuleLifetime {
            switch,
            rule,
            instance,
            installed_step: step,
            removed_step: None,
            packets: 0,
            bytes: 0,
        });
    }

    fn close_lifetime(&mut self, switch: SwitchId, cookie: u64, packets: u64, bytes: u64) {
        let step = self.next_step();
        if let Some(i) = self.live.remove(&(switch, cookie)) {
            let l = &mut self.lifetimes[i];
            l.removed_step = Some(step);
            l.packets = packets;
            l.bytes = bytes;
        }
    }

    /// Copies the counters of rules still installed at the end into their lifetimes.
    fn finalize(&mut self) {
        for (&(sw, cookie), &i) in &self.live {
            if let Some(e) = self.tables[&sw].get(cookie) {
                self.lifetimes[i].packets = e.packets;
                self.lifetimes[i].bytes = e.bytes;
            }
        }
    }

    fn expire_all(&mut self, t: f64) {
        let switches: Vec<SwitchId> = self.tables.keys().copied().collect();
        for sw in switches {
            let expired = self.tables.get_mut(&sw).expect("known switch").expire(t);
            for e in expired {
                self.close_lifetime(sw, e.rule.cookie, e.packets, e.bytes);
                self.log(t, "expire", Some(sw), format!("{} cookie={}", e.rule.id, e.rule.cookie));
            }
        }
    }

    fn remove_everywhere(&mut self, t: f64, cookie: u64) {
        let switches: Vec<SwitchId> = self.tables.keys().copied().collect();
        for sw in switches {
            if let Some(e) = self.tables.get_mut(&sw).expect("known switch").remove(cookie) {
                self.metrics.flow_mod_remove += 1;
                self.close_lifetime(sw, cookie, e.packets, e.bytes);
                self.log(t, "flow_mod_remove", Some(sw), format!("{} cookie={}", e.rule.id, cookie));
            }
        }
    }

    fn set_fate(&mut self, packet: usize, fate: Fate) {
        debug_assert_eq!(self.fates[packet], Fate::InFlight);
        self.fates[packet] = fate;
        match fate {
            Fate::Delivered => self.metrics.delivered += 1,
            Fate::Denied => self.metrics.denied += 1,
            Fate::DroppedUnsupported => self.metrics.dropped_unsupported += 1,
            Fate::DroppedUnroutable => self.metrics.dropped_unroutable += 1,
            Fate::InFlight => {}
        }
    }

    /// Sends `packet` out of `switch` on `port`.
    fn emit(&mut self, t: f64, switch: SwitchId, port: PortNo, packet: usize) {
        match self.topo.peer(switch, port) {
            Some(Peer::Switch(next, _)) => {
                let at = t + self.params.hop_latency;
                self.push(at, EventKind::Arrive { switch: next, packet });
            }
            Some(Peer::Host(h)) => {
                let pkt = &self.packets[packet];
                if self.topo.hosts[h].addr == pkt.dst_ip {
                    let len = u64::from(pkt.ip_len);
                    let id = self.topo.hosts[h].id.clone();
                    let host = self.metrics.hosts.entry(id).or_default();
                    host.received_packets += 1;
                    host.received_bytes += len;
                    let span = self.first_rx.entry(h).or_insert((t, t));
                    span.1 = t;
                    self.set_fate(packet, Fate::Delivered);
                } else {
                    self.set_fate(packet, Fate::DroppedUnroutable);
                }
            }
            None => self.set_fate(packet, Fate::DroppedUnroutable),
        }
    }

    fn arrive(&mut self, t: f64, switch: SwitchId, packet: usize) {
        let step = self.next_step();
        self.arrivals.push(Arrival { step, t, switch, packet });
        let pkt = self.packets[packet].clone();
        let table = self.tables.get_mut(&switch).expect("known switch");
        let actions = table.lookup(&pkt, t).rule.actions.clone();
        for action in actions {
            match action {
                Action::ToController => {
                    let at = t + self.params.controller_latency;
                    self.push(at, EventKind::PacketIn { switch, packet });
                }
                Action::Forward(port) => self.emit(t, switch, port, packet),
                Action::Mirror(_) => {
                    self.mirror.push(pkt.clone());
                    if let Controller::Train { graph } = &mut self.controller {
                        // Stacks were checked when the rule was installed.
                        let _ = graph.observe(&pkt, &self.resolver);
                    }
                }
            }
        }
    }

    fn alloc_cookie(&mut self) -> u64 {
        self.next_cookie += 1;
        self.next_cookie
    }

    /// Installs a five-tuple rule for `pkt` along `route`; the first hop optionally mirrors.
    fn install_five_tuple(&mut self, t: f64, pkt: &PacketRecord, route: &[(SwitchId, PortNo)], mirror_first: bool) -> Option<u64> {
        let probe = FlowRule::five_tuple("probe", 0, pkt);
        let (first, _) = route[0];
        if let Some(existing) =
            self.tables[&first].entries().iter().find(|e| e.rule.matches == probe.matches && !e.is_default())
        {
            return Some(existing.rule.cookie);
        }
        let cookie = self.alloc_cookie();
        let rule = FlowRule::five_tuple(format!("f{cookie}"), cookie, pkt);
        for (i, &(sw, port)) in route.iter().enumerate() {
            self.install(t, sw, rule.clone(), port, mirror_first && i == 0);
        }
        Some(cookie)
    }

    fn packet_in(&mut self, t: f64, switch: SwitchId, packet: usize) {
        let started = Instant::now();
        self.metrics.packet_in_count += 1;
        let pkt = self.packets[packet].clone();
        self.log(t, "packet_in", Some(switch), format!("{} {}:{:?} -> {}:{:?}", pkt.proto, pkt.src_ip, pkt.src_port, pkt.dst_ip, pkt.dst_port));
        let Some(dst) = self.topo.host_by_addr(pkt.dst_ip) else {
            self.set_fate(packet, Fate::DroppedUnroutable);
            return self.finish_timing(started);
        };
        let Some(route) = self.topo.route(switch, dst) else {
            self.set_fate(packet, Fate::DroppedUnroutable);
            return self.finish_timing(started);
        };
        match self.controller {
            Controller::Fwd => {
                self.install_five_tuple(t, &pkt, &route[..1], false);
            }
            Controller::Train { .. } => {
                let key = match &mut self.controller {
                    Controller::Train { graph } => graph.observe(&pkt, &self.resolver),
                    _ => unreachable!(),
                };
                let Ok(key) = key else {
                    self.log(t, "drop_unsupported", Some(switch), pkt.proto.to_string());
                    self.set_fate(packet, Fate::DroppedUnsupported);
                    return self.finish_timing(started);
                };
                let at_edge = self.topo.host_by_addr(pkt.src_ip).is_some_and(|h| self.topo.hosts[h].switch == switch);
                if let Some(cookie) = self.install_five_tuple(t, &pkt, &route, at_edge) {
                    self.edge_cookies.entry(key).or_default().insert(cookie);
                }
            }
            Controller::Zt(_) => {
                if !self.zt_approve(t, switch, &pkt, &route, packet) {
                    return self.finish_timing(started);
                }
            }
        }
        self.metrics.packet_out_count += 1;
        self.log(t, "packet_out", Some(switch), format!("port={}", route[0].1));
        self.emit(t, switch, route[0].1, packet);
        self.finish_timing(started);
    }

    fn finish_timing(&mut self, started: Instant) {
        self.timing.controller_processing_seconds += started.elapsed().as_secs_f64();
        self.timing.packet_in_handled += 1;
    }

    fn deny(&mut self, t: f64, switch: SwitchId, packet: usize, reason: String) -> bool {
        self.log(t, "deny", Some(switch), reason);
        self.set_fate(packet, Fate::Denied);
        false
    }

    /// Access decision plus proactive deployment. Returns whether the packet may proceed.
    fn zt_approve(&mut self, t: f64, switch: SwitchId, pkt: &PacketRecord, route: &[(SwitchId, PortNo)], packet: usize) -> bool {
        let Controller::Zt(zt) = &self.controller else { unreachable!() };
        let models = zt.models;
        let Ok(stack) = infer_stack(pkt) else {
            self.log(t, "drop_unsupported", Some(switch), pkt.proto.to_string());
            self.set_fate(packet, Fate::DroppedUnsupported);
            return false;
        };
        let (src, dst) = self.resolver.endpoints(pkt);
        let key = EdgeKey { src, dst, stack };
        if zt.revoked.contains(&key) {
            return self.deny(t, switch, packet, format!("revoked edge {key}"));
        }
        let Some(edge) = models.graph.lookup(&key.src, &key.dst, &key.stack) else {
            return self.deny(t, switch, packet, format!("no edge {key}"));
        };
        let Some(arl) = edge.arl.as_ref().filter(|a| a.state() == ArlState::Execute) else {
            return self.deny(t, switch, packet, format!("no trained access model for {key}"));
        };
        let decision = preprocess(pkt).map_err(|e| e.to_string()).and_then(|v| arl.decide(&v).map_err(|e| e.to_string()));
        match decision {
            Ok(Decision::Allow) => {}
            Ok(Decision::Deny(score)) => return self.deny(t, switch, packet, format!("access score {score:.3e} on {key}")),
            Err(e) => return self.deny(t, switch, packet, e),
        }

        let deployment: Vec<FlowRule> = models.rules.deployment_set(&key).into_iter().cloned().collect();
        for rule in &deployment {
            let (Some(src), Some(dst)) = (rule_host(&self.topo, rule, MatchField::SrcAddr), rule_host(&self.topo, rule, MatchField::DstAddr)) else {
                continue;
            };
            let Some(path) = self.topo.host_path(src, dst) else { continue };
            for (sw, port) in path {
                self.install(t, sw, rule.clone(), port, false);
            }
        }
        let own: Vec<u64> = models.rules.edge_rules(&key).iter().map(|r| r.cookie).collect();
        self.edge_cookies.entry(key.clone()).or_default().extend(own);
        if !deployment.iter().any(|r| r.matches(pkt)) {
            self.metrics.fallback_rules += 1;
            if let Some(cookie) = self.install_five_tuple(t, pkt, route, false) {
                self.edge_cookies.entry(key.clone()).or_default().insert(cookie);
            }
        }
        if let Controller::Zt(zt) = &mut self.controller {
            if !zt.monitors.contains_key(&key) {
                if let Some(model) = edge.rtfsl.as_ref().filter(|m| m.state() == RtfslState::Execute) {
                    let monitor = RtfslMonitor::new(model.clone()).expect("model in execute");
                    zt.monitors.insert(key.clone(), monitor);
                }
            }
        }
        true
    }

    fn edge_switch(&self, key: &EdgeKey) -> Option<SwitchId> {
        let h = self.topo.host_by_id(&key.src.host_id)?;
        Some(self.topo.hosts[h].switch)
    }

    fn stats_tick(&mut self, t: f64) {
        let keys: Vec<EdgeKey> = self.edge_cookies.keys().cloned().collect();
        for key in keys {
            let Some(sw) = self.edge_switch(&key) else { continue };
            let cookies = &self.edge_cookies[&key];
            let per_rule: Vec<(u64, u64, u64)> = self.tables[&sw]
                .entries()
                .iter()
                .filter(|e| cookies.contains(&e.rule.cookie))
                .map(|e| (e.rule.cookie, e.packets, e.bytes))
                .collect();
            if per_rule.is_empty() {
                continue;
            }
            let counters: Vec<(u64, u64)> = per_rule.iter().map(|&(_, p, b)| (p, b)).collect();
            let (packets_cum, bytes_cum) = aggregate_stats(&counters);
            let sample = FlowStatSample { t, packets_cum, bytes_cum };
            self.stats.push(StatRecord { edge: key.clone(), switch: sw, per_rule, sample });
            match &mut self.controller {
                Controller::Train { graph } => {
                    if let Some(edge) = graph.edge_mut(&key) {
                        edge.flow_stats.push(sample);
                    }
                }
                Controller::Zt(zt) => {
                    let verdict = zt.monitors.get_mut(&key).map(|m| m.step(sample));
                    if let Some(Ok(Verdict::Anomalous(channel, d))) = verdict {
                        zt.revoked.insert(key.clone());
                        self.metrics.anomalies += 1;
                        self.metrics.revoked_edges.push(key.to_string());
                        self.log(t, "anomaly", Some(sw), format!("{key} {} distance={d:.4}", channel.as_str()));
                        let cookies: Vec<u64> = self.edge_cookies[&key].iter().copied().collect();
                        for c in cookies {
                            self.remove_everywhere(t, c);
                        }
                    }
                }
                Controller::Fwd => {}
            }
        }
        let next = t + self.params.stats_interval;
        if next <= self.end_time {
            self.push(next, EventKind::StatsTick);
        }
    }

    fn run(&mut self) {
        while let Some(ev) = self.queue.pop() {
            self.expire_all(ev.t);
            match ev.kind {
                EventKind::Inject(i) => {
                    let inj = &self.traffic.injections[i];
                    let (host, pkt) = (inj.host, inj.pkt.clone());
                    let h = &self.topo.hosts[host];
                    let (sw, id) = (h.switch, h.id.clone());
                    let sent = self.metrics.hosts.entry(id).or_default();
                    sent.sent_packets += 1;
                    sent.sent_bytes += u64::from(pkt.ip_len);
                    self.metrics.injected += 1;
                    self.packets.push(pkt);
                    self.fates.push(Fate::InFlight);
                    let packet = self.packets.len() - 1;
                    self.arrive(ev.t, sw, packet);
                }
                EventKind::Arrive { switch, packet } => self.arrive(ev.t, switch, packet),
                EventKind::PacketIn { switch, packet } => self.packet_in(ev.t, switch, packet),
                EventKind::StatsTick => self.stats_tick(ev.t),
            }
        }
        // Close lifetimes still installed at the end.
        let open: Vec<((SwitchId, u64), usize)> = self.live.iter().map(|(k, v)| (*k, *v)).collect();
        for ((sw, cookie), _) in open {
            if let Some(e) = self.tables[&sw].get(cookie) {
                let (p, b) = (e.packets, e.bytes);
                self.close_lifetime(sw, cookie, p, b);
            }
        }
        for (h, (first, last)) in &self.first_rx {
            let host = self.metrics.hosts.entry(self.topo.hosts[*h].id.clone()).or_default();
            let span = last - first;
            host.throughput_bps = if span > 0.0 { host.received_bytes as f64 * 8.0 / span } else { 0.0 };
        }
    }
}

fn rule_host(topo: &Topology, rule: &FlowRule, field: MatchField) -> Option<usize> {
    let addr = rule.matches.get(&field)?.parse().ok()?;
    topo.host_by_addr(addr)
}

/// Runs one scenario. Zero-trust mode requires trained `models`.
pub fn run_scenario(spec: &ScenarioSpec, models: Option<&Models>) -> Result<SimOutcome, SimError> {
    spec.validate()?;
    let topo = spec.topology();
    let traffic = expand(&topo, &spec.workload, spec.params.seed)?;
    let resolver = AppResolver::new(topo.hosts.iter().map(|h| (h.id.clone(), h.addr)), traffic.mapping.iter().cloned());
    let controller = match spec.mode {
        Mode::Fwd => Controller::Fwd,
        Mode::Train => Controller::Train { graph: CrGraph::new() },
        Mode::Zt => {
            let models = models.ok_or(SimError::MissingModels)?;
            Controller::Zt(ZtState { models, monitors: BTreeMap::new(), revoked: BTreeSet::new() })
        }
    };
    let last = traffic.injections.last().map_or(0.0, |i| i.t);
    let mut engine = Engine {
        tables: topo.switches.iter().map(|&s| (s, FlowTable::default())).collect(),
        topo,
        params: spec.params.clone(),
        resolver,
        queue: BinaryHeap::new(),
        seq: 0,
        step: 0,
        instance: 0,
        next_cookie: DYNAMIC_COOKIE_BASE,
        controller,
        edge_cookies: BTreeMap::new(),
        live: BTreeMap::new(),
        metrics: SimMetrics {
            mode: spec.mode,
            packet_in_count: 0,
            packet_out_count: 0,
            flow_mod_add: 0,
            flow_mod_remove: 0,
            rules_per_switch: spec.switches.iter().map(|&s| (s, 0)).collect(),
            injected: 0,
            delivered: 0,
            denied: 0,
            dropped_unsupported: 0,
            dropped_unroutable: 0,
            fallback_rules: 0,
            anomalies: 0,
            revoked_edges: Vec::new(),
            hosts: BTreeMap::new(),
        },
        timing: TimingReport::default(),
        events: Vec::new(),
        lifetimes: Vec::new(),
        arrivals: Vec::new(),
        packets: Vec::new(),
        fates: Vec::new(),
        stats: Vec::new(),
        mirror: Vec::new(),
        end_time: if traffic.injections.is_empty() { 0.0 } else { last + spec.params.idle_timeout + spec.params.stats_interval },
        first_rx: BTreeMap::new(),
        traffic,
    };
    for i in 0..engine.traffic.injections.len() {
        let t = engine.traffic.injections[i].t;
        engine.push(t, EventKind::Inject(i));
    }
    if !engine.traffic.injections.is_empty() {
        let first = engine.traffic.injections[0].t;
        let f = spec.params.stats_interval;
        engine.push((first / f).floor() * f + f, EventKind::StatsTick);
    }
    engine.run();
    engine.finalize();

    let (graph, verdicts) = match engine.controller {
        Controller::Train { mut graph } => {
            for edge in graph.edges.values_mut() {
                edge.packet_dataset.sort_by(|a, b| a.ts.total_cmp(&b.ts));
            }
            (Some(graph), BTreeMap::new())
        }
        Controller::Zt(zt) => (None, zt.monitors.into_iter().map(|(k, m)| (k, m.history().to_vec())).collect()),
        Controller::Fwd => (None, BTreeMap::new()),
    };
    Ok(SimOutcome {
        metrics: engine.metrics,
        timing: engine.timing,
        events: engine.events,
        lifetimes: engine.lifetimes,
        arrivals: engine.arrivals,
        packets: engine.packets,
        fates: engine.fates,
        stats: engine.stats,
        graph,
        mirror: engine.mirror,
        verdicts,
    })
}
