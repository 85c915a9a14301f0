use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use super::SimError;

pub type SwitchId = u32;
pub type PortNo = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HostSpec {
    pub id: String,
    pub switch: SwitchId,
    pub port: PortNo,
    pub addr: Ipv4Addr,
}

/// What sits behind a switch port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Peer {
    Switch(SwitchId, PortNo),
    Host(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub switches: Vec<SwitchId>,
    /// `[switch_a, port_a, switch_b, port_b]`.
    pub links: Vec<[u32; 4]>,
    pub hosts: Vec<HostSpec>,
}

impl Topology {
    pub fn validate(&self) -> Result<(), SimError> {
        let switches: BTreeSet<SwitchId> = self.switches.iter().copied().collect();
        if switches.len() != self.switches.len() || switches.is_empty() {
            return Err(SimError::Topology("switch ids must be unique and non-empty".into()));
        }
        let mut used: BTreeSet<(SwitchId, PortNo)> = BTreeSet::new();
        let mut claim = |sw: SwitchId, port: PortNo| -> Result<(), SimError> {
            if !switches.contains(&sw) {
                return Err(SimError::Topology(format!("unknown switch {sw}")));
            }
            if !used.insert((sw, port)) {
                return Err(SimError::Topology(format!("port {port} of switch {sw} used twice")));
            }
            Ok(())
        };
        for l in &self.links {
            claim(l[0], l[1])?;
            claim(l[2], l[3])?;
        }
        let mut ids = BTreeSet::new();
        let mut addrs = BTreeSet::new();
        for h in &self.hosts {
            claim(h.switch, h.port)?;
            if !ids.insert(h.id.as_str()) || !addrs.insert(h.addr) {
                return Err(SimError::Topology(format!("host {} duplicated", h.id)));
            }
        }
        let start = self.switches[0];
        let reachable = self.distances(start);
        if reachable.len() != switches.len() {
            return Err(SimError::Topology("topology is not connected".into()));
        }
        Ok(())
    }

    fn neighbors(&self) -> BTreeMap<SwitchId, BTreeMap<SwitchId, PortNo>> {
        let mut adj: BTreeMap<SwitchId, BTreeMap<SwitchId, PortNo>> = BTreeMap::new();
        for &s in &self.switches {
            adj.entry(s).or_default();
        }
        for l in &self.links {
            // Parallel links: keep the lowest port.
            let e = adj.entry(l[0]).or_default().entry(l[2]).or_insert(l[1]);
            *e = (*e).min(l[1]);
            let e = adj.entry(l[2]).or_default().entry(l[0]).or_insert(l[3]);
            *e = (*e).min(l[3]);
        }
        adj
    }

    fn distances(&self, from: SwitchId) -> BTreeMap<SwitchId, usize> {
        let adj = self.neighbors();
        let mut dist = BTreeMap::new();
        dist.insert(from, 0);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            let d = dist[&s];
            for &n in adj[&s].keys() {
                if !dist.contains_key(&n) {
                    dist.insert(n, d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    /// Fewest-hop switch sequence from `from` to `to`; among equal-length
    /// paths the next hop is always the lowest switch id.
    pub fn switch_path(&self, from: SwitchId, to: SwitchId) -> Option<Vec<SwitchId>> {
        let dist = self.distances(to);
        dist.get(&from)?;
        let adj = self.neighbors();
        let mut path = vec![from];
        let mut cur = from;
        while cur != to {
            let d = dist[&cur];
            cur = *adj[&cur].keys().find(|n| dist.get(n) == Some(&(d - 1)))?;
            path.push(cur);
        }
        Some(path)
    }

    /// `(switch, egress port)` hops from the switch of host `src` to host `dst`.
    pub fn host_path(&self, src: usize, dst: usize) -> Option<Vec<(SwitchId, PortNo)>> {
        self.route(self.hosts[src].switch, dst)
    }

    /// Hops from switch `from` to host `dst`, ending with the host port.
    pub fn route(&self, from: SwitchId, dst: usize) -> Option<Vec<(SwitchId, PortNo)>> {
        let target = &self.hosts[dst];
        let switches = self.switch_path(from, target.switch)?;
        let adj = self.neighbors();
        let mut hops: Vec<(SwitchId, PortNo)> = switches.windows(2).map(|w| (w[0], adj[&w[0]][&w[1]])).collect();
        hops.push((target.switch, target.port));
        Some(hops)
    }

    pub fn peer(&self, switch: SwitchId, port: PortNo) -> Option<Peer> {
        for l in &self.links {
            if l[0] == switch && l[1] == port {
                return Some(Peer::Switch(l[2], l[3]));
            }
            if l[2] == switch && l[3] == port {
                return Some(Peer::Switch(l[0], l[1]));
            }
        }
        self.hosts.iter().position(|h| h.switch == switch && h.port == port).map(Peer::Host)
    }

    pub fn host_by_id(&self, id: &str) -> Option<usize> {
        self.hosts.iter().position(|h| h.id == id)
    }

    pub fn host_by_addr(&self, addr: Ipv4Addr) -> Option<usize> {
        self.hosts.iter().position(|h| h.addr == addr)
    }

    /// Switches in a line `1..=n`, link ports 1 (left) and 2 (right).
    pub fn line(n: u32) -> Self {
        Topology {
            switches: (1..=n).collect(),
            links: (1..n).map(|s| [s, 2, s + 1, 1]).collect(),
            hosts: Vec::new(),
        }
    }

    /// Attaches a host with address `10.0.0.{k}` on the next free port above 10.
    pub fn attach(&mut self, id: &str, switch: SwitchId) -> &mut Self {
        let port = 10 + self.hosts.iter().filter(|h| h.switch == switch).count() as PortNo;
        let addr = Ipv4Addr::new(10, 0, 0, self.hosts.len() as u8 + 1);
        self.hosts.push(HostSpec { id: id.into(), switch, port, addr });
        self
    }
}
