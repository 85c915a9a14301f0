use crate::mining::{match_rule, Action, FlowRule};
use crate::trace::PacketRecord;

pub const DEFAULT_COOKIE: u64 = 0;

/// An installed rule with its counters and timers.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEntry {
    pub rule: FlowRule,
    pub packets: u64,
    pub bytes: u64,
    pub installed_at: f64,
    pub last_hit: f64,
    /// Unique per installation, across all switches.
    pub instance: u64,
}

impl FlowEntry {
    fn deadline(&self) -> Option<f64> {
        let idle = (self.rule.idle_timeout > 0.0).then(|| self.last_hit + self.rule.idle_timeout);
        let hard = (self.rule.hard_timeout > 0.0).then(|| self.installed_at + self.rule.hard_timeout);
        match (idle, hard) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn is_default(&self) -> bool {
        self.rule.cookie == DEFAULT_COOKIE
    }
}

/// Flow table ordered by descending priority; equal priorities keep
/// installation order. The default rule sends misses to the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTable {
    entries: Vec<FlowEntry>,
}

impl Default for FlowTable {
    fn default() -> Self {
        let mut rule = FlowRule::new("default", DEFAULT_COOKIE, Default::default());
        rule.priority = 0;
        rule.actions = vec![Action::ToController];
        FlowTable {
            entries: vec![FlowEntry { rule, packets: 0, bytes: 0, installed_at: 0.0, last_hit: 0.0, instance: 0 }],
        }
    }
}

impl FlowTable {
    pub fn entries(&self) -> &[FlowEntry] {
        &self.entries
    }

    /// Installed rules excluding the default rule.
    pub fn rule_count(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn contains(&self, cookie: u64) -> bool {
        self.entries.iter().any(|e| e.rule.cookie == cookie)
    }

    pub fn get(&self, cookie: u64) -> Option<&FlowEntry> {
        self.entries.iter().find(|e| e.rule.cookie == cookie)
    }

    /// Adds `rule` unless one with the same cookie is present. Returns whether it was added.
    pub fn install(&mut self, rule: FlowRule, now: f64, instance: u64) -> bool {
        if self.contains(rule.cookie) {
            return false;
        }
        let pos = self.entries.iter().position(|e| e.rule.priority < rule.priority).unwrap_or(self.entries.len());
        self.entries.insert(pos, FlowEntry { rule, packets: 0, bytes: 0, installed_at: now, last_hit: now, instance });
        true
    }

    pub fn remove(&mut self, cookie: u64) -> Option<FlowEntry> {
        if cookie == DEFAULT_COOKIE {
            return None;
        }
        let pos = self.entries.iter().position(|e| e.rule.cookie == cookie)?;
        Some(self.entries.remove(pos))
    }

    /// Removes every rule whose idle or hard deadline is at or before `now`.
    pub fn expire(&mut self, now: f64) -> Vec<FlowEntry> {
        let mut expired = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            if !self.entries[i].is_default() && self.entries[i].deadline().is_some_and(|d| d <= now) {
                expired.push(self.entries.remove(i));
            } else {
                i += 1;
            }
        }
        expired
    }

    /// Highest-priority match; its counters and idle timer are updated.
    pub fn lookup(&mut self, pkt: &PacketRecord, now: f64) -> &FlowEntry {
        let idx = self.entries.iter().position(|e| match_rule(&e.rule, pkt)).expect("default rule matches everything");
        let e = &mut self.entries[idx];
        e.packets += 1;
        e.bytes += u64::from(pkt.ip_len);
        e.last_hit = now;
        e
    }

    /// Next time any rule could expire.
    pub fn next_deadline(&self) -> Option<f64> {
        self.entries.iter().filter_map(FlowEntry::deadline).min_by(f64::total_cmp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::MatchField;
    use crate::trace::Proto;

    fn pkt(port: u16) -> PacketRecord {
        PacketRecord::transport(0.0, Proto::Tcp, ("10.0.0.1".parse().unwrap(), 40000), ("10.0.0.2".parse().unwrap(), port), 100)
    }

    fn rule(cookie: u64, priority: u16, port: &str) -> FlowRule {
        let mut r = FlowRule::new(format!("r{cookie}"), cookie, [(MatchField::DstPort, port.to_string())].into_iter().collect());
        r.priority = priority;
        r.idle_timeout = 10.0;
        r
    }

    #[test]
    fn miss_hits_default() {
        let mut t = FlowTable::default();
        assert!(t.lookup(&pkt(1), 0.0).is_default());
        assert_eq!(t.rule_count(), 0);
    }

    #[test]
    fn priority_and_counters() {
        let mut t = FlowTable::default();
        t.install(rule(1, 100, "5001"), 0.0, 1);
        t.install(rule(2, 200, "5001"), 0.0, 2);
        assert!(!t.install(rule(2, 200, "5001"), 0.0, 3));
        let hit = t.lookup(&pkt(5001), 1.0);
        assert_eq!((hit.rule.cookie, hit.packets, hit.bytes), (2, 1, 100));
        assert_eq!(t.get(1).unwrap().packets, 0);
    }

    #[test]
    fn idle_and_hard_timeouts() {
        let mut t = FlowTable::default();
        t.install(rule(1, 100, "5001"), 0.0, 1);
        let mut hard = rule(2, 100, "5002");
        hard.idle_timeout = 0.0;
        hard.hard_timeout = 5.0;
        t.install(hard, 0.0, 2);
        t.lookup(&pkt(5001), 8.0);
        t.lookup(&pkt(5002), 4.9);
        assert_eq!(t.expire(5.0).len(), 1);
        assert!(t.contains(1));
        assert!(t.expire(17.9).is_empty());
        assert_eq!(t.expire(18.0).len(), 1);
        assert_eq!(t.rule_count(), 0);
    }
}
