use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::apriori::{apriori, association_rules, BinaryTable};
use super::rules::{match_rule, FlowRule};
use super::MiningError;
use crate::trace::PacketRecord;

/// A group of rules that are active together, with the support of the group
/// and the weakest confidence among its qualifying splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleAssociation {
    pub rules: Vec<String>,
    pub support: f64,
    pub confidence: f64,
}

/// Packet-index windows: each starts at the first packet not yet consumed
/// and spans `duration` seconds, so idle gaps produce no empty windows.
pub fn time_windows(trace: &[PacketRecord], duration: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < trace.len() {
        let end = trace[i].ts + duration;
        let mut j = i + 1;
        while j < trace.len() && trace[j].ts < end {
            j += 1;
        }
        out.push(i..j);
        i = j;
    }
    out
}

/// Rule association miner over a time-ordered trace.
pub fn mine_rule_associations(
    rules: &[FlowRule],
    trace: &[PacketRecord],
    window_duration: f64,
    min_support: f64,
    min_confidence: f64,
) -> Result<Vec<RuleAssociation>, MiningError> {
    if rules.is_empty() {
        return Err(MiningError::NoRules);
    }
    if window_duration <= 0.0 {
        return Err(MiningError::Threshold(window_duration));
    }
    if trace.is_empty() {
        return Ok(Vec::new());
    }
    let windows = time_windows(trace, window_duration);
    let rows: Vec<Vec<bool>> = windows
        .iter()
        .map(|w| rules.iter().map(|r| trace[w.clone()].iter().any(|p| match_rule(r, p))).collect())
        .collect();
    let table = BinaryTable::new(rules.iter().map(|r| r.id.clone()).collect(), rows)?;
    let itemsets = apriori(&table, min_support)?;
    let mut groups: BTreeMap<Vec<String>, RuleAssociation> = BTreeMap::new();
    for rule in association_rules(&itemsets, min_confidence) {
        let mut ids: Vec<String> = rule.antecedents.into_iter().chain(rule.consequents).collect();
        ids.sort();
        groups
            .entry(ids.clone())
            .and_modify(|g| g.confidence = g.confidence.min(rule.confidence))
            .or_insert(RuleAssociation { rules: ids, support: rule.support, confidence: rule.confidence });
    }
    Ok(groups.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::rules::MatchField;
    use crate::trace::Proto;

    fn tcp(ts: f64, from_client: bool) -> PacketRecord {
        let c = ("10.0.0.1".parse().unwrap(), 40000);
        let s = ("10.0.0.2".parse().unwrap(), 5001);
        if from_client {
            PacketRecord::transport(ts, Proto::Tcp, c, s, 60)
        } else {
            PacketRecord::transport(ts, Proto::Tcp, s, c, 60)
        }
    }

    fn rule(id: &str, field: MatchField, value: &str) -> FlowRule {
        FlowRule::new(id, 0, [(field, value.to_string())].into_iter().collect())
    }

    #[test]
    fn bidirectional_rules_associate() {
        let trace: Vec<PacketRecord> = (0..100).map(|i| tcp(i as f64 * 0.25, i % 2 == 0)).collect();
        let rules = [
            rule("r1", MatchField::DstPort, "5001"),
            rule("r2", MatchField::SrcPort, "5001"),
            rule("r3", MatchField::DstPort, "9"),
        ];
        let assoc = mine_rule_associations(&rules, &trace, 1.0, 0.9, 1.0).unwrap();
        assert_eq!(assoc.len(), 1);
        assert_eq!(assoc[0].rules, vec!["r1", "r2"]);
        assert_eq!((assoc[0].support, assoc[0].confidence), (1.0, 1.0));
    }

    #[test]
    fn gaps_are_skipped_and_windows_partition() {
        let mut trace: Vec<PacketRecord> = (0..4).map(|i| tcp(i as f64 * 0.3, true)).collect();
        trace.extend((0..4).map(|i| tcp(1000.0 + i as f64 * 0.3, true)));
        let w = time_windows(&trace, 1.0);
        assert_eq!(w, vec![0..4, 4..8]);
        let covered: usize = w.iter().map(|r| r.len()).sum();
        assert_eq!(covered, trace.len());
    }

    #[test]
    fn needs_rules() {
        assert!(matches!(mine_rule_associations(&[], &[], 1.0, 0.9, 1.0), Err(MiningError::NoRules)));
    }
}
