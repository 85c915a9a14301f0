use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::MiningError;

// Support and confidence comparisons are made on counts with this slack so
// that thresholds like 0.9 of 10 rows admit exactly 9 rows.
const SLACK: f64 = 1e-9;

/// Rows of boolean items over uniquely labelled columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTable {
    columns: Vec<String>,
    rows: Vec<Vec<bool>>,
}

impl BinaryTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self, MiningError> {
        let unique: BTreeSet<&String> = columns.iter().collect();
        if unique.len() != columns.len() {
            return Err(MiningError::DuplicateColumn);
        }
        if rows.iter().any(|r| r.len() != columns.len()) {
            return Err(MiningError::RaggedRow);
        }
        Ok(BinaryTable { columns, rows })
    }

    /// One row per transaction; columns are the sorted distinct labels.
    pub fn from_transactions<I, T, S>(transactions: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sets: Vec<BTreeSet<String>> =
            transactions.into_iter().map(|t| t.into_iter().map(Into::into).collect()).collect();
        let columns: Vec<String> = sets.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let index: BTreeMap<&String, usize> = columns.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let rows = sets
            .iter()
            .map(|s| {
                let mut row = vec![false; columns.len()];
                for item in s {
                    row[index[item]] = true;
                }
                row
            })
            .collect();
        BinaryTable { columns, rows }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn tidset(&self, column: usize) -> Vec<u64> {
        let mut bits = vec![0u64; self.rows.len().div_ceil(64)];
        for (r, row) in self.rows.iter().enumerate() {
            if row[column] {
                bits[r / 64] |= 1 << (r % 64);
            }
        }
        bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Itemset {
    /// Sorted column labels.
    pub items: Vec<String>,
    pub support: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedents: Vec<String>,
    pub consequents: Vec<String>,
    pub support: f64,
    pub confidence: f64,
}

fn min_count(min_support: f64, n: usize) -> f64 {
    min_support * n as f64 - SLACK
}

fn popcount(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

/// Levelwise frequent-itemset search with subset pruning. Output is ordered
/// by size, then lexicographically by items.
pub fn apriori(table: &BinaryTable, min_support: f64) -> Result<Vec<Itemset>, MiningError> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(MiningError::Threshold(min_support));
    }
    if table.is_empty() {
        return Err(MiningError::EmptyTable);
    }
    let n = table.rows.len();
    let threshold = min_count(min_support, n);

    // Column indices sorted by label so index order equals label order.
    let mut order: Vec<usize> = (0..table.columns.len()).collect();
    order.sort_by(|a, b| table.columns[*a].cmp(&table.columns[*b]));
    let tidsets: Vec<Vec<u64>> = order.iter().map(|&c| table.tidset(c)).collect();

    let mut level: Vec<(Vec<usize>, Vec<u64>)> = (0..order.len())
        .filter(|&i| popcount(&tidsets[i]) as f64 >= threshold)
        .map(|i| (vec![i], tidsets[i].clone()))
        .collect();
    let mut out = Vec::new();
    while !level.is_empty() {
        for (items, bits) in &level {
            let count = popcount(bits);
            out.push(Itemset {
                items: items.iter().map(|&i| table.columns[order[i]].clone()).collect(),
                support: count as f64 / n as f64,
                count,
            });
        }
        let known: HashSet<&[usize]> = level.iter().map(|(items, _)| items.as_slice()).collect();
        let mut next = Vec::new();
        for a in 0..level.len() {
            for b in a + 1..level.len() {
                let (ia, ta) = &level[a];
                let (ib, _) = &level[b];
                let k = ia.len();
                if ia[..k - 1] != ib[..k - 1] {
                    break;
                }
                let last = ib[k - 1];
                let mut candidate = ia.clone();
                candidate.push(last);
                let pruned = (0..candidate.len() - 2).any(|drop| {
                    let subset: Vec<usize> =
                        candidate.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, v)| *v).collect();
                    !known.contains(subset.as_slice())
                });
                if pruned {
                    continue;
                }
                let bits: Vec<u64> = ta.iter().zip(&tidsets[last]).map(|(x, y)| x & y).collect();
                if popcount(&bits) as f64 >= threshold {
                    next.push((candidate, bits));
                }
            }
        }
        level = next;
    }
    Ok(out)
}

/// Every split `A => B` of a frequent itemset with confidence at least `min_confidence`.
pub fn association_rules(itemsets: &[Itemset], min_confidence: f64) -> Vec<AssociationRule> {
    let by_items: BTreeMap<&[String], &Itemset> = itemsets.iter().map(|s| (s.items.as_slice(), s)).collect();
    let mut out = Vec::new();
    for set in itemsets.iter().filter(|s| s.items.len() >= 2) {
        let k = set.items.len();
        for mask in 1..(1u64 << k) - 1 {
            let (ante, cons): (Vec<(usize, &String)>, Vec<(usize, &String)>) =
                set.items.iter().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
            let ante: Vec<String> = ante.into_iter().map(|(_, s)| s.clone()).collect();
            let cons: Vec<String> = cons.into_iter().map(|(_, s)| s.clone()).collect();
            let Some(base) = by_items.get(ante.as_slice()) else { continue };
            if set.count as f64 >= min_confidence * base.count as f64 - SLACK {
                out.push(AssociationRule {
                    antecedents: ante,
                    consequents: cons,
                    support: set.support,
                    confidence: set.count as f64 / base.count as f64,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_rows() -> BinaryTable {
        BinaryTable::from_transactions(vec![vec!["A", "B"], vec!["A", "B"], vec!["A"]])
    }

    fn find<'a>(sets: &'a [Itemset], items: &[&str]) -> Option<&'a Itemset> {
        sets.iter().find(|s| s.items.iter().map(String::as_str).eq(items.iter().copied()))
    }

    #[test]
    fn three_row_example() {
        let sets = apriori(&three_rows(), 0.6).unwrap();
        assert_eq!(sets.len(), 3);
        assert_eq!(find(&sets, &["A"]).unwrap().support, 1.0);
        assert!((find(&sets, &["B"]).unwrap().support - 2.0 / 3.0).abs() < 1e-12);
        assert!((find(&sets, &["A", "B"]).unwrap().support - 2.0 / 3.0).abs() < 1e-12);

        let rules = association_rules(&sets, 1.0);
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].antecedents, vec!["B"]);
        assert_eq!(rules[0].consequents, vec!["A"]);
        let all = association_rules(&sets, 0.5);
        let ab = all.iter().find(|r| r.antecedents == ["A"]).unwrap();
        assert!((ab.confidence - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_support_edge_cases() {
        let same = BinaryTable::from_transactions(vec![vec!["x", "y", "z"]; 4]);
        let sets = apriori(&same, 1.0).unwrap();
        assert_eq!(sets.last().unwrap().items, vec!["x", "y", "z"]);
        assert_eq!(association_rules(&sets, 1.0).len(), 12);

        let disjoint = BinaryTable::from_transactions(vec![vec!["A"], vec!["B"]]);
        assert!(apriori(&disjoint, 1.0).unwrap().is_empty());
        let singles = apriori(&disjoint, 0.5).unwrap();
        assert!(association_rules(&singles, 0.0).is_empty());
    }

    #[test]
    fn ninety_percent_of_ten_rows() {
        let mut rows = vec![vec!["a"]; 9];
        rows.push(vec!["b"]);
        let sets = apriori(&BinaryTable::from_transactions(rows), 0.9).unwrap();
        assert_eq!(sets.len(), 1);
    }

    #[test]
    fn input_checks() {
        let empty = BinaryTable::from_transactions(Vec::<Vec<&str>>::new());
        assert!(matches!(apriori(&empty, 0.5), Err(MiningError::EmptyTable)));
        assert!(apriori(&three_rows(), 0.0).is_err());
        assert!(BinaryTable::new(vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(BinaryTable::new(vec!["a".into()], vec![vec![true, false]]).is_err());
    }
}
