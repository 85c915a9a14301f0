//! Library results against straightforward reference implementations.

use std::collections::BTreeMap;

use proptest::prelude::*;
use ztsdn::mining::{apriori, association_rules, BinaryTable};
use ztsdn::pipeline::derive_flow_stats;
use ztsdn::rtfsl::{dtw_distance, dtw_distance_below, dtw_exact, fast_dtw, match_diffs};
use ztsdn::trace::{PacketRecord, Proto};

fn dtw_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![f64::INFINITY; m + 1]; n + 1];
    d[0][0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            d[i][j] = (a[i - 1] - b[j - 1]).abs() + d[i - 1][j - 1].min(d[i - 1][j]).min(d[i][j - 1]);
        }
    }
    d[n][m]
}

fn frequent_oracle(rows: &[Vec<bool>], min_support: f64) -> BTreeMap<Vec<usize>, usize> {
    let cols = rows[0].len();
    (1..1u32 << cols)
        .filter_map(|mask| {
            let items: Vec<usize> = (0..cols).filter(|c| mask & (1 << c) != 0).collect();
            let count = rows.iter().filter(|r| items.iter().all(|&c| r[c])).count();
            (count as f64 >= min_support * rows.len() as f64 - 1e-9).then_some((items, count))
        })
        .collect()
}

fn series(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..=max)
}

proptest! {
    #[test]
    fn exact_dtw_matches_full_table(a in series(40), b in series(40)) {
        prop_assert_eq!(dtw_exact(&a, &b).unwrap(), dtw_oracle(&a, &b));
    }

    #[test]
    fn wide_radius_fast_dtw_is_exact(a in series(40), b in series(40), extra in 0usize..5) {
        let radius = a.len().max(b.len()) + extra;
        prop_assert_eq!(fast_dtw(&a, &b, radius).unwrap(), dtw_oracle(&a, &b));
    }

    #[test]
    fn cutoff_only_hides_larger_distances(a in series(90), b in series(90), cutoff in 0.0f64..200.0) {
        let d = dtw_distance(&a, &b, 1).unwrap();
        let below = dtw_distance_below(&a, &b, 1, cutoff).unwrap();
        if d < cutoff {
            prop_assert_eq!(below, d);
        } else {
            prop_assert!(below >= cutoff);
        }
    }

    #[test]
    fn library_match_is_the_best_segment(lib in prop::collection::vec(-1.0f64..1.0, 10..60), len in 1usize..10) {
        let obs: Vec<f64> = lib[3..3 + len.min(lib.len() - 3)].iter().map(|v| v * 0.9 + 0.01).collect();
        let (d, start) = match_diffs(&lib, &obs, 1).unwrap();
        let all: Vec<f64> = lib.windows(obs.len()).map(|w| dtw_distance(w, &obs, 1).unwrap()).collect();
        let best = all.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(d, best);
        prop_assert_eq!(start, all.iter().position(|x| *x == best).unwrap());
    }

    #[test]
    fn apriori_matches_enumeration(
        rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..30),
        support in 1u32..=10,
        confidence in 0u32..=10,
    ) {
        let min_support = f64::from(support) / 10.0;
        let min_confidence = f64::from(confidence) / 10.0;
        let columns: Vec<String> = (0..6).map(|c| format!("c{c}")).collect();
        let table = BinaryTable::new(columns.clone(), rows.clone()).unwrap();
        let sets = apriori(&table, min_support).unwrap();
        let want = frequent_oracle(&rows, min_support);
        let got: BTreeMap<Vec<usize>, usize> = sets
            .iter()
            .map(|s| (s.items.iter().map(|i| columns.iter().position(|c| c == i).unwrap()).collect(), s.count))
            .collect();
        prop_assert_eq!(&got, &want);

        let mut expected_rules = 0;
        for (items, count) in want.iter().filter(|(i, _)| i.len() >= 2) {
            for mask in 1..(1u32 << items.len()) - 1 {
                let ante: Vec<usize> = (0..items.len()).filter(|b| mask & (1 << b) != 0).map(|b| items[b]).collect();
                if *count as f64 >= min_confidence * want[&ante] as f64 - 1e-9 {
                    expected_rules += 1;
                }
            }
        }
        prop_assert_eq!(association_rules(&sets, min_confidence).len(), expected_rules);
    }

    #[test]
    fn derived_stats_count_earlier_packets(gaps in prop::collection::vec(0.0f64..3.0, 1..50), interval in 0.5f64..4.0) {
        let mut t = 0.0;
        let packets: Vec<PacketRecord> = gaps
            .iter()
            .enumerate()
            .map(|(i, g)| {
                t += g;
                let addr = "10.0.0.1".parse().unwrap();
                PacketRecord::transport(t, Proto::Udp, (addr, 1), (addr, 2), 100 + i as u32)
            })
            .collect();
        let stats = derive_flow_stats(&packets, interval);
        prop_assert!(stats.last().unwrap().packets_cum as usize == packets.len());
        for s in &stats {
            let before: Vec<&PacketRecord> = packets.iter().filter(|p| p.ts < s.t).collect();
            prop_assert_eq!(s.packets_cum as usize, before.len());
            prop_assert_eq!(s.bytes_cum, before.iter().map(|p| u64::from(p.ip_len)).sum::<u64>());
        }
    }
}
