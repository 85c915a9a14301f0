//! Mines least-privilege flow rules and rule associations from an
//! iperf-style trace.

use ztsdn::graph::AppResolver;
use ztsdn::mining::{MiningConfig, RuleBook};
use ztsdn::pipeline::build_graph;
use ztsdn::synth::iperf_corpus;

fn main() -> anyhow::Result<()> {
    let (packets, mapping, hosts) = iperf_corpus(2, 30.0, 1)?;
    let resolver = AppResolver::new(hosts, mapping);
    let (graph, _) = build_graph(&packets, &resolver, 5.0)?;
    let book = RuleBook::mine(&graph, &MiningConfig::default())?;

    for edge in &book.edges {
        println!("{}", edge.key);
        for rule in book.edge_rules(&edge.key) {
            let fields: Vec<String> = rule.matches.iter().map(|(f, v)| format!("{}={v}", f.name())).collect();
            println!("  {} {}", rule.id, fields.join(" "));
        }
    }
    for app in &book.applications {
        for a in &app.associations {
            println!("{}: {:?} support {:.2} confidence {:.2}", app.app, a.rules, a.support, a.confidence);
        }
    }
    Ok(())
}
