//! Builds the communication-relationship graph of a two-application trace and
//! persists it.

use ztsdn::graph::{AppResolver, CrGraph};
use ztsdn::synth::{two_app_hosts, two_app_mapping, TwoAppCorpus};

fn main() -> anyhow::Result<()> {
    let packets = TwoAppCorpus::contiguous(30.0, 20.0, 1).generate();
    let resolver = AppResolver::new(two_app_hosts(), two_app_mapping());
    let mut graph = CrGraph::new();
    for p in &packets {
        graph.observe(p, &resolver)?;
    }

    println!("nodes:");
    for n in &graph.nodes {
        println!("  {n}");
    }
    println!("edges:");
    for e in graph.edges.values() {
        println!("  {:<50} {} packets", e.key.to_string(), e.packet_dataset.len());
    }

    let dir = tempfile::tempdir()?;
    graph.save(dir.path())?;
    let loaded = CrGraph::load(dir.path())?;
    assert_eq!(loaded, graph);
    println!("saved and reloaded from {}", dir.path().display());
    Ok(())
}
