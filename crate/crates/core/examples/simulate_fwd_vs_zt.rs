//! Replays one scenario under the zero-trust controller and the reactive
//! forwarding baseline.

use ztsdn::mining::MiningConfig;
use ztsdn::pipeline::{compare_controllers, EdgeTrainingConfig};
use ztsdn::sim::ScenarioSpec;

fn main() -> anyhow::Result<()> {
    let spec = ScenarioSpec::iperf_line(4, 2, 2, 10.0);
    let training = EdgeTrainingConfig::default().for_scenario(&spec);
    let run = compare_controllers(&spec, &training, &MiningConfig::default())?;
    let c = &run.comparison;
    println!("{} rules mined, {} edges trained", c.mined_rules, c.training.edges.len());
    println!("{:<5} {:>9} {:>10} {:>10} {:>7}", "mode", "packet-in", "max rules", "delivered", "denied");
    for m in [&c.zt, &c.fwd] {
        println!(
            "{:<5} {:>9} {:>10} {:>10} {:>7}",
            m.mode.as_str(),
            m.packet_in_count,
            m.max_rules_per_switch(),
            m.delivered,
            m.denied
        );
    }
    println!("packet-in reduced: {}", c.packet_in_reduced());
    Ok(())
}
