//! Learns the transmission behaviour of a flow from its cumulative counters
//! and watches a flood appear mid-flow.

use ztsdn::rtfsl::{RtfslConfig, RtfslModel, RtfslMonitor, RtfslState, Verdict};
use ztsdn::synth::StatStream;

fn main() -> anyhow::Result<()> {
    let config = RtfslConfig { window_size: 70, min_train_duration: 3600.0, ..RtfslConfig::default() };
    let mut model = RtfslModel::new(config)?;
    for s in StatStream::steady(1000, 200.0, 600.0, 5.0, 0.2, 1).generate() {
        let report = model.train_feed(s)?;
        if let Some((from, to)) = report.transition {
            println!("t={:>6}  {from:?} -> {to:?}  library {}", s.t, report.library_len);
        }
        if model.state() == RtfslState::Execute {
            break;
        }
    }

    let onset = 100;
    let stream = StatStream::steady(onset, 200.0, 600.0, 5.0, 0.2, 2).then(60, 2000.0, 600.0).generate();
    let mut monitor = RtfslMonitor::new(model)?;
    for (i, s) in stream.iter().enumerate() {
        if let Verdict::Anomalous(channel, d) = monitor.step(*s)? {
            println!("sample {i}: {} distance {d:.3}, {} samples after onset", channel.as_str(), i - onset);
            break;
        }
    }
    let worst = monitor.history()[..onset]
        .iter()
        .filter_map(|r| r.distances)
        .map(|d| d[0].max(d[1]))
        .fold(0.0, f64::max);
    println!("worst benign window distance {worst:.3}");
    Ok(())
}
