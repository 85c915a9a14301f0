//! Trains the access-request learner on one edge and scores benign and
//! abnormal packets against it.

use ztsdn::arl::{ArlDetector, ArlState, ArlTrainingConfig};
use ztsdn::synth::{flood, swapped_app, AppProfile, TwoAppCorpus};
use ztsdn::trace::{preprocess, PacketRecord};

fn alpha_requests(packets: &[PacketRecord]) -> Vec<&PacketRecord> {
    let port = AppProfile::alpha().server_port;
    packets.iter().filter(|p| p.dst_port == Some(port)).collect()
}

fn main() -> anyhow::Result<()> {
    let train = TwoAppCorpus::contiguous(640.0, 200.0, 1).generate();
    let mut arl = ArlDetector::new(ArlTrainingConfig::default(), 7)?;
    let mut end = 0.0;
    for p in alpha_requests(&train) {
        end = p.ts;
        let report = arl.feed(&preprocess(p)?, p.ts)?;
        if let Some((from, to)) = report.transition {
            println!("{:>8.2}s  {from:?} -> {to:?}", p.ts);
        }
        if arl.state() == ArlState::Execute {
            break;
        }
    }
    let Some(threshold) = arl.decision_threshold() else {
        println!("not executing after {} samples", arl.samples_fed());
        return Ok(());
    };
    println!("threshold {threshold:.4}, clusters {:?}", arl.feature_map().map(|m| &m.clusters));

    // Time of day is a feature, so held-out traffic follows training directly.
    let held = TwoAppCorpus { window_start: end, ..TwoAppCorpus::contiguous(2.0, 200.0, 2) }.generate();
    let cases = [
        ("benign", alpha_requests(&held).into_iter().cloned().collect::<Vec<_>>()),
        ("swapped app", swapped_app(end, 100, 3)),
        ("flood", flood(end, 100, 1000.0)),
    ];
    for (name, packets) in cases {
        let mut scores = Vec::new();
        for p in &packets {
            scores.push(arl.score(&preprocess(p)?)?);
        }
        let denied = scores.iter().filter(|s| **s > threshold).count();
        let max = scores.iter().copied().fold(0.0, f64::max);
        println!("{name:<12} {denied:>4}/{} denied, max score {max:.3e}", packets.len());
    }
    Ok(())
}
