//! Round-trips a synthetic trace through CSV, then turns each packet into a
//! scaled feature vector.

use ztsdn::synth::TwoAppCorpus;
use ztsdn::trace::{infer_stack, parse_trace, preprocess, write_trace, Scaler};

fn main() -> anyhow::Result<()> {
    let packets = TwoAppCorpus::contiguous(2.0, 20.0, 1).generate();
    let mut csv = Vec::new();
    write_trace(&mut csv, &packets)?;
    let parsed = parse_trace(csv.as_slice())?;
    assert_eq!(parsed, packets);
    println!("{} packets, {} bytes of CSV", parsed.len(), csv.len());

    let features = parsed.iter().map(preprocess).collect::<Result<Vec<_>, _>>()?;
    let first = &features[0];
    println!("stack {}", infer_stack(&parsed[0])?);
    for (name, value) in first.schema.iter().zip(&first.values) {
        println!("  {name:<14} {value}");
    }

    let scaler = Scaler::fit(&features)?;
    let scaled = scaler.scale(first)?;
    println!("scaled: {:?}", scaled.values.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>());
    Ok(())
}
