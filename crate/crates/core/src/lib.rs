//! Zero-trust flow control for software-defined networks.
//!
//! Packet traces become a communication-requirements graph ([`graph`]) whose
//! edges carry an access-request detector ([`arl`]), a flow-behavior matcher
//! ([`rtfsl`]) and mined least-privilege flow rules ([`mining`]). The [`sim`]
//! module replays workloads through a simulated OpenFlow data plane under
//! either the zero-trust controller or a reactive-forwarding baseline.

pub mod arl;
pub mod fsutil;
pub mod graph;
pub mod mining;
pub mod pipeline;
pub mod rtfsl;
pub mod sim;
pub mod synth;
pub mod trace;
