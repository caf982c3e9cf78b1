//! Full RFC 793 attack: port, an in-window (seq, ack) pair, then both
//! sequence numbers. The default runs on a 20-bit sequence space so it
//! finishes in moments; pass `32` for the real space (131k queries).
//!
//!     cargo run --release --example inwindow_rfc793 [seq_bits]

use qleak::harness::{build_network, run_experiment, Pipeline, ScenarioConfig};

fn main() -> Result<(), qleak::Error> {
    let bits: u8 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let mut cfg = ScenarioConfig::builtin("idle").expect("built-in");
    cfg.seq_bits = bits;
    cfg.conntrack_floor = cfg.conntrack_floor.min(1 << (bits - 2));
    // take the port as known; the port scan has its own example
    let (_, truth) = build_network(&cfg)?;
    cfg.victim_port = Some(truth.port);
    cfg.attack.port_lo = truth.port;
    cfg.attack.port_hi = truth.port;

    let e = run_experiment(&cfg, Pipeline::FullRfc793)?;
    let r = &e.report;
    println!("in-window seq     {:?}", r.inwindow_seq);
    println!("acceptable ack    {:?}", r.acceptable_ack);
    println!("peer SND.NXT      {:?} (true {:?})", r.inferred_peer_snd_nxt, e.truth.peer_snd_nxt);
    println!("victim SND.NXT    {:?} (true {:?})", r.inferred_victim_snd_nxt, e.truth.victim_snd_nxt);
    println!("success           {}", r.success);
    println!();
    println!("stage            queries  confirm  spoofed     time_s");
    for s in &r.stages {
        println!(
            "{:<16} {:>7}  {:>7}  {:>9}  {:>9.1}",
            s.stage.name(),
            s.queries,
            s.confirm_queries,
            s.spoofed_segments,
            s.time_s
        );
    }
    Ok(())
}
