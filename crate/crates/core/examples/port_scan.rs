//! Finds the victim's ephemeral port with range queries.
//!
//!     cargo run --release --example port_scan [idle|download|upload] [seed]

use qleak::attacker::Stage;
use qleak::harness::{run_experiment, Pipeline, ScenarioConfig};

fn main() -> Result<(), qleak::Error> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "idle".into());
    let mut cfg = ScenarioConfig::builtin(&name)
        .ok_or_else(|| qleak::Error::Invalid(format!("no built-in scenario `{name}`")))?;
    if let Some(seed) = args.next() {
        cfg.seed = seed.parse().map_err(|_| qleak::Error::Invalid(format!("bad seed `{seed}`")))?;
    }

    let e = run_experiment(&cfg, Pipeline::PortOnly)?;
    let r = &e.report;
    println!("true port      {}", e.truth.port);
    println!("inferred port  {:?}", r.inferred_port);
    println!("queries        {}", r.queries);
    println!("spoofed        {}", r.spoofed_segments);
    println!("reflected      {}", r.reflected_segments);
    println!("scan time      {:.1} s", r.scan_time_s);

    let spikes: Vec<_> = e
        .series
        .iter()
        .filter(|s| s.stage == Stage::PortScan && s.classification.name() == "SPIKE")
        .map(|s| (s.x, s.avg_rtt_s, s.loss_rate))
        .collect();
    println!("spiking queries (first port, avg rtt, loss):");
    for (x, rtt, loss) in spikes {
        println!("  {x:>5}  {rtt:.4}  {loss:.2}");
    }
    Ok(())
}
