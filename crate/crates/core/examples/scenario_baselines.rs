//! Ping RTT through the bottleneck for each built-in scenario, and how the
//! standing queue looks once background traffic has settled.
//!
//!     cargo run --release --example scenario_baselines

use qleak::attacker::SimProber;
use qleak::harness::{build_network, ScenarioConfig};
use qleak::netsim::LinkId;

fn main() -> Result<(), qleak::Error> {
    println!("scenario             ping_rtt_s  uplink_queue_B  downlink_queue_B");
    for name in ["idle", "download", "upload"] {
        let cfg = ScenarioConfig::builtin(name).expect("built-in");
        let (net, _) = build_network(&cfg)?;
        let mut p = SimProber::new(net, cfg.detector.clone());
        p.warm_up();
        let rtt = p.baseline().mean_ns().unwrap_or(f64::NAN) / 1e9;
        let net = p.network();
        println!(
            "{name:<20} {rtt:>10.4}  {:>14}  {:>16}",
            net.queue_occupancy(LinkId::Uplink),
            net.queue_occupancy(LinkId::Downlink)
        );
    }
    Ok(())
}
