//! The two countermeasures: a response throttle on the victim, and a fair
//! queue at the bottleneck.
//!
//!     cargo run --release --example mitigations

use qleak::harness::{run_experiment, Pipeline, ScenarioConfig};
use qleak::netsim::QueuePolicy;

fn scan(label: &str, cfg: &ScenarioConfig) -> Result<(), qleak::Error> {
    let e = run_experiment(cfg, Pipeline::PortOnly)?;
    let r = &e.report;
    println!(
        "{label:<26} success={:<5} queries={:<5} reflected={:<6} time={:.1} s",
        r.success, r.queries, r.reflected_segments, r.scan_time_s
    );
    Ok(())
}

fn main() -> Result<(), qleak::Error> {
    let base = ScenarioConfig::builtin("idle").expect("built-in");
    scan("unprotected", &base)?;

    for (n, ms) in [(10, 100), (1, 100), (1, 1000)] {
        let mut cfg = base.clone();
        cfg.throttle = Some((n, ms * 1_000_000));
        scan(&format!("throttle {n}/{ms}ms"), &cfg)?;
    }

    let mut fair = base.clone();
    fair.topology.queue_policy = QueuePolicy::RoundRobinFair;
    scan("fair queue at bottleneck", &fair)?;
    Ok(())
}
