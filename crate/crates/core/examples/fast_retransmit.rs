//! Duplicate ACKs spoofed on behalf of the victim make its peer retransmit
//! and push new data, which loads the victim's downlink. Against a host
//! that answers every closed port with an RST, this finds the port.
//!
//!     cargo run --release --example fast_retransmit

use qleak::harness::{attacker_for, build_network, ScenarioConfig};
use qleak::netsim::peer_amplification;
use qleak::seqspace::amplification_factor;
use qleak::stack::HostModel;

fn main() -> Result<(), qleak::Error> {
    let mut cfg = ScenarioConfig::builtin("idle").expect("built-in");
    cfg.victim_model = HostModel::ClosedPortRst;
    println!("amplification (1500 B MTU, 40 B ACK): {}", amplification_factor(1500, 40)?);
    println!("peer model amplification:             {}", peer_amplification(&cfg.peer));

    let (net, truth) = build_network(&cfg)?;
    let mut a = attacker_for(&cfg, net);
    for port in [truth.port - 1, truth.port, truth.port + 1] {
        let v = a.fast_retransmit_port_probe(port, cfg.attack.dup_acks)?;
        println!(
            "port {port:>5}{}  avg rtt {:.4} s  loss {:.2}  {}",
            if port == truth.port { "*" } else { " " },
            v.avg_rtt,
            v.loss_rate,
            v.classified.name()
        );
    }
    let stats = a.prober().network().peer_stats();
    println!("peer: {stats:?}");
    Ok(())
}
