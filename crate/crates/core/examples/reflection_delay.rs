//! Queueing delay a burst of reflected ACKs adds to a ping, from the closed
//! form and from the simulator.
//!
//!     cargo run --example reflection_delay

use std::net::SocketAddrV4;

use qleak::attacker::{Query, SimProber, Stage, Target, Mode};
use qleak::harness::{build_network, ScenarioConfig};
use qleak::netsim::{tx_time_ns, NodeId, NS_PER_SEC, NS_PER_US};
use qleak::seqspace::reflection_delay;

fn main() -> Result<(), qleak::Error> {
    let cfg = ScenarioConfig::builtin("idle").expect("built-in");
    println!("segments  formula_s  simulated_s");
    for n in [1u32, 10, 30, 100, 300, 1000] {
        let formula = reflection_delay(u64::from(n), 80, cfg.topology.uplink_bps)?;

        let (net, truth) = build_network(&cfg)?;
        let mut prober = SimProber::new(net, cfg.detector.clone());
        prober.warm_up();
        let base = prober.baseline().mean_ns().unwrap_or(0.0);
        let space = prober.network().host().endpoint.space;
        // out-of-window seq: every copy draws an ACK
        let q = Query {
            src: SocketAddrV4::new(NodeId::Peer.addr(), cfg.server_port),
            dst_ip: NodeId::Victim.addr(),
            targets: vec![Target::ack_only(
                truth.port,
                space.add(truth.peer_snd_nxt, u64::from(space.half())),
                truth.victim_snd_nxt,
            )],
            repeats_per_target: n,
            probes: 1,
            mode: Mode::ExpectSpike,
            probe_offset_ns: 0,
            stage: Stage::PortScan,
            x: 0,
        };
        let net = prober.network_mut();
        let start = net.now();
        let mut end = start;
        for seg in q.segments() {
            net.inject_spoofed(start, seg);
            end += tx_time_ns(u64::from(seg.wire_size()), cfg.topology.lan_bps);
        }
        let ping = net.send_ping_probe(NodeId::Attacker, NodeId::Upstream, cfg.detector.ping_bytes, end + 100 * NS_PER_US);
        net.run_until(end + 10 * NS_PER_SEC);
        let rtt = net.probe(ping).rtt.map_or(f64::NAN, |r| r as f64);
        println!("{n:>8}  {formula:>9.4}  {:>11.4}", (rtt - base) / 1e9);
    }
    Ok(())
}
