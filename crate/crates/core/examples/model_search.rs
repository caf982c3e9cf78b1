//! Runs the searches against the host model on a 20-bit sequence space,
//! where every answer is exact, and prints what each host model does with
//! a handful of segments.
//!
//!     cargo run --example model_search

use std::net::{Ipv4Addr, SocketAddrV4};

use qleak::attacker::{AttackConfig, Attacker, ModelProber, PortProbe};
use qleak::seqspace::{Seq32, SeqSpace, WindowSize};
use qleak::stack::{host_process, EndpointState, HostModel, HostState, TcpFlags, TcpSegment};

fn main() -> Result<(), qleak::Error> {
    let victim = Ipv4Addr::new(10, 0, 0, 2);
    let peer = SocketAddrV4::new(Ipv4Addr::new(10, 0, 1, 2), 80);
    let space = SeqSpace::reduced(20, 4096)?;
    let window = WindowSize::new(256, 0)?;
    let ep = EndpointState::established(SocketAddrV4::new(victim, 40_123), peer, Seq32(1000), Seq32(50_000), window)
        .with_space(space);

    println!("segment                      rfc793            winxp             netfilter");
    let probes = [
        ("ACK, seq out of window", TcpFlags::ACK, 10u32, 1000u32, 0u32),
        ("ACK, seq in window", TcpFlags::ACK, 50_010, 1000, 0),
        ("ACK ahead of SND.NXT", TcpFlags::ACK, 50_010, 2000, 0),
        ("RST in window", TcpFlags::RST, 50_010, 0, 0),
        ("SYN+ACK out of window", TcpFlags::SYN | TcpFlags::ACK, 10, 0, 0),
        ("data at RCV.NXT", TcpFlags::ACK, 50_000, 1000, 1),
    ];
    for (label, flags, seq, ack, len) in probes {
        print!("{label:<28}");
        for model in [HostModel::Rfc793Bare, HostModel::WinXpFirewall, HostModel::LinuxNetfilter] {
            let mut h = HostState::new(ep.clone());
            let seg = TcpSegment::new(peer, ep.local, flags)
                .with_seq(Seq32(seq))
                .with_ack(Seq32(ack))
                .with_payload(len);
            print!(" {:<17}", format!("{:?}", host_process(model, &mut h, &seg, 0).disposition));
        }
        println!();
    }
    println!();

    for model in [HostModel::Rfc793Bare, HostModel::LinuxNetfilter] {
        let cfg = AttackConfig {
            port_lo: 40_000,
            port_hi: 40_999,
            segments_per_target: 1,
            assumed_window: 256,
            min_window: 16,
            data_window: 256,
            assumed_scale: 0,
            port_probe: if model == HostModel::LinuxNetfilter { PortProbe::SynAck } else { PortProbe::OutOfWindowAck },
            ..AttackConfig::default()
        };
        let mut a = Attacker::new(ModelProber::new(model, HostState::new(ep.clone())), cfg, victim, peer);
        let r = if model == HostModel::LinuxNetfilter { a.full_netfilter()? } else { a.full_rfc793()? };
        println!(
            "{model}: port {:?}, victim SND.NXT {:?}, peer SND.NXT {:?}, {} queries",
            r.inferred_port, r.inferred_victim_snd_nxt, r.inferred_peer_snd_nxt, r.queries
        );
        for s in &r.stages {
            println!("    {:<16} {:>5} queries ({} confirming)", s.stage.name(), s.queries, s.confirm_queries);
        }
    }
    Ok(())
}
