use std::net::SocketAddrV4;

use qleak::attacker::{Mode, Prober, Query, SimProber, Stage, Target};
use qleak::harness::{
    build_network, emit_series_csv, run_experiment, sweep, Pipeline, ScenarioConfig, SERIES_HEADER,
};
use qleak::netsim::{tx_time_ns, EventKind, LinkId, NodeId};
use qleak::stack::HostModel;

/// Idle scenario narrowed to a 2000-port range around a fixed victim port.
fn narrow(name: &str, port: u16) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::builtin(name).unwrap();
    cfg.victim_port = Some(port);
    cfg.attack.port_lo = port - 1000;
    cfg.attack.port_hi = port + 999;
    cfg
}

#[test]
fn counters_reconcile_with_series_and_event_log() {
    let mut cfg = narrow("idle", 41_234);
    cfg.log_events = true;
    let e = run_experiment(&cfg, Pipeline::PortOnly).unwrap();
    let r = &e.report;
    assert!(r.success);
    let log = e.events.as_ref().unwrap();
    let count = |k: EventKind| log.records().iter().filter(|x| x.kind == k).count() as u64;
    assert_eq!(r.queries, e.series.len() as u64);
    assert_eq!(r.spoofed_segments, count(EventKind::SendSpoofed));
    assert_eq!(r.pings, count(EventKind::SendPing));
    assert_eq!(r.reflected_segments, count(EventKind::SendReflected));
    let stage_queries: u64 = r.stages.iter().map(|s| s.queries).sum();
    let stage_spoofed: u64 = r.stages.iter().map(|s| s.spoofed_segments).sum();
    assert_eq!(stage_queries, r.queries);
    assert_eq!(stage_spoofed, r.spoofed_segments);
    // warm-up pings are charged to the first stage
    let stage_pings: u64 = r.stages.iter().map(|s| s.pings).sum();
    assert_eq!(stage_pings, r.pings);
    let probes: u64 = e.series.len() as u64 * u64::from(cfg.attack.pings_per_query);
    assert_eq!(r.pings, probes + u64::from(cfg.detector.warmup_pings));
}

#[test]
fn port_scan_series_spikes_at_the_true_port() {
    let cfg = narrow("idle", 50_505);
    let e = run_experiment(&cfg, Pipeline::PortOnly).unwrap();
    let singles: Vec<_> = e
        .series
        .iter()
        .filter(|r| r.stage == Stage::PortScan && r.x == 50_505)
        .collect();
    assert!(singles.iter().filter(|r| r.classification.name() == "SPIKE").count() >= 3);
    // chunks that exclude the port stay quiet
    for r in &e.series {
        if r.x + u64::from(cfg.attack.ports_per_query) <= 50_505 {
            assert_eq!(r.classification.name(), "NO_SPIKE", "{r:?}");
        }
    }
}

#[test]
fn silence_queries_wait_for_the_reflections_to_drain() {
    let cfg = ScenarioConfig::builtin("idle").unwrap();
    let (net, truth) = build_network(&cfg).unwrap();
    let mut p = SimProber::new(net, cfg.detector.clone());
    p.warm_up();
    let space = p.space();
    let n = 200u32;
    let q = Query {
        src: SocketAddrV4::new(NodeId::Peer.addr(), cfg.server_port),
        dst_ip: NodeId::Victim.addr(),
        targets: vec![Target::ack_only(
            truth.port,
            space.add(truth.peer_snd_nxt, u64::from(space.half())),
            truth.victim_snd_nxt,
        )],
        repeats_per_target: n,
        probes: 3,
        mode: Mode::ExpectSilence,
        probe_offset_ns: 0,
        stage: Stage::InWindowSeq,
        x: 0,
    };
    let start = p.network().now();
    p.measure(&q).unwrap();
    let batch_end = start + u64::from(n) * tx_time_ns(80, cfg.topology.lan_bps);
    let drain = tx_time_ns(u64::from(n) * 80, cfg.topology.uplink_bps);
    assert!(p.network().now() >= batch_end + drain * 3 / 2);
    assert_eq!(p.network().queue_occupancy(LinkId::Uplink), 0);
}

#[test]
fn sweep_is_deterministic_and_needs_seeds() {
    let cfg = narrow("idle", 33_000);
    let a = sweep(&cfg, &[3, 1, 2], Pipeline::PortOnly).unwrap();
    let b = sweep(&cfg, &[1, 2, 3], Pipeline::PortOnly).unwrap();
    assert_eq!(a.runs, b.runs);
    assert_eq!(a.runs.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert_eq!(a.success_rate, 1.0);
    let err = sweep(&cfg, &[], Pipeline::PortOnly).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn empty_series_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    emit_series_csv(&path, &[]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), SERIES_HEADER.join(",") + "\n");
    let err = emit_series_csv(&dir.path().join("missing/series.csv"), &[]).unwrap_err();
    assert!(err.to_string().contains("missing"));
}

#[test]
fn pipeline_mismatch_is_a_config_error() {
    let mut cfg = ScenarioConfig::builtin("idle").unwrap();
    cfg.victim_model = HostModel::WinXpFirewall;
    let err = run_experiment(&cfg, Pipeline::FullNetfilter).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

fn baseline_rtt(name: &str) -> (f64, ScenarioConfig, qleak::netsim::Network) {
    let cfg = ScenarioConfig::builtin(name).unwrap();
    let (net, _) = build_network(&cfg).unwrap();
    let mut p = SimProber::new(net, cfg.detector.clone());
    p.warm_up();
    (p.baseline().mean_ns().unwrap() / 1e9, cfg, p.into_network())
}

#[test]
fn scenario_baselines_are_calibrated() {
    let (idle, _, _) = baseline_rtt("idle");
    assert!((0.019..0.022).contains(&idle), "idle {idle}");
    let (down, cfg, net) = baseline_rtt("download");
    assert!((0.6..0.8).contains(&down), "download {down}");
    let occ = net.queue_occupancy(LinkId::Downlink) as f64;
    assert!(occ >= 0.75 * cfg.topology.downlink_queue_bytes as f64, "downlink holds {occ} B");
    let (up, _, _) = baseline_rtt("upload");
    assert!((0.6..0.8).contains(&up), "upload {up}");
}

#[test]
fn rfc793_pipeline_at_reduced_scale() {
    let mut cfg = narrow("idle", 45_000);
    cfg.seq_bits = 20;
    cfg.conntrack_floor = 4096;
    let e = run_experiment(&cfg, Pipeline::FullRfc793).unwrap();
    assert!(e.report.success, "{:?}", e.report);
    assert!(!e.truth.session_corrupted);
    // the quietest in-window query sits inside the receive window
    let best = e
        .series
        .iter()
        .filter(|r| r.stage == Stage::InWindowSeq)
        .min_by(|a, b| a.avg_rtt_s.total_cmp(&b.avg_rtt_s))
        .unwrap();
    let space = qleak::seqspace::SeqSpace::reduced(20, 4096).unwrap();
    let off = space.diff(qleak::seqspace::Seq32(best.x as u32), e.truth.peer_snd_nxt);
    assert!(u64::from(off) < cfg.window.effective(), "offset {off}");
}

#[test]
fn netfilter_pipeline_at_reduced_scale() {
    let mut cfg = narrow("idle-netfilter", 45_000);
    cfg.seq_bits = 24;
    let e = run_experiment(&cfg, Pipeline::FullNetfilter).unwrap();
    assert!(e.report.success, "{:?}", e.report);
    assert_eq!(e.report.inflated_window, Some(8_388_480));
    let infl = e.report.stage(Stage::Inflation).unwrap();
    assert_eq!(infl.spoofed_segments, (1u64 << 24).div_ceil(66_001));
}

#[test]
fn fast_retransmit_finds_the_port_of_a_closed_port_host() {
    let mut cfg = narrow("idle", 47_000);
    cfg.victim_model = HostModel::ClosedPortRst;
    let e = run_experiment(&cfg, Pipeline::PortOnly).unwrap();
    assert!(e.report.success, "{:?}", e.report);
    // every closed port answers with an RST; only the real one adds peer data
    assert!(e.report.reflected_segments > 1000);
}
