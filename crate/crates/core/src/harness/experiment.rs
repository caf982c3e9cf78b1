use std::fmt;
use std::fs::File;
use std::io::Write;
use std::net::SocketAddrV4;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacker::{Attacker, Prober, ScanReport, SeriesRow, SimProber, Stage};
use crate::error::Error;
use crate::harness::config::ScenarioConfig;
use crate::netsim::{build_topology, EventLog, FlowDirection, Network, NodeId, PeerConfig};
use crate::seqspace::{Seq32, SeqSpace};
use crate::stack::{EndpointState, HostModel, HostState, Throttle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    PortOnly,
    FullRfc793,
    FullNetfilter,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::PortOnly => "port_only",
            Pipeline::FullRfc793 => "full_rfc793",
            Pipeline::FullNetfilter => "full_netfilter",
        }
    }

    pub fn supports(self, model: HostModel) -> bool {
        match self {
            Pipeline::PortOnly => true,
            Pipeline::FullRfc793 => matches!(model, HostModel::Rfc793Bare | HostModel::WinXpFirewall),
            Pipeline::FullNetfilter => model == HostModel::LinuxNetfilter,
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "port_only" => Ok(Pipeline::PortOnly),
            "full_rfc793" => Ok(Pipeline::FullRfc793),
            "full_netfilter" => Ok(Pipeline::FullNetfilter),
            _ => Err(format!("unknown pipeline `{s}` (port_only, full_rfc793, full_netfilter)")),
        }
    }
}

/// The session the attacker is after.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truth {
    pub port: u16,
    pub victim_snd_nxt: Seq32,
    /// Victim's RCV.NXT when the scan ended (a data probe may move it).
    pub peer_snd_nxt: Seq32,
    pub session_corrupted: bool,
}

#[derive(Debug)]
pub struct Experiment {
    pub scenario: String,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub report: ScanReport,
    pub series: Vec<SeriesRow>,
    pub truth: Truth,
    pub events: Option<EventLog>,
}

/// Draws the session secrets from the seed and lays out the network.
pub fn build_network(cfg: &ScenarioConfig) -> Result<(Network, Truth), Error> {
    cfg.validate()?;
    let space = SeqSpace::reduced(cfg.seq_bits, cfg.conntrack_floor)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let port = match cfg.victim_port {
        Some(p) => p,
        None => rng.gen_range(cfg.attack.port_lo.max(1025)..=cfg.attack.port_hi.max(1025)),
    };
    let snd = space.wrap(u64::from(rng.gen::<u32>()));
    let rcv = space.wrap(u64::from(rng.gen::<u32>()));
    let ep = EndpointState::established(
        SocketAddrV4::new(NodeId::Victim.addr(), port),
        SocketAddrV4::new(NodeId::Peer.addr(), cfg.server_port),
        snd,
        rcv,
        cfg.window,
    )
    .with_space(space)
    .with_policy(cfg.rst_policy)
    .with_throttle(cfg.throttle.map(|(n, per)| Throttle::new(n, per)));
    let peer = PeerConfig {
        fast_retransmit: cfg.peer.fast_retransmit || cfg.victim_model == HostModel::ClosedPortRst,
        ..cfg.peer
    };
    let topo = build_topology(&cfg.topology)?;
    let mut net = Network::new(topo, cfg.victim_model, HostState::new(ep), peer, rng.gen(), cfg.log_events);
    if let Some(bg) = cfg.background {
        let dir = if bg.download {
            FlowDirection::Download
        } else {
            FlowDirection::Upload
        };
        net.start_background_flow(dir, bg.rate_bps, bg.window_bytes);
        net.run_until(cfg.settle_ns);
    }
    let truth = Truth {
        port,
        victim_snd_nxt: snd,
        peer_snd_nxt: rcv,
        session_corrupted: false,
    };
    Ok((net, truth))
}

pub fn attacker_for(cfg: &ScenarioConfig, net: Network) -> Attacker<SimProber> {
    let mut attack = cfg.attack.clone();
    attack.port_probe = cfg.effective_port_probe();
    attack.assumed_scale = cfg.assumed_scale.unwrap_or(cfg.window.scale());
    attack.data_window = cfg.data_window.unwrap_or(cfg.window.effective());
    attack.uplink_bps = cfg.topology.uplink_bps;
    attack.seed = cfg.seed;
    let prober = SimProber::new(net, cfg.detector.clone());
    Attacker::new(
        prober,
        attack,
        NodeId::Victim.addr(),
        SocketAddrV4::new(NodeId::Peer.addr(), cfg.server_port),
    )
}

/// Runs one pipeline to completion and judges the result against the
/// session's true secrets.
pub fn run_experiment(cfg: &ScenarioConfig, pipeline: Pipeline) -> Result<Experiment, Error> {
    if !pipeline.supports(cfg.victim_model) {
        return Err(Error::PipelineMismatch {
            pipeline: pipeline.name().into(),
            model: cfg.victim_model.name().into(),
        });
    }
    let (net, mut truth) = build_network(cfg)?;
    let mut attacker = attacker_for(cfg, net);
    let mut report = match pipeline {
        Pipeline::PortOnly => attacker.port_only()?,
        Pipeline::FullRfc793 => attacker.full_rfc793()?,
        Pipeline::FullNetfilter => attacker.full_netfilter()?,
    };
    let prober = attacker.into_prober();
    let series = prober.series().to_vec();
    let net = prober.into_network();
    let ep = &net.host().endpoint;
    truth.peer_snd_nxt = ep.rcv_nxt;
    truth.victim_snd_nxt = ep.snd_nxt;
    truth.session_corrupted = ep.corrupted;
    report.session_corrupted = ep.corrupted;
    let port_ok = report.inferred_port == Some(truth.port);
    report.success = match pipeline {
        Pipeline::PortOnly => port_ok,
        Pipeline::FullRfc793 | Pipeline::FullNetfilter => {
            port_ok
                && report.inferred_victim_snd_nxt == Some(truth.victim_snd_nxt)
                && report.inferred_peer_snd_nxt == Some(truth.peer_snd_nxt)
        }
    };
    let events = cfg.log_events.then(|| net.log().clone());
    Ok(Experiment {
        scenario: cfg.scenario.name().to_string(),
        pipeline,
        seed: cfg.seed,
        report,
        series,
        truth,
        events,
    })
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "scenario",
    "scan_time_s",
    "queries",
    "pings",
    "max_targets_per_query",
    "spoofed_segments",
    "reflected_segments",
    "success",
];

pub const SERIES_HEADER: [&str; 6] = ["query_id", "stage", "x", "avg_rtt_s", "loss_rate", "classification"];

fn summary_fields(scenario: &str, r: &ScanReport) -> [String; 8] {
    [
        scenario.to_string(),
        format!("{:.6}", r.scan_time_s),
        r.queries.to_string(),
        r.pings.to_string(),
        r.max_targets_per_query.to_string(),
        r.spoofed_segments.to_string(),
        r.reflected_segments.to_string(),
        r.success.to_string(),
    ]
}

fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

fn create(path: &Path) -> Result<File, Error> {
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn write_summary_csv<W: Write>(out: W, scenario: &str, r: &ScanReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    w.write_record(summary_fields(scenario, r))?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_series_csv<W: Write>(out: W, rows: &[SeriesRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for r in rows {
        w.write_record([
            r.query_id.to_string(),
            r.stage.name().to_string(),
            r.x.to_string(),
            float(r.avg_rtt_s),
            float(r.loss_rate),
            r.classification.name().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<(), Error> {
    write_series_csv(create(path)?, rows)
}

/// Writes `summary.csv`, `series.csv` and, when recorded, `events.csv`.
pub fn write_experiment(dir: &Path, e: &Experiment) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    write_summary_csv(create(&dir.join("summary.csv"))?, &e.scenario, &e.report)?;
    emit_series_csv(&dir.join("series.csv"), &e.series)?;
    if let Some(log) = &e.events {
        log.write_csv(create(&dir.join("events.csv"))?)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub runs: Vec<(u64, ScanReport)>,
    pub success_rate: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub mean_spoofed: f64,
    pub max_spoofed: u64,
}

/// Runs one instance per seed, in parallel, and aggregates them in seed
/// order.
pub fn sweep(template: &ScenarioConfig, seeds: &[u64], pipeline: Pipeline) -> Result<SweepSummary, Error> {
    if seeds.is_empty() {
        return Err(Error::Invalid("sweep needs at least one seed".into()));
    }
    let mut runs = seeds
        .par_iter()
        .map(|&seed| {
            let mut cfg = template.clone();
            cfg.seed = seed;
            cfg.log_events = false;
            run_experiment(&cfg, pipeline).map(|e| (seed, e.report))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    runs.sort_by_key(|r| r.0);
    let n = runs.len() as f64;
    Ok(SweepSummary {
        success_rate: runs.iter().filter(|r| r.1.success).count() as f64 / n,
        mean_queries: runs.iter().map(|r| r.1.queries as f64).sum::<f64>() / n,
        max_queries: runs.iter().map(|r| r.1.queries).max().unwrap_or(0),
        mean_spoofed: runs.iter().map(|r| r.1.spoofed_segments as f64).sum::<f64>() / n,
        max_spoofed: runs.iter().map(|r| r.1.spoofed_segments).max().unwrap_or(0),
        runs,
    })
}

pub fn write_sweep(dir: &Path, scenario: &str, s: &SweepSummary) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    let mut w = csv::Writer::from_writer(create(&dir.join("sweep.csv"))?);
    let mut header = vec!["seed"];
    header.extend(SUMMARY_HEADER);
    w.write_record(header)?;
    for (seed, r) in &s.runs {
        let mut row = vec![seed.to_string()];
        row.extend(summary_fields(scenario, r));
        w.write_record(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    let mut w = csv::Writer::from_writer(create(&dir.join("aggregate.csv"))?);
    w.write_record(["runs", "success_rate", "mean_queries", "max_queries", "mean_spoofed", "max_spoofed"])?;
    w.write_record([
        s.runs.len().to_string(),
        float(s.success_rate),
        float(s.mean_queries),
        s.max_queries.to_string(),
        float(s.mean_spoofed),
        s.max_spoofed.to_string(),
    ])?;
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One row of a cost table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub table: u8,
    pub scenario: String,
    pub stats: crate::attacker::StageStats,
    pub success: bool,
}

/// Which scenarios feed each table.
pub fn table_configs(table: u8) -> Vec<ScenarioConfig> {
    let names: &[&str] = match table {
        1 => &["idle", "download", "upload"],
        2 => &["idle"],
        _ => &["idle-netfilter", "download-netfilter", "upload-netfilter"],
    };
    names
        .iter()
        .map(|n| ScenarioConfig::builtin(n).expect("built-in scenario"))
        .collect()
}

/// Reproduces one row: Table 1 is the port scan, Table 2 the in-window
/// search and Table 3 the acceptable-ack search. For Tables 2 and 3 the
/// port is taken as already known.
pub fn table_row(table: u8, cfg: &ScenarioConfig) -> Result<TableRow, Error> {
    let mut cfg = cfg.clone();
    let (pipeline, stage) = match table {
        1 => (Pipeline::PortOnly, Stage::PortScan),
        2 => (Pipeline::FullRfc793, Stage::InWindowSeq),
        3 => (Pipeline::FullNetfilter, Stage::AckSearch),
        _ => return Err(Error::Invalid(format!("no table {table}"))),
    };
    if table != 1 {
        let (_, truth) = build_network(&cfg)?;
        cfg.victim_port = Some(truth.port);
        cfg.attack.port_lo = truth.port;
        cfg.attack.port_hi = truth.port;
    }
    let e = run_experiment(&cfg, pipeline)?;
    let stats = e
        .report
        .stage(stage)
        .cloned()
        .ok_or_else(|| Error::Invalid(format!("stage {stage} did not run")))?;
    let success = match table {
        1 => e.report.inferred_port == Some(e.truth.port),
        2 => e.report.inwindow_seq.is_some() && e.report.success,
        _ => e.report.acceptable_ack.is_some() && e.report.success,
    };
    Ok(TableRow {
        table,
        scenario: cfg.scenario.name().to_string(),
        stats,
        success,
    })
}

pub fn write_table(path: &Path, rows: &[TableRow]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["table"];
    header.extend(SUMMARY_HEADER);
    w.write_record(header)?;
    for r in rows {
        let s = &r.stats;
        w.write_record([
            r.table.to_string(),
            r.scenario.clone(),
            format!("{:.6}", s.time_s),
            s.queries.to_string(),
            s.pings.to_string(),
            s.max_targets_per_query.to_string(),
            s.spoofed_segments.to_string(),
            s.reflected_segments.to_string(),
            r.success.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
