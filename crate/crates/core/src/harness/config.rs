//! Flat `key = value` scenario files.
//!
//! `#` starts a comment. Rates take `k`/`M`/`G` suffixes (`320k`), durations
//! need a unit (`9.05ms`), byte sizes accept `KiB`/`MiB`/`kB`/`MB`. The
//! `scenario` key selects a preset that every other key then overrides,
//! wherever it appears in the file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::attacker::{AttackConfig, DetectorConfig, PortProbe, PortStrategy};
use crate::error::Error;
use crate::netsim::{PeerConfig, TopologyConfig, NS_PER_MS, NS_PER_SEC, NS_PER_US};
use crate::seqspace::{WindowSize, CONNTRACK_MIN_DEPTH};
use crate::stack::{HostModel, RstPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Idle,
    Download,
    Upload,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Idle, Scenario::Download, Scenario::Upload];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Idle => "idle",
            Scenario::Download => "download",
            Scenario::Upload => "upload",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (idle, download, upload)"))
    }
}

/// Bulk traffic the victim runs alongside the attacked session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Background {
    pub download: bool,
    pub rate_bps: u64,
    pub window_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub victim_model: HostModel,
    pub rst_policy: RstPolicy,
    /// Responses allowed per interval; `None` disables throttling.
    pub throttle: Option<(u32, u64)>,
    pub topology: TopologyConfig,
    pub background: Option<Background>,
    /// Simulated time the background flow runs before the scan starts.
    pub settle_ns: u64,
    pub window: WindowSize,
    pub seq_bits: u8,
    pub conntrack_floor: u32,
    pub server_port: u16,
    /// `None`: drawn from the seed.
    pub victim_port: Option<u16>,
    pub seed: u64,
    pub attack: AttackConfig,
    /// `None`: use the scale of the session's window.
    pub assumed_scale: Option<u8>,
    /// `None`: the session's effective window.
    pub data_window: Option<u64>,
    /// `None`: chosen from the victim model.
    pub port_probe: Option<PortProbe>,
    pub detector: DetectorConfig,
    pub peer: PeerConfig,
    pub log_events: bool,
}

/// Background window that keeps about 680 ms of data standing in the
/// bottleneck buffer on top of the path's bandwidth-delay product.
fn standing_window(bottleneck_bps: u64) -> u64 {
    let standing = bottleneck_bps * 680 / 8 / 1000;
    let bdp = bottleneck_bps * 21 / 8 / 1000;
    standing + bdp
}

impl ScenarioConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let mut topology = TopologyConfig::default();
        let mut attack = AttackConfig::default();
        let detector = DetectorConfig::default();
        let mut background = None;
        let mut settle_ns = 0;
        match scenario {
            Scenario::Idle => {
                // room for a 1000-ACK burst without overflow
                topology.uplink_queue_bytes = 96 * 1024;
            }
            Scenario::Download | Scenario::Upload => {
                attack.ports_per_query = 100;
                attack.segments_per_target = 1000;
                attack.pings_per_query = 10;
                attack.silence_pings_per_query = 10;
                settle_ns = 5 * NS_PER_SEC;
                let download = scenario == Scenario::Download;
                if !download {
                    topology.uplink_queue_bytes = 128 * 1024;
                }
                let bottleneck = if download {
                    topology.downlink_bps
                } else {
                    topology.uplink_bps
                };
                background = Some(Background {
                    download,
                    rate_bps: bottleneck,
                    window_bytes: standing_window(bottleneck),
                });
            }
        }
        ScenarioConfig {
            scenario,
            victim_model: HostModel::Rfc793Bare,
            rst_policy: RstPolicy::Rfc793,
            throttle: None,
            topology,
            background,
            settle_ns,
            window: WindowSize::new(16384, 2).expect("valid window"),
            seq_bits: 32,
            conntrack_floor: CONNTRACK_MIN_DEPTH,
            server_port: 80,
            victim_port: None,
            seed: 1,
            attack,
            assumed_scale: None,
            data_window: None,
            port_probe: None,
            detector,
            peer: PeerConfig::default(),
            log_events: false,
        }
    }

    /// Parses a scenario file. A missing path that names a built-in
    /// scenario loads that instead.
    pub fn load(path: &Path) -> Result<Self, Error> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text, &path.display().to_string()),
            Err(e) => match path.to_str().and_then(builtin_text) {
                Some(text) => Self::parse(text, path.to_str().unwrap_or_default()),
                None => Err(Error::Invalid(format!(
                    "{}: {e}, and no built-in scenario has that name",
                    path.display()
                ))),
            },
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        builtin_text(name).map(|t| Self::parse(t, name).expect("built-in scenarios parse"))
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, Error> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |key: &str, msg: String| Error::Config {
                path: origin.to_string(),
                line: i + 1,
                key: key.to_string(),
                msg,
            };
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(line, "expected `key = value`".into()));
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(k, "unknown key".into()));
            }
            if v.is_empty() {
                return Err(err(k, "missing value".into()));
            }
            entries.push((i + 1, k, v));
        }

        let mut cfg = ScenarioConfig::preset(Scenario::Idle);
        if let Some(&(line, k, v)) = entries.iter().rev().find(|e| e.1 == "scenario") {
            let s = v.parse::<Scenario>().map_err(|msg| Error::Config {
                path: origin.to_string(),
                line,
                key: k.to_string(),
                msg,
            })?;
            cfg = ScenarioConfig::preset(s);
        }
        for (line, k, v) in entries {
            cfg.apply(k, v).map_err(|msg| Error::Config {
                path: origin.to_string(),
                line,
                key: k.to_string(),
                msg,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), String> {
        let t = &mut self.topology;
        let a = &mut self.attack;
        let d = &mut self.detector;
        match key {
            "scenario" => {}
            "victim_model" => self.victim_model = v.parse()?,
            "rst_policy" => {
                self.rst_policy = match v {
                    "rfc793" => RstPolicy::Rfc793,
                    "strict" => RstPolicy::StrictChallenge,
                    _ => return Err(format!("unknown rst policy `{v}` (rfc793, strict)")),
                }
            }
            "throttle" => {
                self.throttle = if v == "off" {
                    None
                } else {
                    let (n, per) = v
                        .split_once('/')
                        .ok_or("expected `N/interval`, e.g. `1/100ms`, or `off`")?;
                    let n: u32 = int(n)?;
                    let per = duration(per)?;
                    if n == 0 || per == 0 {
                        return Err("throttle needs a positive count and interval".into());
                    }
                    Some((n, per))
                }
            }
            "uplink" => t.uplink_bps = positive(rate(v)?)?,
            "downlink" => t.downlink_bps = positive(rate(v)?)?,
            "lan" => t.lan_bps = positive(rate(v)?)?,
            "internet" => t.internet_bps = positive(rate(v)?)?,
            "uplink_delay" => t.uplink_delay_ns = duration(v)?,
            "downlink_delay" => t.downlink_delay_ns = duration(v)?,
            "lan_delay" => t.lan_delay_ns = duration(v)?,
            "internet_delay" => t.internet_delay_ns = duration(v)?,
            "uplink_queue" => t.uplink_queue_bytes = positive(bytes(v)?)?,
            "downlink_queue" => t.downlink_queue_bytes = positive(bytes(v)?)?,
            "queue_policy" => t.queue_policy = v.parse()?,
            "spoof_bypass" => t.spoof_bypass = boolean(v)?,
            "echo_jitter" => t.echo_jitter_ns = duration(v)?,
            "background" => {
                self.background = match v {
                    "none" => None,
                    "download" | "upload" => {
                        let download = v == "download";
                        let bottleneck = if download { t.downlink_bps } else { t.uplink_bps };
                        Some(Background {
                            download,
                            rate_bps: bottleneck,
                            window_bytes: standing_window(bottleneck),
                        })
                    }
                    _ => return Err(format!("unknown background `{v}` (none, download, upload)")),
                }
            }
            "background_rate" => match self.background.as_mut() {
                Some(b) => b.rate_bps = rate(v)?,
                None => return Err("set `background` first".into()),
            },
            "background_window" => match self.background.as_mut() {
                Some(b) => b.window_bytes = positive(bytes(v)?)?,
                None => return Err("set `background` first".into()),
            },
            "settle" => self.settle_ns = duration(v)?,
            "window_field" => self.window = WindowSize::new(int(v)?, self.window.scale()).map_err(|e| e.to_string())?,
            "window_scale" => self.window = WindowSize::new(self.window.field(), int(v)?).map_err(|e| e.to_string())?,
            "seq_bits" => self.seq_bits = int(v)?,
            "conntrack_floor" => self.conntrack_floor = int(v)?,
            "server_port" => self.server_port = positive(int(v)?)?,
            "victim_port" => {
                self.victim_port = match v {
                    "random" => None,
                    _ => Some(positive(int(v)?)?),
                }
            }
            "seed" => self.seed = int(v)?,
            "port_lo" => a.port_lo = positive(int(v)?)?,
            "port_hi" => a.port_hi = positive(int(v)?)?,
            "port_strategy" => {
                a.port_strategy = match v {
                    "range" => PortStrategy::Range,
                    "sequential" => PortStrategy::Sequential,
                    _ => return Err(format!("unknown port strategy `{v}` (range, sequential)")),
                }
            }
            "port_probe" => {
                self.port_probe = match v {
                    "auto" => None,
                    "ack" => Some(PortProbe::OutOfWindowAck),
                    "synack" => Some(PortProbe::SynAck),
                    "fast_retransmit" => Some(PortProbe::FastRetransmit),
                    _ => return Err(format!("unknown port probe `{v}` (auto, ack, synack, fast_retransmit)")),
                }
            }
            "ports_per_query" => a.ports_per_query = positive(int(v)?)?,
            "segments_per_target" => a.segments_per_target = positive(int(v)?)?,
            "pings_per_query" => a.pings_per_query = positive(int(v)?)?,
            "silence_pings_per_query" => a.silence_pings_per_query = positive(int(v)?)?,
            "ack_values_per_query" => a.ack_values_per_query = positive(int(v)?)?,
            "data_values_per_query" => a.data_values_per_query = positive(int(v)?)?,
            "assumed_window" => a.assumed_window = positive(bytes(v)?)?,
            "min_window" => a.min_window = positive(bytes(v)?)?,
            "data_window" => {
                self.data_window = match v {
                    "auto" => None,
                    _ => Some(positive(bytes(v)?)?),
                }
            }
            "assumed_scale" => {
                self.assumed_scale = match v {
                    "auto" => None,
                    _ => {
                        let s: u8 = int(v)?;
                        WindowSize::new(0xFFFF, s).map_err(|e| e.to_string())?;
                        Some(s)
                    }
                }
            }
            "use_inflation" => a.use_inflation = boolean(v)?,
            "confirm_votes" => a.confirm_votes = positive(int(v)?)?,
            "max_retries" => a.max_retries = int(v)?,
            "dup_acks" => a.dup_acks = positive(int(v)?)?,
            "spike_factor" => d.spike_factor = fraction(v, 1.0, f64::INFINITY)?,
            "loss_threshold" => d.loss_threshold = fraction(v, 0.0, 1.0)?,
            "warmup_pings" => d.warmup_pings = positive(int(v)?)?,
            "ping_bytes" => d.ping_bytes = positive(int(v)?)?,
            "ping_interval" => d.ping_interval_ns = duration(v)?,
            "baseline_window" => d.baseline_window = positive(int(v)?)?,
            "drain_factor" => d.drain_factor = fraction(v, 0.0, f64::INFINITY)?,
            "peer_fast_retransmit" => self.peer.fast_retransmit = boolean(v)?,
            "mtu" => self.peer.mtu = positive(int(v)?)?,
            "log_events" => self.log_events = boolean(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: String| Err(Error::Invalid(m));
        if self.attack.port_lo > self.attack.port_hi {
            return bad(format!(
                "port_lo {} is above port_hi {}",
                self.attack.port_lo, self.attack.port_hi
            ));
        }
        if let Some(p) = self.victim_port {
            if p < self.attack.port_lo || p > self.attack.port_hi {
                return bad(format!("victim_port {p} lies outside the scanned port range"));
            }
        }
        if !(8..=32).contains(&self.seq_bits) {
            return bad(format!("seq_bits must be within 8..=32, got {}", self.seq_bits));
        }
        if u64::from(self.conntrack_floor) >= 1u64 << self.seq_bits {
            return bad("conntrack_floor does not fit the sequence space".into());
        }
        if self.window.effective() >= 1u64 << (self.seq_bits - 1) {
            return bad("window must be below half the sequence space".into());
        }
        crate::netsim::build_topology(&self.topology)?;
        Ok(())
    }

    /// Port-probe shape for this victim: SYN+ACK through conntrack, Fast
    /// Retransmit where wrong ports answer with RST, plain ACK otherwise.
    pub fn effective_port_probe(&self) -> PortProbe {
        self.port_probe.unwrap_or(match self.victim_model {
            HostModel::LinuxNetfilter => PortProbe::SynAck,
            HostModel::ClosedPortRst => PortProbe::FastRetransmit,
            HostModel::Rfc793Bare | HostModel::WinXpFirewall => PortProbe::OutOfWindowAck,
        })
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "victim_model",
    "rst_policy",
    "throttle",
    "uplink",
    "downlink",
    "lan",
    "internet",
    "uplink_delay",
    "downlink_delay",
    "lan_delay",
    "internet_delay",
    "uplink_queue",
    "downlink_queue",
    "queue_policy",
    "spoof_bypass",
    "echo_jitter",
    "background",
    "background_rate",
    "background_window",
    "settle",
    "window_field",
    "window_scale",
    "seq_bits",
    "conntrack_floor",
    "server_port",
    "victim_port",
    "seed",
    "port_lo",
    "port_hi",
    "port_strategy",
    "port_probe",
    "ports_per_query",
    "segments_per_target",
    "pings_per_query",
    "silence_pings_per_query",
    "ack_values_per_query",
    "data_values_per_query",
    "assumed_window",
    "min_window",
    "data_window",
    "assumed_scale",
    "use_inflation",
    "confirm_votes",
    "max_retries",
    "dup_acks",
    "spike_factor",
    "loss_threshold",
    "warmup_pings",
    "ping_bytes",
    "ping_interval",
    "baseline_window",
    "drain_factor",
    "peer_fast_retransmit",
    "mtu",
    "log_events",
];

pub const BUILTIN: &[(&str, &str)] = &[
    ("idle", include_str!("../../configs/idle.conf")),
    ("download", include_str!("../../configs/download.conf")),
    ("upload", include_str!("../../configs/upload.conf")),
    ("idle-netfilter", include_str!("../../configs/idle-netfilter.conf")),
    ("download-netfilter", include_str!("../../configs/download-netfilter.conf")),
    ("upload-netfilter", include_str!("../../configs/upload-netfilter.conf")),
];

fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn int<T: FromStr>(v: &str) -> Result<T, String> {
    v.replace('_', "")
        .parse()
        .map_err(|_| format!("`{v}` is not a valid integer here"))
}

fn positive<T: PartialEq + Default + fmt::Display>(v: T) -> Result<T, String> {
    if v == T::default() {
        Err(format!("must be positive, got {v}"))
    } else {
        Ok(v)
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn fraction(v: &str, lo: f64, hi: f64) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    if x.is_nan() || x < lo || x > hi {
        return Err(format!("{v} outside [{lo}, {hi}]"));
    }
    Ok(x)
}

fn split_unit(v: &str) -> (f64, &str) {
    let cut = v
        .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '_'))
        .unwrap_or(v.len());
    let num = v[..cut].replace('_', "").parse().unwrap_or(f64::NAN);
    (num, v[cut..].trim())
}

fn scaled(v: &str, units: &[(&str, f64)]) -> Result<u64, String> {
    let (x, unit) = split_unit(v);
    let mult = units
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, m)| *m)
        .ok_or_else(|| {
            let names: Vec<_> = units.iter().map(|(u, _)| if u.is_empty() { "(none)" } else { u }).collect();
            format!("`{v}`: expected a number with unit {}", names.join(", "))
        })?;
    if x.is_nan() || x < 0.0 {
        return Err(format!("`{v}` is not a valid quantity"));
    }
    Ok((x * mult).round() as u64)
}

fn rate(v: &str) -> Result<u64, String> {
    scaled(v, &[("", 1.0), ("k", 1e3), ("M", 1e6), ("G", 1e9)])
}

fn duration(v: &str) -> Result<u64, String> {
    scaled(
        v,
        &[
            ("ns", 1.0),
            ("us", NS_PER_US as f64),
            ("ms", NS_PER_MS as f64),
            ("s", NS_PER_SEC as f64),
        ],
    )
}

fn bytes(v: &str) -> Result<u64, String> {
    scaled(
        v,
        &[("", 1.0), ("B", 1.0), ("KiB", 1024.0), ("MiB", 1048576.0), ("kB", 1e3), ("MB", 1e6)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_idle_rfc793() {
        let c = ScenarioConfig::parse("", "t").unwrap();
        assert_eq!(c.scenario, Scenario::Idle);
        assert_eq!(c.victim_model, HostModel::Rfc793Bare);
        assert_eq!(c.window.effective(), 65536);
        assert_eq!(c.topology.uplink_bps, 320_000);
        assert!(c.background.is_none());
    }

    #[test]
    fn idle_netfilter_builtin() {
        let c = ScenarioConfig::builtin("idle-netfilter").unwrap();
        assert_eq!(c.victim_model, HostModel::LinuxNetfilter);
        assert_eq!(c.window.effective(), 14592);
        assert_eq!(c.window.scale(), 7);
        assert_eq!(c.topology.downlink_bps, 2_500_000);
    }

    #[test]
    fn zero_uplink_names_line_and_key() {
        let err = ScenarioConfig::parse("# rates\nuplink = 0\n", "t.conf").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains("t.conf:2") && msg.contains("uplink"), "{msg}");
    }

    #[test]
    fn unknown_key_and_malformed_line() {
        let e = ScenarioConfig::parse("bogus = 1", "t").unwrap_err().to_string();
        assert!(e.contains("bogus") && e.contains("unknown key"), "{e}");
        let e = ScenarioConfig::parse("\n\nuplink 320k", "t").unwrap_err().to_string();
        assert!(e.contains("t:3"), "{e}");
        let e = ScenarioConfig::parse("uplink_delay = 9", "t").unwrap_err().to_string();
        assert!(e.contains("uplink_delay"), "{e}");
    }

    #[test]
    fn scenario_preset_applies_regardless_of_position() {
        let c = ScenarioConfig::parse("pings_per_query = 7\nscenario = upload\n", "t").unwrap();
        assert_eq!(c.scenario, Scenario::Upload);
        assert_eq!(c.attack.pings_per_query, 7);
        assert_eq!(c.attack.segments_per_target, 1000);
        assert!(c.background.is_some_and(|b| !b.download));
    }

    #[test]
    fn units() {
        assert_eq!(rate("2500k"), Ok(2_500_000));
        assert_eq!(duration("9.05ms"), Ok(9_050_000));
        assert_eq!(bytes("64KiB"), Ok(65536));
        assert!(duration("9").is_err());
        let c = ScenarioConfig::parse("throttle = 1/100ms", "t").unwrap();
        assert_eq!(c.throttle, Some((1, 100 * NS_PER_MS)));
    }

    #[test]
    fn every_builtin_parses() {
        for (name, _) in BUILTIN {
            assert!(ScenarioConfig::builtin(name).is_some(), "{name}");
        }
    }
}
