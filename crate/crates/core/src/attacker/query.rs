use std::fmt;
use std::net::{Ipv4Addr, SocketAddrV4};

use crate::error::Error;
use crate::seqspace::Seq32;
use crate::stack::{TcpFlags, TcpSegment};

/// One spoofed segment shape; the batch repeats it `repeats_per_target`
/// times back to back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub port: u16,
    pub seq: Seq32,
    pub ack: Seq32,
    pub flags: TcpFlags,
    pub window_field: u16,
    pub payload_len: u32,
}

impl Target {
    pub fn ack_only(port: u16, seq: Seq32, ack: Seq32) -> Self {
        Target {
            port,
            seq,
            ack,
            flags: TcpFlags::ACK,
            window_field: 0,
            payload_len: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Looking for the one query that makes the victim answer.
    ExpectSpike,
    /// Looking for the one query that keeps the victim quiet; queries run
    /// strictly one after another with a drain pause in between.
    ExpectSilence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Warmup,
    PortScan,
    InWindowSeq,
    PeerSndNxt,
    VictimSndNxt,
    Inflation,
    AckSearch,
    DataProbe,
    FastRetransmit,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Warmup => "warmup",
            Stage::PortScan => "port_scan",
            Stage::InWindowSeq => "inwindow_seq",
            Stage::PeerSndNxt => "peer_snd_nxt",
            Stage::VictimSndNxt => "victim_snd_nxt",
            Stage::Inflation => "inflation",
            Stage::AckSearch => "ack_search",
            Stage::DataProbe => "data_probe",
            Stage::FastRetransmit => "fast_retransmit",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    /// Spoofed source: the victim's peer.
    pub src: SocketAddrV4,
    pub dst_ip: Ipv4Addr,
    pub targets: Vec<Target>,
    pub repeats_per_target: u32,
    pub probes: u32,
    pub mode: Mode,
    /// Extra wait between the end of the batch and the first ping.
    pub probe_offset_ns: u64,
    pub stage: Stage,
    /// Value plotted against this query (port, seq or ack).
    pub x: u64,
}

impl Query {
    pub fn validate(&self) -> Result<(), Error> {
        if self.repeats_per_target == 0 {
            return Err(Error::Invalid("repeats_per_target must be at least 1".into()));
        }
        if self.probes == 0 {
            return Err(Error::Invalid("a query needs at least one probe".into()));
        }
        Ok(())
    }

    pub fn batch_len(&self) -> u64 {
        self.targets.len() as u64 * u64::from(self.repeats_per_target)
    }

    pub fn segment(&self, t: &Target) -> TcpSegment {
        TcpSegment::new(self.src, SocketAddrV4::new(self.dst_ip, t.port), t.flags)
            .with_seq(t.seq)
            .with_ack(t.ack)
            .with_window(t.window_field)
            .with_payload(t.payload_len)
    }

    /// Every segment of the batch in send order.
    pub fn segments(&self) -> impl Iterator<Item = TcpSegment> + '_ {
        self.targets
            .iter()
            .flat_map(move |t| std::iter::repeat_n(self.segment(t), self.repeats_per_target as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Spike,
    NoSpike,
    Inconclusive,
}

impl Classification {
    pub fn name(self) -> &'static str {
        match self {
            Classification::Spike => "SPIKE",
            Classification::NoSpike => "NO_SPIKE",
            Classification::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeVerdict {
    pub query_id: u64,
    /// Mean RTT of answered probes, seconds; NaN if none answered.
    pub avg_rtt: f64,
    pub loss_rate: f64,
    pub classified: Classification,
}

impl SpikeVerdict {
    pub fn is_spike(&self) -> bool {
        self.classified == Classification::Spike
    }

    pub fn is_silent(&self) -> bool {
        self.classified == Classification::NoSpike
    }
}

/// One line of the per-query series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub query_id: u64,
    pub stage: Stage,
    pub x: u64,
    pub avg_rtt_s: f64,
    pub loss_rate: f64,
    pub classification: Classification,
}
