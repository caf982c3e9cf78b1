use std::io::Write;

use crate::netsim::time::SimTime;
use crate::netsim::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    SendSpoofed,
    SendPing,
    SendEchoReply,
    SendReflected,
    SendPeerData,
    SendBackground,
    SendRaw,
    Enqueue,
    Drop,
    Depart,
    Arrive,
    PingReply,
    ConnectionReset,
}

impl EventKind {
    pub const COUNT: usize = 13;

    pub fn name(self) -> &'static str {
        match self {
            EventKind::SendSpoofed => "send_spoofed",
            EventKind::SendPing => "send_ping",
            EventKind::SendEchoReply => "send_echo_reply",
            EventKind::SendReflected => "send_reflected",
            EventKind::SendPeerData => "send_peer_data",
            EventKind::SendBackground => "send_background",
            EventKind::SendRaw => "send_raw",
            EventKind::Enqueue => "enqueue",
            EventKind::Drop => "drop",
            EventKind::Depart => "depart",
            EventKind::Arrive => "arrive",
            EventKind::PingReply => "ping_reply",
            EventKind::ConnectionReset => "connection_reset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub time_ns: SimTime,
    pub kind: EventKind,
    pub packet_id: u64,
    pub node: NodeId,
    pub queue_occupancy_bytes: u64,
}

/// Ordered record of what happened. Counters are always kept; individual
/// records only when recording is enabled, since long scans produce tens of
/// millions of events.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    recording: bool,
    records: Vec<EventRecord>,
    counts: [u64; EventKind::COUNT],
}

impl EventLog {
    pub fn new(recording: bool) -> Self {
        EventLog {
            recording,
            ..Default::default()
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recording
    }

    pub(crate) fn push(&mut self, rec: EventRecord) {
        self.counts[rec.kind as usize] += 1;
        if self.recording {
            self.records.push(rec);
        }
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn count(&self, kind: EventKind) -> u64 {
        self.counts[kind as usize]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_ns", "event", "packet_id", "node", "queue_occupancy_bytes"])?;
        for r in &self.records {
            w.write_record([
                r.time_ns.to_string(),
                r.kind.name().to_string(),
                r.packet_id.to_string(),
                r.node.name().to_string(),
                r.queue_occupancy_bytes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
