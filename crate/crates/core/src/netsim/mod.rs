//! Discrete-event packet simulator for a home network behind a slow uplink.

mod log;
mod network;
mod queue;
mod time;
mod topology;

pub use log::{EventKind, EventLog, EventRecord};
pub use network::{
    peer_amplification, Body, FlowDirection, FlowHandle, Network, Packet, PeerConfig, PeerStats, ProbeId,
    ProbeRecord,
};
pub use queue::{QueuePolicy, QueueState, Queued};
pub use time::{from_secs_f64, to_secs_f64, tx_time_ns, SimDuration, SimTime, NS_PER_MS, NS_PER_SEC, NS_PER_US};
pub use topology::{build_topology, LinkId, LinkSpec, NodeId, Topology, TopologyConfig};
