use std::fmt;
use std::net::Ipv4Addr;

use crate::error::Error;
use crate::netsim::queue::QueuePolicy;
use crate::netsim::time::{SimDuration, NS_PER_MS, NS_PER_US};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Attacker,
    Victim,
    Peer,
    Edge,
    Upstream,
}

impl NodeId {
    pub const ALL: [NodeId; 5] = [
        NodeId::Attacker,
        NodeId::Victim,
        NodeId::Peer,
        NodeId::Edge,
        NodeId::Upstream,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeId::Attacker => "attacker",
            NodeId::Victim => "victim",
            NodeId::Peer => "peer",
            NodeId::Edge => "edge_router",
            NodeId::Upstream => "upstream_router",
        }
    }

    pub fn addr(self) -> Ipv4Addr {
        match self {
            NodeId::Attacker => Ipv4Addr::new(192, 168, 1, 66),
            NodeId::Victim => Ipv4Addr::new(192, 168, 1, 10),
            NodeId::Peer => Ipv4Addr::new(203, 0, 113, 80),
            NodeId::Edge => Ipv4Addr::new(192, 168, 1, 1),
            NodeId::Upstream => Ipv4Addr::new(198, 51, 100, 1),
        }
    }

    pub fn by_addr(addr: Ipv4Addr) -> Option<NodeId> {
        NodeId::ALL.into_iter().find(|n| n.addr() == addr)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Directed links of the fixed topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkId {
    AttackerToEdge,
    EdgeToAttacker,
    VictimToEdge,
    EdgeToVictim,
    /// Edge router uplink: the shared bottleneck.
    Uplink,
    Downlink,
    UpstreamToPeer,
    PeerToUpstream,
    /// Path for spoofed traffic when it does not bypass the bottleneck.
    AttackerToUpstream,
}

impl LinkId {
    pub const ALL: [LinkId; 9] = [
        LinkId::AttackerToEdge,
        LinkId::EdgeToAttacker,
        LinkId::VictimToEdge,
        LinkId::EdgeToVictim,
        LinkId::Uplink,
        LinkId::Downlink,
        LinkId::UpstreamToPeer,
        LinkId::PeerToUpstream,
        LinkId::AttackerToUpstream,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn endpoints(self) -> (NodeId, NodeId) {
        use NodeId::*;
        match self {
            LinkId::AttackerToEdge => (Attacker, Edge),
            LinkId::EdgeToAttacker => (Edge, Attacker),
            LinkId::VictimToEdge => (Victim, Edge),
            LinkId::EdgeToVictim => (Edge, Victim),
            LinkId::Uplink => (Edge, Upstream),
            LinkId::Downlink => (Upstream, Edge),
            LinkId::UpstreamToPeer => (Upstream, Peer),
            LinkId::PeerToUpstream => (Peer, Upstream),
            LinkId::AttackerToUpstream => (Attacker, Upstream),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: LinkId,
    pub bandwidth_bps: u64,
    pub propagation_ns: SimDuration,
    pub queue_capacity: u64,
    pub policy: QueuePolicy,
}

/// Rates, delays and buffers of the edge-router topology.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub uplink_bps: u64,
    pub downlink_bps: u64,
    pub lan_bps: u64,
    pub internet_bps: u64,
    pub uplink_delay_ns: SimDuration,
    pub downlink_delay_ns: SimDuration,
    pub lan_delay_ns: SimDuration,
    pub internet_delay_ns: SimDuration,
    pub uplink_queue_bytes: u64,
    pub downlink_queue_bytes: u64,
    pub queue_policy: QueuePolicy,
    pub spoof_bypass: bool,
    /// Upper bound of the uniform echo-processing delay at the ping target.
    pub echo_jitter_ns: SimDuration,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            uplink_bps: 320_000,
            downlink_bps: 2_500_000,
            lan_bps: 100_000_000,
            internet_bps: 100_000_000,
            uplink_delay_ns: 9_050 * NS_PER_US,
            downlink_delay_ns: 9_050 * NS_PER_US,
            lan_delay_ns: 10 * NS_PER_US,
            internet_delay_ns: NS_PER_MS,
            uplink_queue_bytes: 64 * 1024,
            downlink_queue_bytes: 256 * 1024,
            queue_policy: QueuePolicy::FifoDropTail,
            spoof_bypass: true,
            echo_jitter_ns: 100 * NS_PER_US,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub hosts: Vec<(NodeId, Ipv4Addr)>,
    pub links: Vec<LinkSpec>,
    pub attacker_spoof_path_bypasses_bottleneck: bool,
    pub echo_jitter_ns: SimDuration,
}

impl Topology {
    pub fn link(&self, id: LinkId) -> &LinkSpec {
        &self.links[id.index()]
    }

    /// Next hop for a packet sitting at `at` on its way to `dst`.
    pub fn route(&self, at: NodeId, dst: NodeId, spoofed: bool) -> Option<LinkId> {
        use NodeId::*;
        if at == dst {
            return None;
        }
        Some(match at {
            Attacker if spoofed && !self.attacker_spoof_path_bypasses_bottleneck => LinkId::AttackerToUpstream,
            Attacker => LinkId::AttackerToEdge,
            Victim => LinkId::VictimToEdge,
            Peer => LinkId::PeerToUpstream,
            Edge => match dst {
                Attacker => LinkId::EdgeToAttacker,
                Victim => LinkId::EdgeToVictim,
                _ => LinkId::Uplink,
            },
            Upstream => match dst {
                Peer => LinkId::UpstreamToPeer,
                _ => LinkId::Downlink,
            },
        })
    }
}

/// Lays out the edge-router topology: attacker and victim on a LAN behind
/// the edge router, the ping target one hop beyond it on the uplink, and the
/// victim's peer further out.
pub fn build_topology(cfg: &TopologyConfig) -> Result<Topology, Error> {
    for (name, v) in [
        ("uplink", cfg.uplink_bps),
        ("downlink", cfg.downlink_bps),
        ("lan", cfg.lan_bps),
        ("internet", cfg.internet_bps),
    ] {
        if v == 0 {
            return Err(Error::Invalid(format!("{name} bandwidth must be positive")));
        }
    }
    for (name, v) in [("uplink", cfg.uplink_queue_bytes), ("downlink", cfg.downlink_queue_bytes)] {
        if v == 0 {
            return Err(Error::Invalid(format!("{name} queue capacity must be positive")));
        }
    }

    let unbounded = u64::MAX / 4;
    let links = LinkId::ALL
        .into_iter()
        .map(|id| {
            let (bw, delay, cap, policy) = match id {
                LinkId::Uplink => (cfg.uplink_bps, cfg.uplink_delay_ns, cfg.uplink_queue_bytes, cfg.queue_policy),
                LinkId::Downlink => (
                    cfg.downlink_bps,
                    cfg.downlink_delay_ns,
                    cfg.downlink_queue_bytes,
                    cfg.queue_policy,
                ),
                LinkId::UpstreamToPeer | LinkId::PeerToUpstream | LinkId::AttackerToUpstream => {
                    (cfg.internet_bps, cfg.internet_delay_ns, unbounded, QueuePolicy::FifoDropTail)
                }
                _ => (cfg.lan_bps, cfg.lan_delay_ns, unbounded, QueuePolicy::FifoDropTail),
            };
            LinkSpec {
                id,
                bandwidth_bps: bw,
                propagation_ns: delay,
                queue_capacity: cap,
                policy,
            }
        })
        .collect();

    Ok(Topology {
        hosts: NodeId::ALL.into_iter().map(|n| (n, n.addr())).collect(),
        links,
        attacker_spoof_path_bypasses_bottleneck: cfg.spoof_bypass,
        echo_jitter_ns: cfg.echo_jitter_ns,
    })
}
