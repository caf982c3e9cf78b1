//! The event engine: links with serialization and propagation, store-and-
//! forward routers, the victim host, an echo responder, the victim's peer and
//! optional background flows.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netsim::log::{EventKind, EventLog, EventRecord};
use crate::netsim::queue::{QueueState, Queued};
use crate::netsim::time::{tx_time_ns, SimDuration, SimTime, NS_PER_MS};
#[cfg(test)]
use crate::netsim::time::NS_PER_SEC;
use crate::netsim::topology::{LinkId, LinkSpec, NodeId, Topology};
use crate::seqspace::Seq32;
use crate::stack::{host_process, Disposition, HostModel, HostState, TcpFlags, TcpSegment, IP_TCP_HEADER_BYTES};

pub type ProbeId = u32;

/// How long a background sender takes to notice a dropped packet.
const BG_LOSS_DETECT_NS: SimDuration = 50 * NS_PER_MS;

const BG_PACKET_BYTES: u32 = 1500;
const ACK_BYTES: u32 = 80;
const L2_BYTES: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    Spoofed(TcpSegment),
    Reflected(TcpSegment),
    EchoRequest(ProbeId),
    EchoReply(ProbeId),
    BgData { flow: u8 },
    BgAck { flow: u8, cum: u64 },
    PeerData,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u32,
    pub body: Body,
}

impl Queued for Packet {
    fn bytes(&self) -> u64 {
        u64::from(self.size)
    }
    fn lane(&self) -> NodeId {
        self.src
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeRecord {
    pub probe_id: ProbeId,
    pub send_time: SimTime,
    pub recv_time: Option<SimTime>,
    pub rtt: Option<SimDuration>,
    pub lost: bool,
}

impl ProbeRecord {
    /// Applies a loss deadline: a reply later than `deadline` (or none at
    /// all) marks the probe lost and clears its receive time.
    pub fn with_deadline(mut self, deadline: SimTime) -> Self {
        match self.recv_time {
            Some(t) if t <= deadline => {}
            _ => {
                self.recv_time = None;
                self.rtt = None;
                self.lost = true;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowDirection {
    Download,
    Upload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FlowHandle(pub u8);

#[derive(Debug, Clone)]
struct BgFlow {
    sender: NodeId,
    receiver: NodeId,
    window: u64,
    pace_ns: SimDuration,
    sent: u64,
    acked: u64,
    lost: u64,
    next_allowed: SimTime,
    blocked: bool,
    recv_bytes: u64,
    recv_pkts: u64,
}

impl BgFlow {
    fn inflight(&self) -> u64 {
        self.sent - self.acked.min(self.sent) - self.lost
    }
}

/// Behaviour of the victim's peer toward ACKs reflected at it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeerConfig {
    /// The peer has outstanding data and runs Fast Retransmit.
    pub fast_retransmit: bool,
    pub mtu: u32,
    pub dupack_threshold: u32,
    /// A pause this long between duplicates ends a recovery episode.
    pub recovery_gap_ns: SimDuration,
}

impl Default for PeerConfig {
    fn default() -> Self {
        PeerConfig {
            fast_retransmit: false,
            mtu: 1500,
            dupack_threshold: 3,
            recovery_gap_ns: 50 * NS_PER_MS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PeerStats {
    pub dup_acks: u64,
    pub retransmits: u64,
    pub new_segments: u64,
    pub data_bytes: u64,
    pub rst_absorbed: u64,
}

#[derive(Debug, Clone)]
struct Peer {
    cfg: PeerConfig,
    snd_una: Seq32,
    dup_count: u32,
    last_dup: Option<SimTime>,
    stats: PeerStats,
}

#[derive(Debug)]
struct Link {
    spec: LinkSpec,
    queue: QueueState<Packet>,
    in_service: Option<Packet>,
}

#[derive(Debug)]
enum Action {
    Emit(NodeId, Packet, EventKind),
    Arrive(NodeId, Packet),
    TxDone(LinkId),
    BgSend(u8),
    BgLoss(u8, u32),
}

#[derive(Debug)]
struct Scheduled {
    time: SimTime,
    seq: u64,
    action: Action,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // min-heap on (time, insertion order)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug)]
pub struct Network {
    topo: Topology,
    now: SimTime,
    events: BinaryHeap<Scheduled>,
    next_seq: u64,
    next_packet: u64,
    links: Vec<Link>,
    model: HostModel,
    host: HostState,
    peer: Peer,
    flows: Vec<BgFlow>,
    probes: Vec<(SimTime, Option<SimTime>)>,
    rng: ChaCha8Rng,
    log: EventLog,
}

impl Network {
    pub fn new(topo: Topology, model: HostModel, host: HostState, peer: PeerConfig, seed: u64, record: bool) -> Self {
        let links = topo
            .links
            .iter()
            .map(|spec| Link {
                spec: spec.clone(),
                queue: QueueState::new(spec.policy, spec.queue_capacity),
                in_service: None,
            })
            .collect();
        let snd_una = host.endpoint.rcv_nxt;
        Network {
            topo,
            now: 0,
            events: BinaryHeap::new(),
            next_seq: 0,
            next_packet: 0,
            links,
            model,
            host,
            peer: Peer {
                cfg: peer,
                snd_una,
                dup_count: 0,
                last_dup: None,
                stats: PeerStats::default(),
            },
            flows: Vec::new(),
            probes: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ec40),
            log: EventLog::new(record),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn model(&self) -> HostModel {
        self.model
    }

    pub fn host(&self) -> &HostState {
        &self.host
    }

    pub fn host_mut(&mut self) -> &mut HostState {
        &mut self.host
    }

    pub fn peer_stats(&self) -> &PeerStats {
        &self.peer.stats
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn count(&self, kind: EventKind) -> u64 {
        self.log.count(kind)
    }

    pub fn queue_occupancy(&self, link: LinkId) -> u64 {
        self.links[link.index()].queue.occupancy()
    }

    pub fn pending_events(&self) -> usize {
        self.events.len()
    }

    pub fn next_event_time(&self) -> Option<SimTime> {
        self.events.peek().map(|e| e.time)
    }

    fn schedule(&mut self, time: SimTime, action: Action) {
        debug_assert!(time >= self.now);
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(Scheduled { time, seq, action });
    }

    fn packet(&mut self, src: NodeId, dst: NodeId, size: u32, body: Body) -> Packet {
        let id = self.next_packet;
        self.next_packet += 1;
        Packet {
            id,
            src,
            dst,
            size,
            body,
        }
    }

    fn record(&mut self, kind: EventKind, packet_id: u64, node: NodeId, occupancy: u64) {
        self.log.push(EventRecord {
            time_ns: self.now,
            kind,
            packet_id,
            node,
            queue_occupancy_bytes: occupancy,
        });
    }

    fn emit_at(&mut self, at: SimTime, node: NodeId, pkt: Packet, kind: EventKind) {
        if at <= self.now {
            self.emit(node, pkt, kind);
        } else {
            self.schedule(at, Action::Emit(node, pkt, kind));
        }
    }

    /// Schedules a spoofed segment to leave the attacker at `at`.
    pub fn inject_spoofed(&mut self, at: SimTime, seg: TcpSegment) -> u64 {
        let pkt = self.packet(NodeId::Attacker, NodeId::Victim, seg.wire_size(), Body::Spoofed(seg));
        let id = pkt.id;
        self.emit_at(at, NodeId::Attacker, pkt, EventKind::SendSpoofed);
        id
    }

    /// Schedules an echo request from `from` to `to`; the record completes
    /// when the reply reaches `from`.
    pub fn send_ping_probe(&mut self, from: NodeId, to: NodeId, size: u32, at: SimTime) -> ProbeId {
        let probe = self.probes.len() as ProbeId;
        self.probes.push((at.max(self.now), None));
        let pkt = self.packet(from, to, size, Body::EchoRequest(probe));
        self.emit_at(at, from, pkt, EventKind::SendPing);
        probe
    }

    /// Schedules an opaque packet, for exercising links and queues.
    pub fn send_raw(&mut self, at: SimTime, from: NodeId, to: NodeId, size: u32) -> u64 {
        let pkt = self.packet(from, to, size, Body::Raw);
        let id = pkt.id;
        self.emit_at(at, from, pkt, EventKind::SendRaw);
        id
    }

    pub fn probe(&self, id: ProbeId) -> ProbeRecord {
        let (send, recv) = self.probes[id as usize];
        ProbeRecord {
            probe_id: id,
            send_time: send,
            recv_time: recv,
            rtt: recv.map(|r| r - send),
            lost: false,
        }
    }

    pub fn probe_answered(&self, id: ProbeId) -> bool {
        self.probes[id as usize].1.is_some()
    }

    /// Starts a window-limited bulk flow across the bottleneck in
    /// `direction`.
    ///
    /// The flow keeps at most `window_bytes` unacknowledged and paces sends
    /// at `rate_bps`; a rate at or above the bottleneck rate saturates it,
    /// in which case the sender is paced only by its access link. The
    /// receiver returns one ACK per two data packets. A rate of zero starts
    /// nothing.
    pub fn start_background_flow(
        &mut self,
        direction: FlowDirection,
        rate_bps: u64,
        window_bytes: u64,
    ) -> Option<FlowHandle> {
        if rate_bps == 0 || window_bytes == 0 {
            return None;
        }
        let (sender, receiver, bottleneck, access) = match direction {
            FlowDirection::Download => (NodeId::Peer, NodeId::Victim, LinkId::Downlink, LinkId::PeerToUpstream),
            FlowDirection::Upload => (NodeId::Victim, NodeId::Peer, LinkId::Uplink, LinkId::VictimToEdge),
        };
        let bottleneck_bps = self.topo.link(bottleneck).bandwidth_bps;
        let pace_bps = if rate_bps >= bottleneck_bps {
            self.topo.link(access).bandwidth_bps
        } else {
            rate_bps
        };
        let handle = self.flows.len() as u8;
        self.flows.push(BgFlow {
            sender,
            receiver,
            window: window_bytes.max(2 * u64::from(BG_PACKET_BYTES)),
            pace_ns: tx_time_ns(u64::from(BG_PACKET_BYTES), pace_bps),
            sent: 0,
            acked: 0,
            lost: 0,
            next_allowed: self.now,
            blocked: false,
            recv_bytes: 0,
            recv_pkts: 0,
        });
        self.schedule(self.now, Action::BgSend(handle));
        Some(FlowHandle(handle))
    }

    /// Processes every event with timestamp `<= t` and advances the clock
    /// to `t`. Returns the records appended meanwhile (empty unless the log
    /// is recording).
    pub fn run_until(&mut self, t: SimTime) -> &[EventRecord] {
        let start = self.log.records().len();
        while let Some(ev) = self.events.peek() {
            if ev.time > t {
                break;
            }
            let ev = self.events.pop().expect("peeked");
            self.now = ev.time;
            self.dispatch(ev.action);
        }
        if t > self.now {
            self.now = t;
        }
        &self.log.records()[start..]
    }

    /// Processes events up to `limit` while `keep_going` holds. The clock
    /// ends at the last processed event, or at `limit` if the predicate
    /// still holds once nothing earlier is pending.
    pub fn run_while(&mut self, limit: SimTime, mut keep_going: impl FnMut(&Network) -> bool) {
        loop {
            if !keep_going(self) {
                return;
            }
            match self.events.peek() {
                Some(ev) if ev.time <= limit => {
                    let ev = self.events.pop().expect("peeked");
                    self.now = ev.time;
                    self.dispatch(ev.action);
                }
                _ => {
                    if limit > self.now {
                        self.now = limit;
                    }
                    return;
                }
            }
        }
    }

    fn dispatch(&mut self, action: Action) {
        match action {
            Action::Emit(node, pkt, kind) => self.emit(node, pkt, kind),
            Action::Arrive(node, pkt) => self.arrive(node, pkt),
            Action::TxDone(link) => self.tx_done(link),
            Action::BgSend(flow) => self.bg_send(flow),
            Action::BgLoss(flow, bytes) => {
                self.flows[flow as usize].lost += u64::from(bytes);
                self.bg_wake(flow);
            }
        }
    }

    fn emit(&mut self, node: NodeId, pkt: Packet, kind: EventKind) {
        self.record(kind, pkt.id, node, 0);
        self.forward(node, pkt);
    }

    fn forward(&mut self, node: NodeId, pkt: Packet) {
        let spoofed = matches!(pkt.body, Body::Spoofed(_));
        match self.topo.route(node, pkt.dst, spoofed) {
            Some(link) => self.enqueue(link, pkt),
            None => self.deliver(node, pkt),
        }
    }

    fn enqueue(&mut self, link_id: LinkId, pkt: Packet) {
        let from = link_id.endpoints().0;
        let link = &mut self.links[link_id.index()];
        if link.in_service.is_none() {
            if link.queue.admit_in_service(&pkt) {
                let tx = tx_time_ns(u64::from(pkt.size), link.spec.bandwidth_bps);
                let occ = link.queue.occupancy();
                link.in_service = Some(pkt);
                self.record(EventKind::Enqueue, pkt.id, from, occ);
                self.schedule(self.now + tx, Action::TxDone(link_id));
                return;
            }
        } else {
            match link.queue.offer(pkt) {
                Ok(()) => {
                    let occ = link.queue.occupancy();
                    self.record(EventKind::Enqueue, pkt.id, from, occ);
                    return;
                }
                Err(_) => {}
            }
        }
        let occ = self.links[link_id.index()].queue.occupancy();
        self.record(EventKind::Drop, pkt.id, from, occ);
        if let Body::BgData { flow } = pkt.body {
            self.schedule(self.now + BG_LOSS_DETECT_NS, Action::BgLoss(flow, pkt.size));
        }
    }

    fn tx_done(&mut self, link_id: LinkId) {
        let (from, to) = link_id.endpoints();
        let link = &mut self.links[link_id.index()];
        let pkt = link.in_service.take().expect("transmission in progress");
        link.queue.release(&pkt);
        let prop = link.spec.propagation_ns;
        let occ = link.queue.occupancy();
        let next = link.queue.pop();
        let next_tx = next.map(|p| tx_time_ns(u64::from(p.size), link.spec.bandwidth_bps));
        link.in_service = next;
        self.record(EventKind::Depart, pkt.id, from, occ);
        self.schedule(self.now + prop, Action::Arrive(to, pkt));
        if let Some(tx) = next_tx {
            self.schedule(self.now + tx, Action::TxDone(link_id));
        }
    }

    fn arrive(&mut self, node: NodeId, pkt: Packet) {
        self.record(EventKind::Arrive, pkt.id, node, 0);
        if pkt.dst == node {
            self.deliver(node, pkt);
        } else {
            self.forward(node, pkt);
        }
    }

    fn deliver(&mut self, node: NodeId, pkt: Packet) {
        match pkt.body {
            Body::Spoofed(seg) => {
                if node == NodeId::Victim {
                    self.victim_receive(seg);
                }
            }
            Body::Reflected(seg) => {
                if node == NodeId::Peer {
                    self.peer_receive(seg);
                }
            }
            Body::EchoRequest(probe) => {
                let jitter = match self.topo.echo_jitter_ns {
                    0 => 0,
                    j => self.rng.gen_range(0..=j),
                };
                let reply = self.packet(node, pkt.src, pkt.size, Body::EchoReply(probe));
                let at = self.now + jitter;
                self.emit_at(at, node, reply, EventKind::SendEchoReply);
            }
            Body::EchoReply(probe) => {
                let slot = &mut self.probes[probe as usize];
                if slot.1.is_none() {
                    slot.1 = Some(self.now);
                }
                self.record(EventKind::PingReply, pkt.id, node, 0);
            }
            Body::BgData { flow } => self.bg_receive(flow, pkt.size),
            Body::BgAck { flow, cum } => {
                let f = &mut self.flows[flow as usize];
                f.acked = f.acked.max(cum);
                self.bg_wake(flow);
            }
            Body::PeerData | Body::Raw => {}
        }
    }

    fn victim_receive(&mut self, seg: TcpSegment) {
        let verdict = host_process(self.model, &mut self.host, &seg, self.now);
        if verdict.disposition == Disposition::ConnectionReset {
            self.record(EventKind::ConnectionReset, 0, NodeId::Victim, 0);
        }
        if let Some(resp) = verdict.response {
            let dst = NodeId::by_addr(*resp.dst.ip()).unwrap_or(NodeId::Peer);
            let pkt = self.packet(NodeId::Victim, dst, resp.wire_size(), Body::Reflected(resp));
            self.emit(NodeId::Victim, pkt, EventKind::SendReflected);
        }
    }

    fn peer_receive(&mut self, seg: TcpSegment) {
        let ep = &self.host.endpoint;
        let ours = seg.src == ep.local && seg.dst == ep.remote;
        if seg.has(TcpFlags::RST) || !ours {
            self.peer.stats.rst_absorbed += u64::from(seg.has(TcpFlags::RST));
            return;
        }
        if !self.peer.cfg.fast_retransmit || !seg.has(TcpFlags::ACK) || seg.ack != self.peer.snd_una {
            return;
        }
        let peer = &mut self.peer;
        let fresh = peer
            .last_dup
            .is_none_or(|t| self.now - t > peer.cfg.recovery_gap_ns);
        if fresh {
            peer.dup_count = 0;
        }
        peer.last_dup = Some(self.now);
        peer.dup_count += 1;
        peer.stats.dup_acks += 1;
        if peer.dup_count < peer.cfg.dupack_threshold {
            return;
        }
        if peer.dup_count == peer.cfg.dupack_threshold {
            peer.stats.retransmits += 1;
        } else {
            peer.stats.new_segments += 1;
        }
        let size = peer.cfg.mtu + L2_BYTES;
        peer.stats.data_bytes += u64::from(peer.cfg.mtu);
        let pkt = self.packet(NodeId::Peer, NodeId::Victim, size, Body::PeerData);
        self.emit(NodeId::Peer, pkt, EventKind::SendPeerData);
    }

    fn bg_send(&mut self, flow: u8) {
        let f = &mut self.flows[flow as usize];
        if self.now < f.next_allowed {
            let at = f.next_allowed;
            self.schedule(at, Action::BgSend(flow));
            return;
        }
        if f.inflight() + u64::from(BG_PACKET_BYTES) > f.window {
            f.blocked = true;
            return;
        }
        f.sent += u64::from(BG_PACKET_BYTES);
        f.next_allowed = self.now + f.pace_ns;
        let (sender, receiver, next) = (f.sender, f.receiver, f.next_allowed);
        let pkt = self.packet(sender, receiver, BG_PACKET_BYTES, Body::BgData { flow });
        self.emit(sender, pkt, EventKind::SendBackground);
        self.schedule(next, Action::BgSend(flow));
    }

    fn bg_wake(&mut self, flow: u8) {
        let f = &mut self.flows[flow as usize];
        if f.blocked {
            f.blocked = false;
            let at = f.next_allowed.max(self.now);
            self.schedule(at, Action::BgSend(flow));
        }
    }

    fn bg_receive(&mut self, flow: u8, size: u32) {
        let f = &mut self.flows[flow as usize];
        f.recv_bytes += u64::from(size);
        f.recv_pkts += 1;
        if f.recv_pkts % 2 == 0 {
            let (from, to, cum) = (f.receiver, f.sender, f.recv_bytes);
            let pkt = self.packet(from, to, ACK_BYTES, Body::BgAck { flow, cum });
            self.emit(from, pkt, EventKind::SendBackground);
        }
    }
}

/// Bytes of data per byte of duplicate ACK the simulated peer releases once
/// Fast Retransmit is engaged, measured at the IP layer.
pub fn peer_amplification(cfg: &PeerConfig) -> u64 {
    u64::from(cfg.mtu) / u64::from(IP_TCP_HEADER_BYTES)
}

#[cfg(test)]
mod tests {
    use std::net::SocketAddrV4;

    use super::*;
    use crate::netsim::topology::{build_topology, TopologyConfig};
    use crate::seqspace::WindowSize;
    use crate::stack::EndpointState;

    fn net(cfg: &TopologyConfig, model: HostModel, peer: PeerConfig) -> Network {
        let ep = EndpointState::established(
            SocketAddrV4::new(NodeId::Victim.addr(), 40000),
            SocketAddrV4::new(NodeId::Peer.addr(), 80),
            Seq32(1_000),
            Seq32(5_000),
            WindowSize::new(16384, 2).unwrap(),
        );
        Network::new(build_topology(cfg).unwrap(), model, HostState::new(ep), peer, 1, true)
    }

    #[test]
    fn idle_ping_round_trip() {
        let mut n = net(&TopologyConfig::default(), HostModel::Rfc793Bare, PeerConfig::default());
        let p = n.send_ping_probe(NodeId::Attacker, NodeId::Upstream, 64, 0);
        n.run_until(NS_PER_MS * 100);
        let rtt = n.probe(p).rtt.unwrap();
        // 2 x 9.05 ms propagation, 1.6 ms up, 0.2 ms down
        assert!(rtt > 19_900_000 && rtt < 20_100_000, "{rtt}");
    }

    #[test]
    fn events_are_time_ordered_and_fifo_at_equal_times() {
        let mut n = net(&TopologyConfig::default(), HostModel::Rfc793Bare, PeerConfig::default());
        for _ in 0..5 {
            n.send_raw(10, NodeId::Victim, NodeId::Upstream, 80);
        }
        n.run_until(NS_PER_MS * 100);
        let recs = n.log().records();
        assert!(recs.windows(2).all(|w| w[0].time_ns <= w[1].time_ns));
        let arrivals: Vec<u64> = recs
            .iter()
            .filter(|r| r.kind == EventKind::Arrive && r.node == NodeId::Upstream)
            .map(|r| r.packet_id)
            .collect();
        assert_eq!(arrivals, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn reflected_ack_shares_the_uplink() {
        let mut n = net(&TopologyConfig::default(), HostModel::Rfc793Bare, PeerConfig::default());
        let ep = n.host().endpoint.clone();
        let seg = TcpSegment::new(ep.remote, ep.local, TcpFlags::ACK).with_seq(Seq32(1 << 31));
        for _ in 0..100 {
            n.inject_spoofed(0, seg);
        }
        n.run_until(NS_PER_MS);
        assert_eq!(n.count(EventKind::SendReflected), 100);
        assert!(n.queue_occupancy(LinkId::Uplink) > 90 * 80);
    }

    #[test]
    fn peer_fast_retransmit_amplifies() {
        let peer = PeerConfig {
            fast_retransmit: true,
            ..PeerConfig::default()
        };
        let mut n = net(&TopologyConfig::default(), HostModel::Rfc793Bare, peer);
        let ep = n.host().endpoint.clone();
        // out-of-window data: each draws a duplicate ACK carrying rcv_nxt
        let seg = TcpSegment::new(ep.remote, ep.local, TcpFlags::ACK).with_seq(Seq32(1 << 31));
        for _ in 0..10 {
            n.inject_spoofed(0, seg);
        }
        n.run_until(NS_PER_MS * 200);
        let s = n.peer_stats();
        assert_eq!(s.dup_acks, 10);
        assert_eq!(s.retransmits, 1);
        assert_eq!(s.new_segments, 7);
        assert_eq!(peer_amplification(&peer), 37);
    }

    #[test]
    fn saturating_upload_builds_a_standing_queue() {
        let mut n = net(&TopologyConfig::default(), HostModel::Rfc793Bare, PeerConfig::default());
        n.start_background_flow(FlowDirection::Upload, 10_000_000, 28_000);
        n.run_until(5 * NS_PER_SEC);
        let occ = n.queue_occupancy(LinkId::Uplink);
        // window minus bandwidth-delay product
        let bdp = 320_000 / 8 * 21 / 1000;
        assert!(occ + 3000 > 28_000 - bdp && occ <= 28_000, "{occ}");
        assert_eq!(n.start_background_flow(FlowDirection::Download, 0, 1000), None);
    }
}
