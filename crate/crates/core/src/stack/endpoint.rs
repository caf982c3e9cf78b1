use std::collections::VecDeque;
use std::net::SocketAddrV4;

use crate::seqspace::{Seq32, SeqSpace, WindowSize};
use crate::stack::segment::{TcpFlags, TcpSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConnState {
    Established,
    Closed,
    Reset,
}

/// How an in-window RST is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RstPolicy {
    /// Any in-window RST resets the connection.
    Rfc793,
    /// Only an RST at exactly RCV.NXT resets; other in-window RSTs get a
    /// challenge ACK.
    StrictChallenge,
}

/// Sliding-window response limiter: at most `limit` admissions in any
/// half-open interval of length `interval_ns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Throttle {
    limit: u32,
    interval_ns: u64,
    recent: VecDeque<u64>,
}

impl Throttle {
    pub fn new(limit: u32, interval_ns: u64) -> Self {
        Throttle {
            limit,
            interval_ns,
            recent: VecDeque::with_capacity(limit as usize),
        }
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    pub fn interval_ns(&self) -> u64 {
        self.interval_ns
    }

    /// Records a response at `now` if the budget allows it.
    pub fn admit(&mut self, now: u64) -> bool {
        while let Some(&t) = self.recent.front() {
            if now.saturating_sub(t) >= self.interval_ns {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        if (self.recent.len() as u32) < self.limit {
            self.recent.push_back(now);
            true
        } else {
            false
        }
    }
}

/// Victim-side record of one connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointState {
    pub local: SocketAddrV4,
    pub remote: SocketAddrV4,
    pub snd_nxt: Seq32,
    pub rcv_nxt: Seq32,
    pub rcv_wnd: WindowSize,
    pub state: ConnState,
    pub rst_policy: RstPolicy,
    pub throttle: Option<Throttle>,
    pub space: SeqSpace,
    /// Set once a spoofed payload byte was accepted in order.
    pub corrupted: bool,
}

impl EndpointState {
    pub fn established(
        local: SocketAddrV4,
        remote: SocketAddrV4,
        snd_nxt: Seq32,
        rcv_nxt: Seq32,
        rcv_wnd: WindowSize,
    ) -> Self {
        EndpointState {
            local,
            remote,
            snd_nxt,
            rcv_nxt,
            rcv_wnd,
            state: ConnState::Established,
            rst_policy: RstPolicy::Rfc793,
            throttle: None,
            space: SeqSpace::FULL,
            corrupted: false,
        }
    }

    pub fn with_policy(mut self, policy: RstPolicy) -> Self {
        self.rst_policy = policy;
        self
    }

    pub fn with_throttle(mut self, throttle: Option<Throttle>) -> Self {
        self.throttle = throttle;
        self
    }

    pub fn with_space(mut self, space: SeqSpace) -> Self {
        self.space = space;
        self.snd_nxt = space.wrap(u64::from(self.snd_nxt.0));
        self.rcv_nxt = space.wrap(u64::from(self.rcv_nxt.0));
        self
    }

    pub fn is_established(&self) -> bool {
        self.state == ConnState::Established
    }

    /// True if `seg` carries this connection's 4-tuple in the inbound
    /// direction.
    pub fn matches(&self, seg: &TcpSegment) -> bool {
        seg.dst == self.local && seg.src == self.remote
    }

    pub fn ack_segment(&self) -> TcpSegment {
        TcpSegment::new(self.local, self.remote, TcpFlags::ACK)
            .with_seq(self.snd_nxt)
            .with_ack(self.rcv_nxt)
            .with_window(self.rcv_wnd.field())
    }
}
