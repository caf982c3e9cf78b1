use std::fmt;
use std::str::FromStr;

use crate::seqspace::WindowSize;
use crate::stack::endpoint::EndpointState;
use crate::stack::filter::{netfilter_filter, winxp_filter, ConntrackEntry, FilterAction};
use crate::stack::rfc793::{reset_for, rfc793_process, Disposition, Verdict};
use crate::stack::segment::{TcpFlags, TcpSegment};

/// Which filter sits in front of the RFC 793 stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HostModel {
    /// No firewall; segments for unknown connections vanish.
    Rfc793Bare,
    WinXpFirewall,
    LinuxNetfilter,
    /// No firewall; segments for unknown ports are answered with RST.
    ClosedPortRst,
}

impl HostModel {
    pub const ALL: [HostModel; 4] = [
        HostModel::Rfc793Bare,
        HostModel::WinXpFirewall,
        HostModel::LinuxNetfilter,
        HostModel::ClosedPortRst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HostModel::Rfc793Bare => "rfc793",
            HostModel::WinXpFirewall => "winxp",
            HostModel::LinuxNetfilter => "netfilter",
            HostModel::ClosedPortRst => "closed_port_rst",
        }
    }
}

impl fmt::Display for HostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HostModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HostModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown host model `{s}`"))
    }
}

/// Everything one victim host needs to decide what to do with a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostState {
    pub endpoint: EndpointState,
    pub conntrack: ConntrackEntry,
}

impl HostState {
    pub fn new(endpoint: EndpointState) -> Self {
        let conntrack = ConntrackEntry::synced_with(&endpoint, endpoint.rcv_wnd);
        HostState {
            endpoint,
            conntrack,
        }
    }

    pub fn with_conntrack_window(mut self, initial: WindowSize) -> Self {
        self.conntrack = ConntrackEntry::synced_with(&self.endpoint, initial);
        self
    }
}

/// Runs `seg` through the host's filter and TCP layer at time `now_ns`.
///
/// Responses to rejected segments pass through the endpoint's throttle, if
/// one is configured; a throttled response turns into a silent drop.
pub fn host_process(model: HostModel, host: &mut HostState, seg: &TcpSegment, now_ns: u64) -> Verdict {
    let ep = &mut host.endpoint;
    let owned = ep.is_established() && ep.matches(seg);
    let verdict = match model {
        HostModel::Rfc793Bare => {
            if owned {
                tcp(ep, seg)
            } else {
                Verdict::silent()
            }
        }
        HostModel::WinXpFirewall => match winxp_filter(ep, seg) {
            FilterAction::Pass => tcp(ep, seg),
            FilterAction::Drop => Verdict::silent(),
        },
        HostModel::LinuxNetfilter => {
            if !ep.is_established() {
                Verdict::silent()
            } else {
                host.conntrack.sync(ep);
                match netfilter_filter(&mut host.conntrack, seg) {
                    FilterAction::Pass => tcp(ep, seg),
                    FilterAction::Drop => Verdict::silent(),
                }
            }
        }
        HostModel::ClosedPortRst => {
            if owned {
                tcp(ep, seg)
            } else if seg.has(TcpFlags::RST) {
                Verdict::silent()
            } else {
                Verdict::rst(reset_for(seg))
            }
        }
    };
    throttled(ep, verdict, now_ns)
}

fn tcp(ep: &mut EndpointState, seg: &TcpSegment) -> Verdict {
    // ownership is checked by every caller
    rfc793_process(ep, seg).unwrap_or_else(|_| Verdict::silent())
}

fn throttled(ep: &mut EndpointState, verdict: Verdict, now_ns: u64) -> Verdict {
    if !verdict.disposition.is_response() {
        return verdict;
    }
    let admitted = ep.throttle.as_mut().is_none_or(|t| t.admit(now_ns));
    if admitted {
        verdict
    } else {
        Verdict {
            disposition: Disposition::SilentDrop,
            response: None,
            buffered: verdict.buffered,
        }
    }
}
