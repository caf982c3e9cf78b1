//! Victim-side segment disposition: a firewall layer composed with RFC 793
//! event processing.

mod endpoint;
mod filter;
mod host;
mod rfc793;
mod segment;

pub use endpoint::{ConnState, EndpointState, RstPolicy, Throttle};
pub use filter::{netfilter_filter, winxp_filter, ConntrackEntry, FilterAction};
pub use host::{host_process, HostModel, HostState};
pub use rfc793::{reset_for, rfc793_process, Disposition, Verdict};
pub use segment::{TcpFlags, TcpSegment, HEADER_BYTES, IP_TCP_HEADER_BYTES};
