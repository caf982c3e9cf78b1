//! Firewall layers that sit in front of the TCP stack.

use std::net::SocketAddrV4;

use crate::seqspace::{Seq32, SeqSpace, WindowSize};
use crate::stack::endpoint::EndpointState;
use crate::stack::segment::{TcpFlags, TcpSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterAction {
    Pass,
    Drop,
}

/// Connection-tracking shadow state for one flow, rebuilt by the firewall
/// from the segments it has seen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConntrackEntry {
    pub local: SocketAddrV4,
    pub remote: SocketAddrV4,
    /// Local side's SND.NXT as conntrack believes it; bounds inbound acks.
    pub snd_nxt_est: Seq32,
    /// Remote side's SND.NXT; start of the window inbound data must hit.
    pub rcv_nxt_est: Seq32,
    pub rcv_wnd_est: u64,
    pub space: SeqSpace,
    max_win_seen: u64,
    scale: u8,
}

impl ConntrackEntry {
    /// An entry exactly in sync with `ep`, with `max_win_seen` seeded from
    /// the window advertised during the handshake.
    pub fn synced_with(ep: &EndpointState, initial_window: WindowSize) -> Self {
        let scale = initial_window.scale();
        ConntrackEntry {
            local: ep.local,
            remote: ep.remote,
            snd_nxt_est: ep.snd_nxt,
            rcv_nxt_est: ep.rcv_nxt,
            rcv_wnd_est: ep.rcv_wnd.effective(),
            space: ep.space,
            max_win_seen: initial_window.effective().min(WindowSize::max_for_scale(scale)),
            scale,
        }
    }

    pub fn max_win_seen(&self) -> u64 {
        self.max_win_seen
    }

    pub fn scale(&self) -> u8 {
        self.scale
    }

    pub fn tracks(&self, seg: &TcpSegment) -> bool {
        seg.dst == self.local && seg.src == self.remote
    }

    pub fn sync(&mut self, ep: &EndpointState) {
        self.snd_nxt_est = ep.snd_nxt;
        self.rcv_nxt_est = ep.rcv_nxt;
        self.rcv_wnd_est = ep.rcv_wnd.effective();
    }

    /// Never decreases; capped at what the negotiated scale can express.
    fn observe_window(&mut self, field: u16) {
        let seen = u64::from(field) << self.scale;
        self.max_win_seen = self.max_win_seen.max(seen);
    }
}

/// Netfilter-style stateful filtering of an inbound segment.
///
/// SYN+ACK always passes; anything else needs ACK and an acceptable ack
/// number. Sequence numbers are only checked for segments that carry data.
pub fn netfilter_filter(entry: &mut ConntrackEntry, seg: &TcpSegment) -> FilterAction {
    if !entry.tracks(seg) {
        return FilterAction::Drop;
    }
    let space = entry.space;
    if !seg.has(TcpFlags::SYN | TcpFlags::ACK) {
        if !seg.has(TcpFlags::ACK) {
            return FilterAction::Drop;
        }
        if !space.ack_acceptable_conntrack(seg.ack, entry.snd_nxt_est, entry.max_win_seen) {
            return FilterAction::Drop;
        }
        if seg.data_len() > 0 && !space.in_window(seg.seq, entry.rcv_nxt_est, entry.rcv_wnd_est) {
            return FilterAction::Drop;
        }
    }
    entry.observe_window(seg.window_field);
    FilterAction::Pass
}

/// Windows XP firewall: passes segments of an established connection that
/// carry ACK or RST, drops everything else silently.
pub fn winxp_filter(conn: &EndpointState, seg: &TcpSegment) -> FilterAction {
    if conn.is_established()
        && conn.matches(seg)
        && seg.flags.intersects(TcpFlags::ACK | TcpFlags::RST)
    {
        FilterAction::Pass
    } else {
        FilterAction::Drop
    }
}

#[cfg(test)]
mod tests {
    use std::net::Ipv4Addr;

    use super::*;

    fn setup() -> (EndpointState, ConntrackEntry) {
        let ep = EndpointState::established(
            SocketAddrV4::new(Ipv4Addr::new(10, 0, 0, 2), 41000),
            SocketAddrV4::new(Ipv4Addr::new(10, 0, 1, 2), 80),
            Seq32(1_000_000),
            Seq32(2_000_000),
            WindowSize::new(114, 7).unwrap(),
        );
        let ct = ConntrackEntry::synced_with(&ep, WindowSize::new(114, 7).unwrap());
        (ep, ct)
    }

    fn seg(ep: &EndpointState, flags: TcpFlags, seq: u32, ack: u32) -> TcpSegment {
        TcpSegment::new(ep.remote, ep.local, flags)
            .with_seq(Seq32(seq))
            .with_ack(Seq32(ack))
    }

    #[test]
    fn rst_without_ack_is_dropped() {
        let (ep, mut ct) = setup();
        assert_eq!(netfilter_filter(&mut ct, &seg(&ep, TcpFlags::RST, 2_000_000, 0)), FilterAction::Drop);
    }

    #[test]
    fn synack_always_passes() {
        let (ep, mut ct) = setup();
        for (s, a) in [(0, 0), (123, 4_000_000_000), (2_000_000, 1_000_000)] {
            let f = netfilter_filter(&mut ct, &seg(&ep, TcpFlags::SYN | TcpFlags::ACK, s, a));
            assert_eq!(f, FilterAction::Pass);
        }
    }

    #[test]
    fn ack_depth_is_checked_not_seq() {
        let (ep, mut ct) = setup();
        assert_eq!(ct.max_win_seen(), 14592);
        let far = seg(&ep, TcpFlags::ACK, 7, 1_000_000 - 70_000);
        assert_eq!(netfilter_filter(&mut ct, &far), FilterAction::Drop);
        let near = seg(&ep, TcpFlags::ACK, 7, 1_000_000 - 66_000);
        assert_eq!(netfilter_filter(&mut ct, &near), FilterAction::Pass);
    }

    #[test]
    fn data_needs_in_window_seq() {
        let (ep, mut ct) = setup();
        let out = seg(&ep, TcpFlags::ACK, 7, 1_000_000).with_payload(1);
        assert_eq!(netfilter_filter(&mut ct, &out), FilterAction::Drop);
        let inside = seg(&ep, TcpFlags::ACK, 2_000_100, 1_000_000).with_payload(1);
        assert_eq!(netfilter_filter(&mut ct, &inside), FilterAction::Pass);
    }

    #[test]
    fn window_inflation() {
        let (ep, mut ct) = setup();
        let s = seg(&ep, TcpFlags::ACK, 7, 1_000_000).with_window(0xFFFF);
        assert_eq!(netfilter_filter(&mut ct, &s), FilterAction::Pass);
        assert_eq!(ct.max_win_seen(), 8_388_480);
        let small = seg(&ep, TcpFlags::ACK, 7, 1_000_000).with_window(1);
        netfilter_filter(&mut ct, &small);
        assert_eq!(ct.max_win_seen(), 8_388_480);
    }

    #[test]
    fn dropped_segment_does_not_touch_window() {
        let (ep, mut ct) = setup();
        let s = seg(&ep, TcpFlags::ACK, 7, 5).with_window(0xFFFF);
        assert_eq!(netfilter_filter(&mut ct, &s), FilterAction::Drop);
        assert_eq!(ct.max_win_seen(), 14592);
    }

    #[test]
    fn winxp_rules() {
        let (ep, _) = setup();
        assert_eq!(winxp_filter(&ep, &seg(&ep, TcpFlags::ACK, 1, 2)), FilterAction::Pass);
        assert_eq!(winxp_filter(&ep, &seg(&ep, TcpFlags::RST, 1, 2)), FilterAction::Pass);
        assert_eq!(winxp_filter(&ep, &seg(&ep, TcpFlags::SYN, 1, 2)), FilterAction::Drop);
        let mut other = seg(&ep, TcpFlags::ACK, 1, 2);
        other.dst.set_port(41001);
        assert_eq!(winxp_filter(&ep, &other), FilterAction::Drop);
    }
}
