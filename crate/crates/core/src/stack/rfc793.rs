//! TCP-layer event processing for an ESTABLISHED connection, restricted to
//! the rules that decide between silence, an ACK, an RST and a reset.

use crate::error::Error;
use crate::stack::endpoint::{ConnState, EndpointState, RstPolicy};
use crate::stack::segment::{TcpFlags, TcpSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Disposition {
    SilentDrop,
    RespondAck,
    RespondRst,
    AcceptData,
    ConnectionReset,
}

impl Disposition {
    pub fn is_response(self) -> bool {
        matches!(self, Disposition::RespondAck | Disposition::RespondRst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub disposition: Disposition,
    pub response: Option<TcpSegment>,
    /// Out-of-order payload was queued by the receiver.
    pub buffered: bool,
}

impl Verdict {
    pub fn silent() -> Self {
        Verdict {
            disposition: Disposition::SilentDrop,
            response: None,
            buffered: false,
        }
    }

    pub fn ack(seg: TcpSegment) -> Self {
        Verdict {
            disposition: Disposition::RespondAck,
            response: Some(seg),
            buffered: false,
        }
    }

    pub fn rst(seg: TcpSegment) -> Self {
        Verdict {
            disposition: Disposition::RespondRst,
            response: Some(seg),
            buffered: false,
        }
    }

    fn reset(response: Option<TcpSegment>) -> Self {
        Verdict {
            disposition: Disposition::ConnectionReset,
            response,
            buffered: false,
        }
    }
}

/// RST a host sends in reply to `seg` when no connection owns it.
pub fn reset_for(seg: &TcpSegment) -> TcpSegment {
    let reply = TcpSegment::new(seg.dst, seg.src, TcpFlags::RST);
    if seg.has(TcpFlags::ACK) {
        reply.with_seq(seg.ack)
    } else {
        let mut len = seg.data_len();
        if seg.has(TcpFlags::SYN) {
            len += 1;
        }
        TcpSegment {
            flags: TcpFlags::RST | TcpFlags::ACK,
            ..reply.with_ack(seg.seq + len)
        }
    }
}

/// Applies RFC 793 segment-arrival rules to an established connection.
///
/// The caller must only hand over segments for this connection; a foreign
/// 4-tuple is a contract violation reported as [`Error::TupleMismatch`].
pub fn rfc793_process(state: &mut EndpointState, seg: &TcpSegment) -> Result<Verdict, Error> {
    if !state.matches(seg) {
        return Err(Error::TupleMismatch(format!(
            "{} -> {} is not {} -> {}",
            seg.src, seg.dst, state.remote, state.local
        )));
    }
    if !state.is_established() {
        return Ok(Verdict::silent());
    }

    let space = state.space;
    let window = state.rcv_wnd.effective();
    if !space.in_window(seg.seq, state.rcv_nxt, window) {
        if seg.has(TcpFlags::RST) {
            return Ok(Verdict::silent());
        }
        return Ok(Verdict::ack(state.ack_segment()));
    }

    if seg.has(TcpFlags::RST) {
        let exact = seg.seq == state.rcv_nxt;
        return Ok(match state.rst_policy {
            RstPolicy::StrictChallenge if !exact => Verdict::ack(state.ack_segment()),
            _ => {
                state.state = ConnState::Reset;
                Verdict::reset(None)
            }
        });
    }

    if seg.has(TcpFlags::SYN) {
        let rst_seq = if seg.has(TcpFlags::ACK) {
            seg.ack
        } else {
            state.snd_nxt
        };
        let rst = TcpSegment::new(state.local, state.remote, TcpFlags::RST).with_seq(rst_seq);
        state.state = ConnState::Reset;
        return Ok(Verdict::reset(Some(rst)));
    }

    if !seg.has(TcpFlags::ACK) {
        return Ok(Verdict::silent());
    }
    if !space.ack_acceptable_rfc793(seg.ack, state.snd_nxt) {
        return Ok(Verdict::ack(state.ack_segment()));
    }

    let len = seg.data_len();
    if len > 0 {
        if seg.seq == state.rcv_nxt {
            state.rcv_nxt = space.add(state.rcv_nxt, u64::from(len));
            state.corrupted = true;
            return Ok(Verdict {
                disposition: Disposition::AcceptData,
                response: Some(state.ack_segment()),
                buffered: false,
            });
        }
        return Ok(Verdict {
            buffered: true,
            ..Verdict::ack(state.ack_segment())
        });
    }
    Ok(Verdict::silent())
}
