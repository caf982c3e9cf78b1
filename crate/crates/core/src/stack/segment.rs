use std::fmt;
use std::net::SocketAddrV4;

use bitflags::bitflags;

use crate::seqspace::Seq32;

/// L2 + IP + TCP header bytes charged to every segment on the wire.
pub const HEADER_BYTES: u32 = 80;

/// IP + TCP header bytes, the unit of the amplification ratio.
pub const IP_TCP_HEADER_BYTES: u32 = 40;

bitflags! {
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct TcpFlags: u8 {
        const FIN = 0x01;
        const SYN = 0x02;
        const RST = 0x04;
        const ACK = 0x10;
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, flag) in [
            ("SYN", TcpFlags::SYN),
            ("ACK", TcpFlags::ACK),
            ("RST", TcpFlags::RST),
            ("FIN", TcpFlags::FIN),
        ] {
            if self.contains(flag) {
                parts.push(name);
            }
        }
        if parts.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&parts.join("|"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TcpSegment {
    pub src: SocketAddrV4,
    pub dst: SocketAddrV4,
    pub seq: Seq32,
    pub ack: Seq32,
    pub flags: TcpFlags,
    pub window_field: u16,
    pub payload_len: u32,
}

impl TcpSegment {
    pub fn new(src: SocketAddrV4, dst: SocketAddrV4, flags: TcpFlags) -> Self {
        TcpSegment {
            src,
            dst,
            seq: Seq32(0),
            ack: Seq32(0),
            flags,
            window_field: 0,
            payload_len: 0,
        }
    }

    pub fn with_seq(mut self, seq: Seq32) -> Self {
        self.seq = seq;
        self
    }

    pub fn with_ack(mut self, ack: Seq32) -> Self {
        self.ack = ack;
        self
    }

    pub fn with_window(mut self, window_field: u16) -> Self {
        self.window_field = window_field;
        self
    }

    pub fn with_payload(mut self, len: u32) -> Self {
        self.payload_len = len;
        self
    }

    pub fn wire_size(&self) -> u32 {
        HEADER_BYTES + self.payload_len
    }

    /// Sequence space the segment occupies for filtering; FIN counts as one
    /// octet of data.
    pub fn data_len(&self) -> u32 {
        if self.flags.contains(TcpFlags::FIN) {
            self.payload_len.max(1)
        } else {
            self.payload_len
        }
    }

    pub fn has(&self, flags: TcpFlags) -> bool {
        self.flags.contains(flags)
    }
}
