//! Sequence-space arithmetic and closed-form cost formulas.
//!
//! Everything here is integer arithmetic modulo `2^bits` (32 for real TCP).
//! A reduced [`SeqSpace`] with fewer bits exists so that search procedures
//! and segment-validation rules can be checked exhaustively in tests.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::Error;

/// Largest window TCP window scaling can express (1 GB).
pub const MAX_WINDOW: u64 = 1 << 30;

/// Lower bound on the look-back depth conntrack accepts for ack numbers.
pub const CONNTRACK_MIN_DEPTH: u32 = 66_000;

/// A position in the 32-bit sequence space.
///
/// There is no `Ord` impl on purpose: ordering only makes sense relative to
/// a reference point, use [`Seq32::diff`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seq32(pub u32);

impl Seq32 {
    pub const fn new(v: u32) -> Self {
        Seq32(v)
    }

    pub const fn value(self) -> u32 {
        self.0
    }

    /// `(self - other) mod 2^32`.
    pub const fn diff(self, other: Seq32) -> u32 {
        self.0.wrapping_sub(other.0)
    }
}

impl fmt::Debug for Seq32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seq32({})", self.0)
    }
}

impl fmt::Display for Seq32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add<u32> for Seq32 {
    type Output = Seq32;
    fn add(self, rhs: u32) -> Seq32 {
        Seq32(self.0.wrapping_add(rhs))
    }
}

impl Sub<u32> for Seq32 {
    type Output = Seq32;
    fn sub(self, rhs: u32) -> Seq32 {
        Seq32(self.0.wrapping_sub(rhs))
    }
}

impl From<u32> for Seq32 {
    fn from(v: u32) -> Self {
        Seq32(v)
    }
}

/// Width of the sequence space plus the constants that scale with it.
///
/// `SeqSpace::FULL` is real TCP. Reduced spaces shrink the modulus and the
/// conntrack floor so the same code paths can be enumerated exhaustively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeqSpace {
    bits: u8,
    conntrack_floor: u32,
}

impl SeqSpace {
    pub const FULL: SeqSpace = SeqSpace {
        bits: 32,
        conntrack_floor: CONNTRACK_MIN_DEPTH,
    };

    /// A reduced space of `bits` bits (2..=32).
    pub fn reduced(bits: u8, conntrack_floor: u32) -> Result<Self, Error> {
        if !(2..=32).contains(&bits) {
            return Err(Error::Domain(format!("sequence space of {bits} bits")));
        }
        let space = SeqSpace {
            bits,
            conntrack_floor,
        };
        if u64::from(conntrack_floor) >= space.size() {
            return Err(Error::Domain(format!(
                "conntrack floor {conntrack_floor} does not fit a {bits}-bit space"
            )));
        }
        Ok(space)
    }

    pub const fn bits(&self) -> u8 {
        self.bits
    }

    pub const fn conntrack_floor(&self) -> u32 {
        self.conntrack_floor
    }

    /// Number of distinct positions, `2^bits`.
    pub const fn size(&self) -> u64 {
        1u64 << self.bits
    }

    pub const fn mask(&self) -> u32 {
        (self.size() - 1) as u32
    }

    /// Half the space, the RFC 793 acceptable-ack depth.
    pub const fn half(&self) -> u32 {
        (self.size() >> 1) as u32
    }

    pub fn wrap(&self, v: u64) -> Seq32 {
        Seq32((v & u64::from(self.mask())) as u32)
    }

    pub fn diff(&self, a: Seq32, b: Seq32) -> u32 {
        a.0.wrapping_sub(b.0) & self.mask()
    }

    pub fn add(&self, a: Seq32, n: u64) -> Seq32 {
        self.wrap(u64::from(a.0) + n)
    }

    pub fn sub(&self, a: Seq32, n: u64) -> Seq32 {
        let n = n & u64::from(self.mask());
        self.wrap(u64::from(a.0) + self.size() - n)
    }

    /// Zero-length segment acceptability: `seq` lies in
    /// `[rcv_nxt, rcv_nxt + window)`.
    pub fn in_window(&self, seq: Seq32, rcv_nxt: Seq32, window: u64) -> bool {
        u64::from(self.diff(seq, rcv_nxt)) < window
    }

    /// `ack` lies in `[snd_nxt - half, snd_nxt]`, bound inclusive.
    pub fn ack_acceptable_rfc793(&self, ack: Seq32, snd_nxt: Seq32) -> bool {
        self.diff(snd_nxt, ack) <= self.half()
    }

    /// `ack` lies in `[snd_nxt - max(floor, max_win_seen), snd_nxt]`.
    pub fn ack_acceptable_conntrack(&self, ack: Seq32, snd_nxt: Seq32, max_win_seen: u64) -> bool {
        let depth = max_win_seen.max(u64::from(self.conntrack_floor));
        u64::from(self.diff(snd_nxt, ack)) <= depth
    }
}

impl Default for SeqSpace {
    fn default() -> Self {
        SeqSpace::FULL
    }
}

/// An advertised window together with the scale negotiated at connection
/// setup. The effective window is `field << scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WindowSize {
    field: u16,
    scale: u8,
}

impl WindowSize {
    /// Largest shift allowed by window scaling.
    pub const MAX_SCALE: u8 = 14;

    pub fn new(field: u16, scale: u8) -> Result<Self, Error> {
        if scale > Self::MAX_SCALE {
            return Err(Error::Domain(format!(
                "window scale {scale} exceeds {}",
                Self::MAX_SCALE
            )));
        }
        Ok(WindowSize { field, scale })
    }

    pub const fn field(&self) -> u16 {
        self.field
    }

    pub const fn scale(&self) -> u8 {
        self.scale
    }

    pub const fn effective(&self) -> u64 {
        (self.field as u64) << self.scale
    }

    /// The largest window this scale can advertise.
    pub const fn max_for_scale(scale: u8) -> u64 {
        0xFFFFu64 << scale
    }
}

/// The interval `[upper - depth, upper]` of acceptable acknowledgements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckWindowRange {
    pub upper: Seq32,
    pub depth: u64,
}

impl AckWindowRange {
    pub fn contains(&self, space: &SeqSpace, a: Seq32) -> bool {
        u64::from(space.diff(self.upper, a)) <= self.depth
    }
}

pub fn in_window(seq: Seq32, rcv_nxt: Seq32, rcv_wnd: WindowSize) -> bool {
    SeqSpace::FULL.in_window(seq, rcv_nxt, rcv_wnd.effective())
}

pub fn ack_acceptable_rfc793(ack: Seq32, snd_nxt: Seq32) -> bool {
    SeqSpace::FULL.ack_acceptable_rfc793(ack, snd_nxt)
}

pub fn ack_acceptable_conntrack(ack: Seq32, snd_nxt: Seq32, max_win_seen: u64) -> bool {
    SeqSpace::FULL.ack_acceptable_conntrack(ack, snd_nxt, max_win_seen)
}

/// Queueing delay, in seconds, added by `n_segments` segments of
/// `segment_size` bytes in front of a FIFO draining at `bandwidth` bit/s.
pub fn reflection_delay(n_segments: u64, segment_size: u64, bandwidth: u64) -> Result<f64, Error> {
    if bandwidth == 0 {
        return Err(Error::Domain("bandwidth must be positive".into()));
    }
    Ok((n_segments * segment_size * 8) as f64 / bandwidth as f64)
}

/// Same as [`reflection_delay`] in integer nanoseconds, rounded up.
pub fn reflection_delay_ns(n_segments: u64, segment_size: u64, bandwidth: u64) -> Result<u64, Error> {
    if bandwidth == 0 {
        return Err(Error::Domain("bandwidth must be positive".into()));
    }
    let bits = u128::from(n_segments) * u128::from(segment_size) * 8;
    Ok((bits * 1_000_000_000).div_ceil(u128::from(bandwidth)) as u64)
}

/// Blind attempts needed to land one acceptable segment:
/// `port_space * 2^32 * 2^32 / (win_a * win_b)`.
pub fn blind_attempt_count(win_a: u64, win_b: u64, port_space: u64) -> Result<u128, Error> {
    if win_a == 0 || win_b == 0 {
        return Err(Error::Domain("windows must be positive".into()));
    }
    Ok((u128::from(port_space) << 64) / (u128::from(win_a) * u128::from(win_b)))
}

/// Blind attempts to reset a connection whose endpoint only accepts an RST
/// at exactly RCV.NXT: `port_space * 2^32`.
pub fn blind_reset_attempt_count(port_space: u64) -> u128 {
    u128::from(port_space) << 32
}

/// Bytes of data a Fast-Retransmit sender releases per byte of spoofed
/// duplicate ACK, `floor(mtu / ack_size)`.
pub fn amplification_factor(mtu: u64, ack_size: u64) -> Result<u64, Error> {
    if ack_size == 0 {
        return Err(Error::Domain("ack size must be positive".into()));
    }
    Ok(mtu / ack_size)
}
