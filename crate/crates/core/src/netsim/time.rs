//! Simulated time is integer nanoseconds.

pub type SimTime = u64;
pub type SimDuration = u64;

pub const NS_PER_SEC: u64 = 1_000_000_000;
pub const NS_PER_MS: u64 = 1_000_000;
pub const NS_PER_US: u64 = 1_000;

/// Serialization time of `bytes` on a `bps` link, rounded up to the next
/// nanosecond.
pub fn tx_time_ns(bytes: u64, bps: u64) -> SimDuration {
    debug_assert!(bps > 0);
    let bits = u128::from(bytes) * 8 * u128::from(NS_PER_SEC);
    bits.div_ceil(u128::from(bps)) as u64
}

pub fn from_secs_f64(s: f64) -> SimDuration {
    (s * NS_PER_SEC as f64).round() as u64
}

pub fn to_secs_f64(t: SimDuration) -> f64 {
    t as f64 / NS_PER_SEC as f64
}
