//! The scan engine: spoofed-segment queries, latency classification and
//! the searches for the port and both sequence numbers.

mod probe;
mod query;
mod report;
mod search;

pub use probe::{classify, Counters, DetectorConfig, ModelProber, ProbeBaseline, Prober, SimProber};
pub use query::{Classification, Mode, Query, SeriesRow, SpikeVerdict, Stage, Target};
pub use report::{ScanReport, StageStats};
pub use search::{spread, AttackConfig, Attacker, InWindow, PortProbe, PortStrategy};
