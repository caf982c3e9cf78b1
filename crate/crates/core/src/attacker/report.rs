use crate::attacker::probe::Counters;
use crate::attacker::query::Stage;
use crate::netsim::to_secs_f64;
use crate::seqspace::Seq32;

/// Resources one search stage used. Confirmation re-tests are included in
/// `queries` and also counted on their own.
#[derive(Debug, Clone, PartialEq)]
pub struct StageStats {
    pub stage: Stage,
    pub queries: u64,
    pub confirm_queries: u64,
    pub pings: u64,
    pub spoofed_segments: u64,
    pub reflected_segments: u64,
    pub max_targets_per_query: u64,
    pub time_s: f64,
}

impl StageStats {
    /// Queries spent searching, excluding confirmation.
    pub fn search_queries(&self) -> u64 {
        self.queries - self.confirm_queries
    }

    pub(crate) fn from_delta(stage: Stage, d: Counters, confirm: u64, max_targets: u64) -> Self {
        StageStats {
            stage,
            queries: d.queries,
            confirm_queries: confirm,
            pings: d.pings,
            spoofed_segments: d.spoofed,
            reflected_segments: d.reflected,
            max_targets_per_query: max_targets,
            time_s: to_secs_f64(d.time_ns),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanReport {
    pub inferred_port: Option<u16>,
    pub inwindow_seq: Option<Seq32>,
    pub acceptable_ack: Option<Seq32>,
    pub inflated_window: Option<u64>,
    pub inferred_victim_snd_nxt: Option<Seq32>,
    pub inferred_peer_snd_nxt: Option<Seq32>,
    pub queries: u64,
    pub pings: u64,
    pub spoofed_segments: u64,
    pub reflected_segments: u64,
    pub max_targets_per_query: u64,
    pub scan_time_s: f64,
    pub success: bool,
    pub session_corrupted: bool,
    pub stages: Vec<StageStats>,
}

impl ScanReport {
    pub fn stage(&self, stage: Stage) -> Option<&StageStats> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}
