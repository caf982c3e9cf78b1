//! Query measurement: the latency side channel itself, plus a direct
//! model-evaluation stand-in used on reduced sequence spaces.

use std::collections::VecDeque;
use std::ops::Sub;

use crate::attacker::query::{Classification, Mode, Query, SeriesRow, SpikeVerdict};
use crate::error::Error;
use crate::netsim::{tx_time_ns, EventKind, LinkId, Network, NodeId, SimDuration, SimTime, NS_PER_MS, NS_PER_SEC};
use crate::seqspace::SeqSpace;
use crate::stack::{host_process, HostModel, HostState, HEADER_BYTES};

/// Resources spent so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub queries: u64,
    pub pings: u64,
    pub spoofed: u64,
    pub reflected: u64,
    pub time_ns: u64,
}

impl Sub for Counters {
    type Output = Counters;
    fn sub(self, o: Counters) -> Counters {
        Counters {
            queries: self.queries - o.queries,
            pings: self.pings - o.pings,
            spoofed: self.spoofed - o.spoofed,
            reflected: self.reflected - o.reflected,
            time_ns: self.time_ns - o.time_ns,
        }
    }
}

pub trait Prober {
    /// Sends the query's batch, probes, and classifies what the probes saw.
    fn measure(&mut self, q: &Query) -> Result<SpikeVerdict, Error>;
    /// Sends the batch without probing (no verdict, not counted as a query).
    fn send_batch(&mut self, q: &Query) -> Result<(), Error>;
    fn space(&self) -> SeqSpace;
    fn counters(&self) -> Counters;
    fn series(&self) -> &[SeriesRow];
}

/// Spike-detection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub spike_factor: f64,
    pub loss_threshold: f64,
    pub warmup_pings: u32,
    pub ping_bytes: u32,
    pub ping_interval_ns: SimDuration,
    /// How many recent RTTs the baseline averages over.
    pub baseline_window: usize,
    /// Drain pause after each EXPECT_SILENCE query, as a multiple of the
    /// batch's reflection delay.
    pub drain_factor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            spike_factor: 2.0,
            loss_threshold: 0.5,
            warmup_pings: 5,
            ping_bytes: 64,
            ping_interval_ns: 2 * NS_PER_MS,
            baseline_window: 50,
            drain_factor: 1.5,
        }
    }
}

/// Rolling RTT history fed only from completed, quiet queries.
#[derive(Debug, Clone, Default)]
pub struct ProbeBaseline {
    history: VecDeque<u64>,
    window: usize,
}

impl ProbeBaseline {
    pub fn new(window: usize) -> Self {
        ProbeBaseline {
            history: VecDeque::new(),
            window: window.max(1),
        }
    }

    pub fn mean_ns(&self) -> Option<f64> {
        if self.history.is_empty() {
            None
        } else {
            Some(self.history.iter().sum::<u64>() as f64 / self.history.len() as f64)
        }
    }

    pub fn record(&mut self, rtt_ns: u64) {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(rtt_ns);
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }
}

/// Applies the two-RTT loss rule and the spike thresholds to one query's
/// probe RTTs (None = no reply at all), in send order.
pub fn classify(rtts: &[Option<u64>], baseline_ns: Option<f64>, cfg: &DetectorConfig) -> (f64, f64, Classification, Vec<u64>) {
    let Some(base) = baseline_ns else {
        return (f64::NAN, 0.0, Classification::Inconclusive, Vec::new());
    };
    let mut answered: Vec<u64> = Vec::with_capacity(rtts.len());
    let mut lost = 0usize;
    for r in rtts {
        let limit = if answered.is_empty() {
            2.0 * base
        } else {
            2.0 * answered.iter().sum::<u64>() as f64 / answered.len() as f64
        };
        match r {
            Some(rtt) if (*rtt as f64) <= limit => answered.push(*rtt),
            _ => lost += 1,
        }
    }
    let loss = if rtts.is_empty() {
        0.0
    } else {
        lost as f64 / rtts.len() as f64
    };
    let avg_ns = if answered.is_empty() {
        f64::NAN
    } else {
        answered.iter().sum::<u64>() as f64 / answered.len() as f64
    };
    let spike = loss >= cfg.loss_threshold || avg_ns > cfg.spike_factor * base;
    let class = if spike {
        Classification::Spike
    } else {
        Classification::NoSpike
    };
    (avg_ns / NS_PER_SEC as f64, loss, class, answered)
}

/// Measures queries on the simulated network by pinging the upstream
/// router through the shared uplink.
#[derive(Debug)]
pub struct SimProber {
    net: Network,
    cfg: DetectorConfig,
    baseline: ProbeBaseline,
    queries: u64,
    series: Vec<SeriesRow>,
    warmed: bool,
}

impl SimProber {
    pub fn new(net: Network, cfg: DetectorConfig) -> Self {
        let baseline = ProbeBaseline::new(cfg.baseline_window);
        SimProber {
            net,
            cfg,
            baseline,
            queries: 0,
            series: Vec::new(),
            warmed: false,
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn baseline(&self) -> &ProbeBaseline {
        &self.baseline
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    fn uplink_bps(&self) -> u64 {
        self.net.topology().link(LinkId::Uplink).bandwidth_bps
    }

    fn attacker_bps(&self) -> u64 {
        let link = if self.net.topology().attacker_spoof_path_bypasses_bottleneck {
            LinkId::AttackerToEdge
        } else {
            LinkId::AttackerToUpstream
        };
        self.net.topology().link(link).bandwidth_bps
    }

    /// Time for `n` reflected ACKs to drain through the uplink.
    fn reflection_ns(&self, n: u64) -> u64 {
        tx_time_ns(n * u64::from(HEADER_BYTES), self.uplink_bps())
    }

    /// Sends pings starting at `first`, waits until they are all answered
    /// or `cap` passes, and returns their RTTs in send order.
    fn ping_train(&mut self, first: SimTime, n: u32, cap: SimTime) -> Vec<Option<u64>> {
        let ids: Vec<_> = (0..n)
            .map(|k| {
                let at = first + u64::from(k) * self.cfg.ping_interval_ns;
                self.net.send_ping_probe(NodeId::Attacker, NodeId::Upstream, self.cfg.ping_bytes, at)
            })
            .collect();
        self.net
            .run_while(cap, |net| !ids.iter().all(|&id| net.probe_answered(id)));
        ids.iter().map(|&id| self.net.probe(id).rtt).collect()
    }

    /// Establishes the first baseline from a train of unloaded pings.
    pub fn warm_up(&mut self) {
        self.warmed = true;
        let now = self.net.now();
        let cap = now + u64::from(self.cfg.warmup_pings) * self.cfg.ping_interval_ns + 10 * NS_PER_SEC;
        let rtts = self.ping_train(now, self.cfg.warmup_pings, cap);
        for r in rtts.into_iter().flatten() {
            self.baseline.record(r);
        }
    }

    fn inject(&mut self, q: &Query) -> SimTime {
        let start = self.net.now();
        let bps = self.attacker_bps();
        let mut end = start;
        for seg in q.segments() {
            self.net.inject_spoofed(start, seg);
            end += tx_time_ns(u64::from(seg.wire_size()), bps);
        }
        end
    }
}

impl Prober for SimProber {
    fn measure(&mut self, q: &Query) -> Result<SpikeVerdict, Error> {
        q.validate()?;
        if !self.warmed {
            self.warm_up();
        }
        let id = self.queries;
        self.queries += 1;
        let base = self.baseline.mean_ns();
        let batch_end = self.inject(q);
        let first = batch_end + q.probe_offset_ns;
        let drain = self.reflection_ns(q.batch_len());
        let last = first + u64::from(q.probes - 1) * self.cfg.ping_interval_ns;
        let cap = last + drain + 4 * base.unwrap_or(NS_PER_SEC as f64) as u64 + 10 * NS_PER_MS;
        let rtts = self.ping_train(first, q.probes, cap);
        let (avg_rtt, loss_rate, classified, answered) = classify(&rtts, base, &self.cfg);
        if classified == Classification::NoSpike {
            for r in answered {
                self.baseline.record(r);
            }
        }
        if q.mode == Mode::ExpectSilence {
            let pause = (drain as f64 * self.cfg.drain_factor).ceil() as u64;
            self.net.run_until((batch_end + pause).max(self.net.now()));
        }
        self.series.push(SeriesRow {
            query_id: id,
            stage: q.stage,
            x: q.x,
            avg_rtt_s: avg_rtt,
            loss_rate,
            classification: classified,
        });
        Ok(SpikeVerdict {
            query_id: id,
            avg_rtt,
            loss_rate,
            classified,
        })
    }

    fn send_batch(&mut self, q: &Query) -> Result<(), Error> {
        q.validate()?;
        let end = self.inject(q);
        let settle = self.baseline.mean_ns().unwrap_or(0.0) as u64;
        self.net.run_until(end + 2 * settle);
        Ok(())
    }

    fn space(&self) -> SeqSpace {
        self.net.host().endpoint.space
    }

    fn counters(&self) -> Counters {
        Counters {
            queries: self.queries,
            pings: self.net.count(EventKind::SendPing),
            spoofed: self.net.count(EventKind::SendSpoofed),
            reflected: self.net.count(EventKind::SendReflected),
            time_ns: self.net.now(),
        }
    }

    fn series(&self) -> &[SeriesRow] {
        &self.series
    }
}

/// Evaluates queries straight against the host model: a query spikes iff
/// any segment of its batch draws a response. No network, no timing noise.
#[derive(Debug, Clone)]
pub struct ModelProber {
    model: HostModel,
    host: HostState,
    now_ns: u64,
    counters: Counters,
    series: Vec<SeriesRow>,
}

impl ModelProber {
    pub fn new(model: HostModel, host: HostState) -> Self {
        ModelProber {
            model,
            host,
            now_ns: 0,
            counters: Counters::default(),
            series: Vec::new(),
        }
    }

    pub fn host(&self) -> &HostState {
        &self.host
    }

    fn run(&mut self, q: &Query) -> u64 {
        let mut responses = 0;
        for seg in q.segments() {
            let v = host_process(self.model, &mut self.host, &seg, self.now_ns);
            self.counters.spoofed += 1;
            if v.response.is_some() {
                responses += 1;
            }
        }
        self.counters.reflected += responses;
        responses
    }
}

impl Prober for ModelProber {
    fn measure(&mut self, q: &Query) -> Result<SpikeVerdict, Error> {
        q.validate()?;
        let id = self.counters.queries;
        let responses = self.run(q);
        self.counters.queries += 1;
        self.counters.pings += u64::from(q.probes);
        self.now_ns += 100 * NS_PER_MS;
        self.counters.time_ns = self.now_ns;
        let classified = if responses > 0 {
            Classification::Spike
        } else {
            Classification::NoSpike
        };
        let loss_rate = if responses > 0 { 1.0 } else { 0.0 };
        self.series.push(SeriesRow {
            query_id: id,
            stage: q.stage,
            x: q.x,
            avg_rtt_s: 0.0,
            loss_rate,
            classification: classified,
        });
        Ok(SpikeVerdict {
            query_id: id,
            avg_rtt: 0.0,
            loss_rate,
            classified,
        })
    }

    fn send_batch(&mut self, q: &Query) -> Result<(), Error> {
        q.validate()?;
        self.run(q);
        Ok(())
    }

    fn space(&self) -> SeqSpace {
        self.host.endpoint.space
    }

    fn counters(&self) -> Counters {
        self.counters
    }

    fn series(&self) -> &[SeriesRow] {
        &self.series
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_rule_uses_previous_pings_of_the_query() {
        let cfg = DetectorConfig::default();
        let ms = NS_PER_MS;
        // second ping is more than twice the first: lost
        let (_, loss, class, _) = classify(&[Some(20 * ms), Some(41 * ms), Some(20 * ms)], Some(20e6), &cfg);
        assert!((loss - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(class, Classification::NoSpike);
        let (_, loss, class, _) = classify(&[Some(80 * ms), Some(80 * ms), None, Some(20 * ms)], Some(20e6), &cfg);
        assert_eq!(loss, 0.75);
        assert_eq!(class, Classification::Spike);
        let (avg, _, class, _) = classify(&[Some(39 * ms), Some(41 * ms)], Some(19.6e6), &cfg);
        assert!((avg - 0.040).abs() < 1e-9);
        assert_eq!(class, Classification::Spike);
        let (_, _, class, _) = classify(&[Some(20 * ms)], None, &cfg);
        assert_eq!(class, Classification::Inconclusive);
    }

    #[test]
    fn baseline_is_a_rolling_mean() {
        let mut b = ProbeBaseline::new(2);
        assert_eq!(b.mean_ns(), None);
        b.record(10);
        b.record(20);
        b.record(40);
        assert_eq!(b.mean_ns(), Some(30.0));
    }
}
