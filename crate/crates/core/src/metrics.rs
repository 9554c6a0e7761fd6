//! Analytics over a trace: throughput, resource usage, finality latency,
//! timestamp drift, and decentralization measures.
//!
//! Everything here is a pure function of the trace, so a report rebuilt
//! from a trace file equals the one computed during the run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::TxId;
use crate::consensus::BLOCK_INTERVAL_MS;
use crate::name::AccountName;
use crate::trace::{EventBody, Trace};
use crate::Millis;

pub const DEFAULT_WINDOW_MS: Millis = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trace contains no blocks")]
    EmptyTrace,
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("need at least two rounds, got {0}")]
    TooFewRounds(usize),
}

/// Shannon entropy in bits of the distribution proportional to `counts`.
/// Zero entries contribute nothing.
pub fn entropy_bits(counts: &[u64]) -> Result<f64, MetricsError> {
    let total: u64 = counts.iter().sum();
    if counts.is_empty() || total == 0 {
        return Err(MetricsError::EmptyDistribution);
    }
    let total = total as f64;
    Ok(counts
        .iter()
        .filter(|c| **c > 0)
        .map(|c| {
            let p = *c as f64 / total;
            -p * p.log2()
        })
        .sum())
}

/// Gini coefficient from sorted cumulative shares:
/// `sum_i (2i - n - 1) x_(i) / (n * sum x)` with `x` ascending and `i` from 1.
/// An all-zero distribution is perfectly equal.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyDistribution);
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    if sum == 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = xs.iter().enumerate().map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x).sum();
    Ok(weighted / (n * sum))
}

/// Jaccard distance `1 - |A ∩ B| / |A ∪ B|` between consecutive producer
/// sets.
pub fn producer_churn(schedules: &[BTreeSet<AccountName>]) -> Result<Vec<f64>, MetricsError> {
    if schedules.len() < 2 {
        return Err(MetricsError::TooFewRounds(schedules.len()));
    }
    Ok(schedules
        .windows(2)
        .map(|w| {
            let union = w[0].union(&w[1]).count();
            if union == 0 {
                return 0.0;
            }
            1.0 - w[0].intersection(&w[1]).count() as f64 / union as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub count: usize,
    pub p50: i64,
    pub p90: i64,
    pub p99: i64,
    pub p100: i64,
}

/// Nearest-rank percentiles.
pub fn percentiles(values: &[i64]) -> Option<Percentiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = |p: f64| {
        let r = ((p / 100.0) * v.len() as f64).ceil() as usize;
        v[r.clamp(1, v.len()) - 1]
    };
    Some(Percentiles {
        count: v.len(),
        p50: rank(50.0),
        p90: rank(90.0),
        p99: rank(99.0),
        p100: rank(100.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPoint {
    pub window_start: Millis,
    pub transactions: u64,
    pub tps: f64,
    pub cpu_ms: u64,
    pub net_words: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPoint {
    pub block: u64,
    pub timestamp: Millis,
    pub drift_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub window_ms: Millis,
    pub blocks: u64,
    pub transactions: u64,
    pub actions: u64,
    pub avg_tx_per_block: f64,
    pub avg_actions_per_tx: f64,
    pub avg_tps: f64,
    pub peak_window_tps: f64,
    pub windows: Vec<WindowPoint>,
    pub finality_latency_ms: Option<Percentiles>,
    pub finality_series: Vec<(u64, i64)>,
    pub max_abs_drift_ms: i64,
    pub drift_series: Vec<DriftPoint>,
    /// Submit-to-inclusion latency of transactions tagged `legit`, measured
    /// against the including block's timestamp.
    pub legit_latency_ms: Option<Percentiles>,
    pub producer_block_share: BTreeMap<AccountName, u64>,
    pub entropy_bits: f64,
    pub gini: f64,
    pub churn_series: Vec<(u64, f64)>,
    pub rejections: BTreeMap<String, u64>,
    pub deferred_failures: BTreeMap<String, u64>,
}

/// Computes every metric from `trace` with tumbling windows of `window_ms`.
pub fn compute(trace: &Trace, window_ms: Millis) -> Result<MetricsReport, MetricsError> {
    let window_ms = window_ms.max(1);
    let mut blocks = 0u64;
    let mut transactions = 0u64;
    let mut actions = 0u64;
    let mut windows: BTreeMap<Millis, WindowPoint> = BTreeMap::new();
    let mut produced_at: BTreeMap<u64, Millis> = BTreeMap::new();
    let mut drift_series = Vec::new();
    let mut share: BTreeMap<AccountName, u64> = BTreeMap::new();
    let mut included: BTreeMap<TxId, Millis> = BTreeMap::new();
    let mut submitted: Vec<(TxId, Millis)> = Vec::new();
    let mut rounds: BTreeMap<u64, BTreeSet<AccountName>> = BTreeMap::new();
    let mut rejections = BTreeMap::new();
    let mut deferred_failures = BTreeMap::new();
    let mut lib_events: Vec<(Millis, u64)> = Vec::new();

    for e in &trace.events {
        match &e.body {
            EventBody::BlockProduced(b) => {
                blocks += 1;
                transactions += b.txs;
                actions += b.actions;
                let start = b.timestamp / window_ms * window_ms;
                let w = windows.entry(start).or_insert_with(|| WindowPoint {
                    window_start: start,
                    transactions: 0,
                    tps: 0.0,
                    cpu_ms: 0,
                    net_words: 0,
                });
                w.transactions += b.txs;
                w.cpu_ms += b.cpu_used;
                w.net_words += b.net_used;
                produced_at.entry(b.number).or_insert(e.time);
                drift_series.push(DriftPoint {
                    block: b.number,
                    timestamp: b.timestamp,
                    drift_ms: b.drift,
                });
                *share.entry(b.producer.clone()).or_insert(0) += 1;
                for id in &b.tx_ids {
                    included.entry(*id).or_insert(b.timestamp);
                }
            }
            EventBody::Schedule { round, producers } => {
                rounds.entry(*round).or_insert_with(|| producers.iter().cloned().collect());
            }
            EventBody::Irreversible { number } => lib_events.push((e.time, *number)),
            EventBody::TxSubmitted { id, tag, .. } if tag == "legit" => submitted.push((*id, e.time)),
            EventBody::TxRejected { class, .. } => *rejections.entry(class.clone()).or_insert(0u64) += 1,
            EventBody::DeferredFailed { class, .. } => *deferred_failures.entry(class.clone()).or_insert(0u64) += 1,
            _ => {}
        }
    }
    if blocks == 0 {
        return Err(MetricsError::EmptyTrace);
    }

    for w in windows.values_mut() {
        w.tps = w.transactions as f64 * 1000.0 / window_ms as f64;
    }
    let peak_window_tps = windows.values().map(|w| w.tps).fold(0.0, f64::max);
    let avg_tx_per_block = transactions as f64 / blocks as f64;
    let avg_actions_per_tx = if transactions == 0 { 0.0 } else { actions as f64 / transactions as f64 };
    let avg_tps = avg_tx_per_block * 1000.0 / BLOCK_INTERVAL_MS as f64;

    // A block is final once any node's irreversible mark reaches it.
    lib_events.sort();
    let mut finality_series = Vec::new();
    let mut events = lib_events.iter().peekable();
    let mut lib = 0u64;
    let mut lib_time = 0;
    for (number, produced) in &produced_at {
        while lib < *number {
            match events.next() {
                Some((t, n)) => {
                    if *n > lib {
                        lib = *n;
                        lib_time = *t;
                    }
                }
                None => break,
            }
        }
        if lib >= *number {
            finality_series.push((*number, lib_time as i64 - *produced as i64));
        }
    }
    let finality: Vec<i64> = finality_series.iter().map(|(_, l)| *l).collect();

    let legit: Vec<i64> = submitted
        .iter()
        .filter_map(|(id, t)| included.get(id).map(|ts| *ts as i64 - *t as i64))
        .collect();

    // Scheduled producers with no blocks count as zero shares.
    let mut dist = share.clone();
    for set in rounds.values() {
        for p in set {
            dist.entry(p.clone()).or_insert(0);
        }
    }
    let counts: Vec<u64> = dist.values().copied().collect();
    let entropy = entropy_bits(&counts)?;
    let g = gini(&counts.iter().map(|c| *c as f64).collect::<Vec<_>>())?;
    let sets: Vec<_> = rounds.values().cloned().collect();
    let churn_series = match producer_churn(&sets) {
        Ok(c) => rounds.keys().skip(1).copied().zip(c).collect(),
        Err(_) => Vec::new(),
    };

    Ok(MetricsReport {
        window_ms,
        blocks,
        transactions,
        actions,
        avg_tx_per_block,
        avg_actions_per_tx,
        avg_tps,
        peak_window_tps,
        windows: windows.into_values().collect(),
        finality_latency_ms: percentiles(&finality),
        finality_series,
        max_abs_drift_ms: drift_series.iter().map(|d| d.drift_ms.abs()).max().unwrap_or(0),
        drift_series,
        legit_latency_ms: percentiles(&legit),
        producer_block_share: share,
        entropy_bits: entropy,
        gini: g,
        churn_series,
        rejections,
        deferred_failures,
    })
}

impl MetricsReport {
    /// CSV series as `(file name, contents)`, each with a header row.
    pub fn csv_files(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut s = String::from("window_start_ms,transactions,tps,cpu_ms,net_words\n");
        for w in &self.windows {
            s.push_str(&format!("{},{},{},{},{}\n", w.window_start, w.transactions, w.tps, w.cpu_ms, w.net_words));
        }
        out.push(("throughput.csv", s));
        let mut s = String::from("block,timestamp_ms,drift_ms\n");
        for d in &self.drift_series {
            s.push_str(&format!("{},{},{}\n", d.block, d.timestamp, d.drift_ms));
        }
        out.push(("drift.csv", s));
        let mut s = String::from("block,finality_ms\n");
        for (b, l) in &self.finality_series {
            s.push_str(&format!("{b},{l}\n"));
        }
        out.push(("finality.csv", s));
        let mut s = String::from("producer,blocks\n");
        for (p, c) in &self.producer_block_share {
            s.push_str(&format!("{p},{c}\n"));
        }
        out.push(("producers.csv", s));
        let mut s = String::from("round,jaccard_distance\n");
        for (r, d) in &self.churn_series {
            s.push_str(&format!("{r},{d}\n"));
        }
        out.push(("churn.csv", s));
        let mut s = String::from("class,count\n");
        for (c, n) in &self.rejections {
            s.push_str(&format!("{c},{n}\n"));
        }
        out.push(("rejections.csv", s));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::ProducerMode;
    use crate::name::generated;
    use crate::trace::{BlockSummary, TraceEvent, TraceHeader};

    fn block(number: u64, producer: AccountName, txs: u64) -> TraceEvent {
        let timestamp = number * 500;
        TraceEvent {
            time: timestamp,
            node: Some(0),
            body: EventBody::BlockProduced(BlockSummary {
                number,
                slot: number - 1,
                producer,
                timestamp,
                drift: 0,
                mode: ProducerMode::Success,
                txs,
                actions: txs,
                deferred: 0,
                failed: 0,
                scheduled: 0,
                cpu_used: 2 * txs,
                net_used: 0,
                tx_ids: Vec::new(),
                missed: Vec::new(),
            }),
        }
    }

    fn trace(events: Vec<TraceEvent>) -> Trace {
        Trace {
            header: TraceHeader::new("m", 0, None),
            events,
        }
    }

    #[test]
    fn ten_blocks_of_282_transactions_is_56_4_tps() {
        let counts = [28, 29, 28, 28, 29, 28, 28, 28, 28, 28];
        assert_eq!(counts.iter().sum::<u64>(), 282);
        let events = counts
            .iter()
            .enumerate()
            .map(|(i, c)| block(i as u64 + 1, generated("bp", 0), *c))
            .collect();
        let r = compute(&trace(events), DEFAULT_WINDOW_MS).unwrap();
        assert!((r.avg_tps - 56.4).abs() < 1e-9);
        assert!((r.avg_tx_per_block - 28.2).abs() < 1e-9);
    }

    #[test]
    fn empty_blocks_have_zero_throughput() {
        let r = compute(&trace(vec![block(1, generated("bp", 0), 0)]), 1000).unwrap();
        assert_eq!(r.avg_tps, 0.0);
        assert_eq!(r.peak_window_tps, 0.0);
    }

    #[test]
    fn trace_without_blocks_is_an_error() {
        assert_eq!(compute(&trace(Vec::new()), 1000), Err(MetricsError::EmptyTrace));
    }

    #[test]
    fn entropy_of_uniform_21_is_log2_21() {
        let e = entropy_bits(&[12; 21]).unwrap();
        assert!((e - 21f64.log2()).abs() < 1e-9);
        assert!((e - 4.392_317_422_778_76).abs() < 1e-9);
        assert_eq!(entropy_bits(&[0, 0, 252]).unwrap(), 0.0);
        assert_eq!(entropy_bits(&[]), Err(MetricsError::EmptyDistribution));
    }

    #[test]
    fn gini_extremes() {
        assert_eq!(gini(&[3.0; 7]).unwrap(), 0.0);
        let mut v = vec![0.0; 21];
        v[4] = 252.0;
        assert!((gini(&v).unwrap() - 20.0 / 21.0).abs() < 1e-12);
        assert_eq!(gini(&[]), Err(MetricsError::EmptyDistribution));
    }

    #[test]
    fn churn_examples() {
        let set = |r: std::ops::Range<usize>| r.map(|i| generated("bp", i)).collect::<BTreeSet<_>>();
        let a = set(0..21);
        let mut b = set(0..20);
        b.insert(generated("sb", 0));
        let c = set(100..121);
        let churn = producer_churn(&[a.clone(), a.clone(), b, c]).unwrap();
        assert_eq!(churn[0], 0.0);
        assert!((churn[1] - (1.0 - 20.0 / 22.0)).abs() < 1e-12);
        assert_eq!(churn[2], 1.0);
        assert_eq!(producer_churn(&[a]), Err(MetricsError::TooFewRounds(1)));
    }

    #[test]
    fn nearest_rank_percentiles() {
        let p = percentiles(&[5, 1, 4, 2, 3]).unwrap();
        assert_eq!((p.p50, p.p90, p.p100), (3, 5, 5));
        assert_eq!(percentiles(&[]), None);
    }

    #[test]
    fn finality_uses_first_irreversible_mark_covering_the_block() {
        let mut events = vec![block(1, generated("bp", 0), 0), block(2, generated("bp", 0), 0)];
        events.push(TraceEvent {
            time: 1500,
            node: Some(0),
            body: EventBody::Irreversible { number: 2 },
        });
        let r = compute(&trace(events), 1000).unwrap();
        assert_eq!(r.finality_series, vec![(1, 1000), (2, 500)]);
    }
}
