//! Per-flow delay and per-queue backlog summaries of one run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub id: String,
    pub slice: String,
    pub vdu: u32,
    pub packets: u64,
    pub max_delay_s: f64,
    pub mean_delay_s: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub p99_s: f64,
    pub p999_s: f64,
    /// Bound for the flow under the simulated WRR schedule, when the schedule
    /// leaves the flow a positive rate.
    pub bound_s: Option<f64>,
    pub exceeds_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub node: String,
    pub key: String,
    pub weight: u32,
    pub buffer_bits: Option<f64>,
    pub max_backlog_bits: f64,
    pub drops: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub model: String,
    pub seed: u64,
    pub rng: String,
    pub duration_s: f64,
    pub emitted: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Packets that broke their flow's arrival curve when they were sent.
    pub conformance_violations: u64,
    /// Flows whose largest delay is above their bound.
    pub exceedances: u64,
    pub flows: Vec<FlowStats>,
    pub queues: Vec<QueueStats>,
}

impl DelayStats {
    /// SHA-256 of the JSON form; equal for bit-identical results.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("stats serialise");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn flow(&self, id: &str) -> Option<&FlowStats> {
        self.flows.iter().find(|f| f.id == id)
    }

    /// Largest delay over the flows matching `pred`.
    pub fn max_delay(&self, pred: impl Fn(&FlowStats) -> bool) -> f64 {
        self.flows.iter().filter(|f| pred(f)).map(|f| f.max_delay_s).fold(0.0, f64::max)
    }
}

/// Nearest-rank percentile of sorted samples.
pub(crate) fn percentile(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<u64> = (1..=10).collect();
        assert_eq!(percentile(&v, 0.5), 5);
        assert_eq!(percentile(&v, 0.9), 9);
        assert_eq!(percentile(&v, 0.99), 10);
        assert_eq!(percentile(&[7], 0.5), 7);
        assert_eq!(percentile(&[], 0.5), 0);
    }
}
