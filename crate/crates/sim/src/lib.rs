//! Seeded discrete-event packet simulator of a sliced transport network.
//!
//! Every (node, slice key) pair is a FIFO queue and every node serves its
//! queues with weighted round robin. Sources are token-bucket shaped or
//! Poisson. Time is kept in integer nanoseconds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use slicenc_core::analysis::AnalysisError;
use thiserror::Error;

pub mod bound;
pub mod buffers;
mod engine;
pub mod network;
pub mod source;
pub mod stats;
pub mod sweep;
pub mod wrr;

pub use bound::{gps_bounds, wrr_bounds};
pub use buffers::{buffer_packets, size_buffers, QueueBuffer};
pub use engine::run;
pub use stats::{DelayStats, FlowStats, QueueStats};
pub use sweep::{sweep_ue_count, SweepPoint};
pub use wrr::{weights_from_shares, WrrScheduler};

/// Name of the generator behind every random draw, reported with results.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), one stream per flow";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("queue {key} at {node} is unstable: {arrival} b/s offered, {service} b/s allocated")]
    Unstable { node: String, key: String, arrival: f64, service: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrafficModel {
    /// Conformant to each flow's arrival curve; greedy half of the time.
    TokenBucket,
    /// Exponential gaps at the flow's mean rate; may exceed the arrival curve.
    Poisson,
}

impl fmt::Display for TrafficModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficModel::TokenBucket => "token-bucket",
            TrafficModel::Poisson => "poisson",
        })
    }
}

impl FromStr for TrafficModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "token-bucket" | "token_bucket" => Ok(Self::TokenBucket),
            "poisson" => Ok(Self::Poisson),
            other => Err(format!("unknown traffic model {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferPolicy {
    /// Queues hold their backlog bound; extra packets are dropped and counted.
    Sized,
    Unlimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: TrafficModel,
    pub seed: u64,
    /// Sources stop emitting after this long; queued packets still drain.
    pub duration_s: f64,
    pub buffers: BufferPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { model: TrafficModel::TokenBucket, seed: 1, duration_s: 10.0, buffers: BufferPolicy::Sized }
    }
}

pub(crate) fn ns_ceil(seconds: f64) -> u64 {
    (seconds * 1e9).ceil() as u64
}

pub(crate) fn ns_round(seconds: f64) -> u64 {
    (seconds * 1e9).round() as u64
}
