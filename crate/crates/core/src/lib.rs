//! Network-calculus model of a sliced, split-aware RAN transport network.

pub mod analysis;
pub mod catalog;
pub mod delay;
pub mod economics;
pub mod error;
pub mod minplus;
pub mod scenario;
pub mod topology;
