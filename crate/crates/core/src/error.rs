use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("unstable: arrival rate {arrival_rate} b/s exceeds service rate {service_rate} b/s")]
    Unstable { arrival_rate: f64, service_rate: f64 },
    #[error("saturated: cross-traffic rate {cross_rate} b/s consumes service rate {service_rate} b/s")]
    Saturated { cross_rate: f64, service_rate: f64 },
    #[error("cannot concatenate an empty list of service curves")]
    EmptyConcatenation,
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("split {0} has no capacity formula")]
    UnknownSplit(String),
    #[error("split {0} is not selectable as a high-layer split")]
    NotSelectable(String),
    #[error("invalid catalog: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("duplicate node {0}")]
    DuplicateNode(String),
    #[error("vDU node {vdu} is unreachable from {cu}")]
    Unreachable { cu: String, vdu: String },
    #[error("routing cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("nodes {0} and {1} are not adjacent")]
    NotAdjacent(String, String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid topology: {0}")]
    Invalid(String),
    #[error("all weights at node {0} are zero")]
    ZeroWeights(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("queue saturated at node {node}: allocated {allocated} b/s, cross traffic {cross} b/s")]
    Saturated { node: String, allocated: f64, cross: f64 },
    #[error("flow {flow} does not traverse node {node} on the analysed path")]
    InconsistentPath { flow: String, node: String },
    #[error("empty path")]
    EmptyPath,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}
