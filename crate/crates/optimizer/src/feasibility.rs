//! Constraint-by-constraint verification of a complete decision.

use std::fmt;

use serde::Serialize;
use slicenc_core::analysis::{self, AnalysisError, FlowReport};
use slicenc_core::catalog::PacketClass;
use slicenc_core::error::DelayError;
use slicenc_core::scenario::{Decision, Scenario};
use slicenc_core::topology::{RoutePath, SliceKey};

/// Slack allowed on share sums and rate comparisons.
pub const TOLERANCE: f64 = 1e-9;

pub fn within_share_limit(total: f64) -> bool {
    total <= 1.0 + TOLERANCE
}

pub fn rate_covered(need: f64, allocated: f64) -> bool {
    need <= allocated * (1.0 + TOLERANCE)
}

/// Aggregate carried rate of `count` identical flows.
pub fn slice_load(per_flow_rate: f64, count: u32) -> f64 {
    per_flow_rate * f64::from(count)
}

/// Rate a vDU holds at a node across both of its slices.
pub fn vdu_rate(urllc_share: f64, embb_share: f64, capacity: f64) -> f64 {
    (urllc_share + embb_share) * capacity
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    Routing,
    ProcessingChain,
    Admission,
    UeRate,
    ShareLimit,
    NodeRate,
    SplitCapacity,
    SplitDelay,
    Stability,
    SlaDelay,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Routing => "routing",
            Self::ProcessingChain => "processing-chain",
            Self::Admission => "admission",
            Self::UeRate => "ue-rate",
            Self::ShareLimit => "share-limit",
            Self::NodeRate => "node-rate",
            Self::SplitCapacity => "split-capacity",
            Self::SplitDelay => "split-delay",
            Self::Stability => "stability",
            Self::SlaDelay => "sla-delay",
        };
        f.write_str(s)
    }
}

/// One evaluated constraint. `slack` is positive when satisfied with room to spare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub kind: ConstraintKind,
    pub subject: String,
    pub value: f64,
    pub limit: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl ConstraintCheck {
    fn at_most(kind: ConstraintKind, subject: String, value: f64, limit: f64, satisfied: bool) -> Self {
        Self { kind, subject, value, limit, slack: limit - value, satisfied }
    }

    fn at_least(kind: ConstraintKind, subject: String, value: f64, limit: f64, satisfied: bool) -> Self {
        Self { kind, subject, value, limit, slack: value - limit, satisfied }
    }

    fn broken(kind: ConstraintKind, subject: String) -> Self {
        Self { kind, subject, value: f64::NAN, limit: f64::NAN, slack: f64::NEG_INFINITY, satisfied: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
    pub flows: Vec<FlowReport>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.satisfied)
    }

    pub fn worst_urllc_delay(&self) -> Option<f64> {
        self.flows
            .iter()
            .filter(|f| f.slice == PacketClass::Urllc.to_string())
            .map(|f| f.breakdown.total)
            .fold(None, |m, d| Some(m.map_or(d, |x: f64| x.max(d))))
    }
}

struct KeyTraffic {
    key: SliceKey,
    path: RoutePath,
    load: f64,
}

/// Evaluates every constraint of the decision. Violations are reported, never raised.
pub fn check_feasibility(s: &Scenario, d: &Decision) -> FeasibilityReport {
    use ConstraintKind::*;
    let mut checks = Vec::new();
    let explicit = s.uses_explicit_flows();
    let topo = &s.topology;

    let mut traffic: Vec<KeyTraffic> = Vec::new();
    let mut routed_ok = true;
    match analysis::build_flows(s, d) {
        Ok(flows) => {
            for f in &flows {
                match traffic.iter_mut().find(|t| t.key == f.key) {
                    Some(t) if t.path != f.path => {
                        checks.push(ConstraintCheck::broken(Routing, format!("{} uses several paths", f.key)));
                        routed_ok = false;
                    }
                    Some(t) if !f.generated => t.load += f.carried.rate,
                    Some(_) => {}
                    None => {
                        let count = if f.generated {
                            flows.iter().filter(|g| g.key == f.key).count() as u32
                        } else {
                            1
                        };
                        traffic.push(KeyTraffic { key: f.key, path: f.path.clone(), load: slice_load(f.carried.rate, count) });
                    }
                }
            }
        }
        Err(e) => {
            checks.push(ConstraintCheck::broken(Routing, e.to_string()));
            routed_ok = false;
        }
    }
    let routes: Vec<RoutePath> = traffic.iter().map(|t| t.path.clone()).collect();
    if let Err(e) = topo.validate_feedforward(&routes) {
        checks.push(ConstraintCheck::broken(Routing, e.to_string()));
        routed_ok = false;
    }

    for v in &d.vdus {
        let vdu = s.vdu(v.vdu).expect("decision resolved against scenario");
        let subject = format!("vdu {}", v.vdu);
        match v.split {
            Some(id) => {
                let allowed = s.candidates.contains(&id);
                let chain = s.catalog.split(id).map(|o| o.respects_chain()).unwrap_or(false);
                checks.push(ConstraintCheck::at_least(
                    ProcessingChain,
                    format!("{subject} split {id}"),
                    f64::from(u8::from(allowed && chain)),
                    1.0,
                    allowed && chain,
                ));
            }
            None if !explicit => checks.push(ConstraintCheck::broken(ProcessingChain, format!("{subject} has no split"))),
            None => {}
        }
        if !explicit {
            checks.push(ConstraintCheck::at_most(
                Admission,
                subject.clone(),
                f64::from(v.admitted),
                f64::from(vdu.urllc_cap),
                v.admitted <= vdu.urllc_cap,
            ));
        }
    }

    let min_rate = s.doc.slices.urllc.min_rate_bps;
    if explicit {
        for f in s.doc.flows.iter().filter(|f| f.slice == PacketClass::Urllc) {
            checks.push(ConstraintCheck::at_least(UeRate, f.id.clone(), f.rate_bps, min_rate, f.rate_bps >= min_rate));
        }
    } else if d.vdus.iter().any(|v| v.admitted > 0) {
        let r = s.doc.slices.urllc.rate_bps;
        checks.push(ConstraintCheck::at_least(UeRate, "urllc flows".into(), r, min_rate, r >= min_rate));
    }

    let mut nodes: Vec<usize> = d.shares.iter().map(|(n, _, _)| n).collect();
    nodes.dedup();
    for n in nodes {
        let total = d.shares.node_total(n);
        checks.push(ConstraintCheck::at_most(ShareLimit, topo.node(n).id.clone(), total, 1.0, within_share_limit(total)));
    }

    for t in &traffic {
        for &n in &t.path.nodes {
            let alloc = d.shares.allocated_rate(topo, n, t.key);
            checks.push(ConstraintCheck::at_least(
                NodeRate,
                format!("{} at {}", t.key, topo.node(n).id),
                alloc,
                t.load,
                rate_covered(t.load, alloc),
            ));
        }
    }

    for v in &d.vdus {
        let Some(id) = v.split else { continue };
        let (Ok(need), Ok(limit)) = (
            s.catalog.required_capacity(id, s.doc.split_capacity_packet_bytes),
            s.catalog.delay_requirement(id),
        ) else {
            continue;
        };
        let paths: Vec<&RoutePath> = traffic.iter().filter(|t| t.key.vdu == v.vdu).map(|t| &t.path).collect();
        let mut union: Vec<usize> = paths.iter().flat_map(|p| p.nodes.iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        for n in union {
            let u = d.shares.get(n, SliceKey { slice: PacketClass::Urllc, vdu: v.vdu });
            let e = d.shares.get(n, SliceKey { slice: PacketClass::Embb, vdu: v.vdu });
            let alloc = vdu_rate(u, e, topo.node(n).capacity_bps);
            checks.push(ConstraintCheck::at_least(
                SplitCapacity,
                format!("vdu {} {id} at {}", v.vdu, topo.node(n).id),
                alloc,
                need,
                rate_covered(need, alloc),
            ));
        }
        for t in traffic.iter().filter(|t| t.key.vdu == v.vdu) {
            let lat = analysis::transport_latency(s, &t.path);
            checks.push(ConstraintCheck::at_most(
                SplitDelay,
                format!("{} {id} via {}", t.key, topo.path_label(&t.path)),
                lat,
                limit,
                lat <= limit,
            ));
        }
    }

    let mut flows = Vec::new();
    if routed_ok {
        match analysis::analyze(s, d) {
            Ok(reports) => {
                for r in &reports {
                    if let Some(sla) = r.sla_s {
                        checks.push(ConstraintCheck::at_most(
                            SlaDelay,
                            r.id.clone(),
                            r.breakdown.total,
                            sla,
                            r.breakdown.total <= sla,
                        ));
                    }
                }
                flows = reports;
            }
            Err(AnalysisError::Delay(DelayError::Saturated { node, allocated, cross })) => {
                checks.push(ConstraintCheck::at_least(Stability, node, allocated, cross, false));
            }
            Err(e) => checks.push(ConstraintCheck::broken(Stability, e.to_string())),
        }
    }
    FeasibilityReport { checks, flows }
}
