//! Per-flow end-to-end delay of a complete decision.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{PacketClass, SplitId};
use crate::delay::{
    processing_delay, tree_delay, uniform_slice_delay, DelayBreakdown, RoutedFlow, UpdatedBurst,
};
use crate::error::{CatalogError, DelayError};
use crate::minplus::ArrivalCurve;
use crate::scenario::{Decision, Scenario, Vdu};
use crate::topology::{RoutePath, SliceKey};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{key} carries traffic but has no path")]
    MissingPath { key: SliceKey },
    #[error("vDU {0} is not in the decision")]
    MissingVdu(u32),
    #[error(transparent)]
    Delay(#[from] DelayError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// One flow as seen by the transport network.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowInstance {
    pub id: String,
    pub key: SliceKey,
    /// Traffic as offered by the UE.
    pub offered: ArrivalCurve,
    /// Traffic after split overhead, as carried on the transport nodes.
    pub carried: ArrivalCurve,
    pub packet_bytes: f64,
    pub carried_packet_bits: f64,
    pub path: RoutePath,
    /// True for flows generated from admission counts (identical within their slice).
    pub generated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub id: String,
    pub slice: String,
    pub vdu: u32,
    pub path: String,
    pub breakdown: DelayBreakdown,
    pub sla_s: Option<f64>,
    pub margin_s: Option<f64>,
    #[serde(skip)]
    pub bursts: Vec<UpdatedBurst>,
}

pub fn overhead(s: &Scenario, split: Option<SplitId>, slice: PacketClass) -> Result<f64, CatalogError> {
    match split {
        Some(id) if s.doc.apply_overhead => s.catalog.overhead_multiplier(id, slice),
        _ => Ok(1.0),
    }
}

/// Per-flow arrival curve of a generated flow on the transport network.
pub fn generated_curve(s: &Scenario, vdu: &Vdu, split: Option<SplitId>, slice: PacketClass) -> Result<ArrivalCurve, CatalogError> {
    let m = overhead(s, split, slice)?;
    let (rate, burst) = match slice {
        PacketClass::Urllc => (s.doc.slices.urllc.rate_bps, s.doc.slices.urllc.burst_bits),
        PacketClass::Embb => (vdu.embb_demand_bps, s.doc.slices.embb.burst_bits),
    };
    Ok(ArrivalCurve { rate: rate * m, burst: burst * m })
}

pub fn sla(s: &Scenario, slice: PacketClass) -> Option<f64> {
    match slice {
        PacketClass::Urllc => Some(s.doc.slices.urllc.delay_sla_s),
        PacketClass::Embb => s.doc.slices.embb.delay_sla_s,
    }
}

/// Processing delay of a slice at one vDU for the given offered load.
pub fn slice_processing(s: &Scenario, split: Option<SplitId>, load_bps: f64) -> Result<(f64, f64), CatalogError> {
    match (split, &s.processing) {
        (Some(id), Some(model)) => {
            let (du, cu) = s.catalog.processing_fractions(id)?;
            Ok(processing_delay(load_bps, du, cu, model))
        }
        _ => Ok((0.0, 0.0)),
    }
}

/// Fixed part of a path's delay: node latencies plus propagation.
pub fn transport_latency(s: &Scenario, path: &RoutePath) -> f64 {
    let t: f64 = path.nodes.iter().map(|n| s.topology.node(*n).latency_s).sum();
    t + s.topology.propagation_delay(path, s.doc.light_speed_mps)
}

/// Bound for one of `count` identical generated flows of a slice.
///
/// `rates[k]` is the slice rate at `path.nodes[k]`. On saturation the failing
/// path position is returned.
pub fn uniform_breakdown(
    s: &Scenario,
    vdu: &Vdu,
    split: Option<SplitId>,
    slice: PacketClass,
    count: u32,
    path: &RoutePath,
    rates: &[f64],
    latencies: &[f64],
) -> Result<DelayBreakdown, usize> {
    let curve = generated_curve(s, vdu, split, slice).expect("split validated");
    let q = uniform_slice_delay(&curve, count, rates, latencies)?;
    let load = match slice {
        PacketClass::Urllc => f64::from(count) * s.doc.slices.urllc.rate_bps,
        PacketClass::Embb => vdu.embb_demand_bps,
    };
    let (du, cu) = slice_processing(s, split, load).expect("split validated");
    let pd = s.topology.propagation_delay(path, s.doc.light_speed_mps);
    Ok(DelayBreakdown::new(q, du, cu, pd))
}

pub fn path_latencies(s: &Scenario, path: &RoutePath) -> Vec<f64> {
    path.nodes.iter().map(|n| s.topology.node(*n).latency_s).collect()
}

pub fn path_rates(s: &Scenario, d: &Decision, key: SliceKey, path: &RoutePath) -> Vec<f64> {
    path.nodes.iter().map(|n| d.shares.allocated_rate(&s.topology, *n, key)).collect()
}

/// All flows implied by the scenario and decision.
pub fn build_flows(s: &Scenario, d: &Decision) -> Result<Vec<FlowInstance>, AnalysisError> {
    let mut out = Vec::new();
    let lookup = |id: u32| d.vdu(id).ok_or(AnalysisError::MissingVdu(id));
    if s.uses_explicit_flows() {
        for f in &s.doc.flows {
            let vd = lookup(f.vdu)?;
            let key = SliceKey { slice: f.slice, vdu: f.vdu };
            let path = match &f.path {
                Some(ids) => s.topology.path_from_ids(ids).map_err(|_| AnalysisError::MissingPath { key })?,
                None => vd.path(f.slice).cloned().ok_or(AnalysisError::MissingPath { key })?,
            };
            let m = overhead(s, vd.split, f.slice)?;
            let offered = ArrivalCurve { rate: f.rate_bps, burst: f.burst_bits };
            out.push(FlowInstance {
                id: f.id.clone(),
                key,
                offered,
                carried: ArrivalCurve { rate: offered.rate * m, burst: offered.burst * m },
                packet_bytes: f.packet_bytes,
                carried_packet_bits: f.packet_bytes * 8.0 * m,
                path,
                generated: false,
            });
        }
        return Ok(out);
    }
    for v in &s.vdus {
        let vd = lookup(v.id)?;
        for (slice, count) in [(PacketClass::Urllc, vd.admitted), (PacketClass::Embb, u32::from(v.embb_demand_bps > 0.0))] {
            if count == 0 {
                continue;
            }
            let key = SliceKey { slice, vdu: v.id };
            let path = vd.path(slice).cloned().ok_or(AnalysisError::MissingPath { key })?;
            let m = overhead(s, vd.split, slice)?;
            let carried = generated_curve(s, v, vd.split, slice)?;
            let (rate, burst, bytes) = match slice {
                PacketClass::Urllc => {
                    let u = &s.doc.slices.urllc;
                    (u.rate_bps, u.burst_bits, u.packet_bytes)
                }
                PacketClass::Embb => (v.embb_demand_bps, s.doc.slices.embb.burst_bits, s.doc.slices.embb.packet_bytes),
            };
            for i in 1..=count {
                let id = match slice {
                    PacketClass::Urllc => format!("urllc-{}-{i}", v.id),
                    PacketClass::Embb => format!("embb-{}", v.id),
                };
                out.push(FlowInstance {
                    id,
                    key,
                    offered: ArrivalCurve { rate, burst },
                    carried,
                    packet_bytes: bytes,
                    carried_packet_bits: bytes * 8.0 * m,
                    path: path.clone(),
                    generated: true,
                });
            }
        }
    }
    Ok(out)
}

fn saturation(s: &Scenario, path: &RoutePath, rates: &[f64], pos: usize, cross: f64) -> DelayError {
    DelayError::Saturated {
        node: s.topology.node(path.nodes[pos]).id.clone(),
        allocated: rates[pos],
        cross,
    }
}

/// End-to-end bound of every flow.
pub fn analyze(s: &Scenario, d: &Decision) -> Result<Vec<FlowReport>, AnalysisError> {
    let flows = build_flows(s, d)?;
    let mut reports = Vec::with_capacity(flows.len());
    let mut cached: Option<(SliceKey, DelayBreakdown)> = None;
    for f in &flows {
        let vd = d.vdu(f.key.vdu).ok_or(AnalysisError::MissingVdu(f.key.vdu))?;
        let vdu = s.vdu(f.key.vdu).expect("validated");
        let rates = path_rates(s, d, f.key, &f.path);
        let (breakdown, bursts) = if f.generated {
            let hit = cached.filter(|(k, _)| *k == f.key).map(|(_, b)| b);
            let b = match hit {
                Some(b) => b,
                None => {
                    let count = flows.iter().filter(|g| g.key == f.key).count() as u32;
                    let lat = path_latencies(s, &f.path);
                    let b = uniform_breakdown(s, vdu, vd.split, f.key.slice, count, &f.path, &rates, &lat)
                        .map_err(|pos| {
                            saturation(s, &f.path, &rates, pos, f64::from(count - 1) * f.carried.rate)
                        })?;
                    cached = Some((f.key, b));
                    b
                }
            };
            (b, Vec::new())
        } else {
            let cross: Vec<RoutedFlow<'_>> = flows
                .iter()
                .filter(|g| g.key == f.key && g.id != f.id)
                .map(|g| RoutedFlow { id: &g.id, curve: g.carried, path: &g.path.nodes })
                .collect();
            let t = tree_delay(&s.topology, &f.carried, &f.path.nodes, &rates, &cross)?;
            let load: f64 = flows.iter().filter(|g| g.key == f.key).map(|g| g.offered.rate).sum();
            let (du, cu) = slice_processing(s, vd.split, load)?;
            let pd = s.topology.propagation_delay(&f.path, s.doc.light_speed_mps);
            (DelayBreakdown::new(t.delay, du, cu, pd), t.bursts)
        };
        let sla_s = sla(s, f.key.slice);
        reports.push(FlowReport {
            id: f.id.clone(),
            slice: f.key.slice.to_string(),
            vdu: f.key.vdu,
            path: s.topology.path_label(&f.path),
            breakdown,
            sla_s,
            margin_s: sla_s.map(|x| x - breakdown.total),
            bursts,
        });
    }
    Ok(reports)
}
