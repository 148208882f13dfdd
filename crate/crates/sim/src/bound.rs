//! Delay bounds to hold simulated delays against.
//!
//! [`wrr_bounds`] describes the schedule the simulator actually runs. In one
//! round a backlogged WRR queue sends its quantum `q` while the other queues
//! of the node send at most `Q`, so it sees a rate-latency service curve with
//! rate `q / (q + Q)` of the link and latency `Q` plus one packet, both in
//! transmission time. Adding the node's pipeline delay gives the per-node
//! curve fed to [`tree_delay`]. Integer transmission times are used as
//! simulated, so no further tolerance is needed for rounding.

use std::collections::BTreeMap;

use slicenc_core::analysis;
use slicenc_core::delay::{tree_delay, RoutedFlow};
use slicenc_core::scenario::{Decision, Scenario};
use slicenc_core::topology::{SliceKey, Topology, TransportNode};

use crate::network::Network;
use crate::SimError;

/// Rate and latency a queue is guaranteed by its node's round robin.
pub(crate) fn queue_service(net: &Network, q: usize) -> (f64, f64) {
    let queue = &net.queues[q];
    let node = &net.nodes[queue.node];
    let others_ns: u64 = node
        .queues
        .iter()
        .filter(|&&j| j != q)
        .map(|&j| u64::from(net.queues[j].weight) * net.queues[j].max_tx_ns)
        .sum();
    let round_ns = u64::from(queue.weight) * queue.max_tx_ns + others_ns;
    let rate = f64::from(queue.weight) * queue.min_packet_bits / (round_ns as f64 * 1e-9);
    let latency = (others_ns + queue.max_tx_ns + node.pipeline_ns) as f64 * 1e-9;
    (rate, latency)
}

pub(crate) fn bounds_for(net: &Network, s: &Scenario) -> Vec<Option<f64>> {
    let mut by_key: BTreeMap<SliceKey, Vec<usize>> = BTreeMap::new();
    for (i, f) in net.flows.iter().enumerate() {
        by_key.entry(f.key).or_default().push(i);
    }
    let mut out = vec![None; net.flows.len()];
    for members in by_key.values() {
        // The same topology with each node's latency replaced by the queue's.
        let mut nodes: Vec<TransportNode> = s.topology.nodes().to_vec();
        let mut rate = vec![0.0; nodes.len()];
        for &i in members {
            let f = &net.flows[i];
            for (&v, &q) in f.path.iter().zip(&f.queues) {
                let (r, t) = queue_service(net, q);
                rate[v] = r;
                nodes[v].latency_s = t;
            }
        }
        let topo = Topology::new(nodes, s.topology.links().to_vec()).expect("same graph as the scenario");
        for &i in members {
            let f = &net.flows[i];
            let cross: Vec<RoutedFlow<'_>> = members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| RoutedFlow { id: &net.flows[j].id, curve: net.flows[j].curve, path: &net.flows[j].path })
                .collect();
            let rates: Vec<f64> = f.path.iter().map(|&v| rate[v]).collect();
            out[i] = tree_delay(&topo, &f.curve, &f.path, &rates, &cross)
                .ok()
                .map(|t| t.delay + net.propagation_ns(i) as f64 * 1e-9);
        }
    }
    out
}

/// Per-flow bound under the simulated WRR schedule, propagation included.
/// `None` where the schedule leaves a flow no positive leftover rate.
pub fn wrr_bounds(s: &Scenario, d: &Decision) -> Result<Vec<(String, Option<f64>)>, SimError> {
    let net = Network::build(s, d)?;
    let b = bounds_for(&net, s);
    Ok(net.flows.into_iter().zip(b).map(|(f, b)| (f.id, b)).collect())
}

/// Per-flow transport bound of the share allocation itself: queueing plus
/// propagation, without processing.
pub fn gps_bounds(s: &Scenario, d: &Decision) -> Result<Vec<(String, f64)>, SimError> {
    Ok(analysis::analyze(s, d)?
        .into_iter()
        .map(|r| (r.id, r.breakdown.queueing + r.breakdown.propagation))
        .collect())
}
