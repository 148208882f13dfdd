//! A decision laid out for simulation: flows with integer timings, one FIFO
//! queue per (node, slice key) and the WRR weights of every node.

use std::collections::BTreeMap;

use slicenc_core::analysis::{self, FlowInstance};
use slicenc_core::minplus::ArrivalCurve;
use slicenc_core::scenario::{Decision, Scenario};
use slicenc_core::topology::SliceKey;

use crate::wrr::weights_from_shares;
use crate::{ns_ceil, ns_round, SimError};

#[derive(Debug, Clone)]
pub struct SimFlow {
    pub id: String,
    pub key: SliceKey,
    /// Arrival curve as carried on the transport nodes.
    pub curve: ArrivalCurve,
    pub packet_bits: f64,
    pub path: Vec<usize>,
    /// Queue index at each hop.
    pub queues: Vec<usize>,
    /// Transmission time at each hop.
    pub tx_ns: Vec<u64>,
    /// Time from the end of transmission at a hop to arrival at the next one,
    /// or to delivery after the last.
    pub after_ns: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SimQueue {
    pub node: usize,
    pub key: SliceKey,
    pub share: f64,
    pub weight: u32,
    pub min_packet_bits: f64,
    pub max_packet_bits: f64,
    /// Longest transmission time of a packet in this queue.
    pub max_tx_ns: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SimNode {
    /// Queues served by this node, in round-robin order.
    pub queues: Vec<usize>,
    pub pipeline_ns: u64,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub flows: Vec<SimFlow>,
    pub queues: Vec<SimQueue>,
    pub nodes: Vec<SimNode>,
}

fn transmission_ns(bits: f64, capacity_bps: f64) -> u64 {
    ns_ceil(bits / capacity_bps).max(1)
}

impl Network {
    pub fn build(s: &Scenario, d: &Decision) -> Result<Self, SimError> {
        let topo = &s.topology;
        let instances: Vec<FlowInstance> = analysis::build_flows(s, d)?;
        let mut nodes: Vec<SimNode> =
            (0..topo.len()).map(|v| SimNode { queues: Vec::new(), pipeline_ns: ns_round(topo.node(v).latency_s) }).collect();
        let mut index: BTreeMap<(usize, SliceKey), usize> = BTreeMap::new();
        for f in &instances {
            for &v in &f.path.nodes {
                let next = index.len();
                index.entry((v, f.key)).or_insert(next);
            }
        }
        let mut queues: Vec<Option<SimQueue>> = vec![None; index.len()];
        // Round-robin order follows slice key order at each node.
        for (&(v, key), &q) in &index {
            nodes[v].queues.push(q);
            queues[q] = Some(SimQueue {
                node: v,
                key,
                share: d.shares.get(v, key),
                weight: 1,
                min_packet_bits: f64::INFINITY,
                max_packet_bits: 0.0,
                max_tx_ns: 0,
            });
        }
        let mut queues: Vec<SimQueue> = queues.into_iter().map(|q| q.expect("every index assigned")).collect();

        let mut flows = Vec::with_capacity(instances.len());
        for f in instances {
            let path = f.path.nodes.clone();
            let bits = f.carried_packet_bits;
            let mut qs = Vec::with_capacity(path.len());
            let mut tx = Vec::with_capacity(path.len());
            let mut after = Vec::with_capacity(path.len());
            for (i, &v) in path.iter().enumerate() {
                let q = index[&(v, f.key)];
                let t = transmission_ns(bits, topo.node(v).capacity_bps);
                let sq = &mut queues[q];
                sq.min_packet_bits = sq.min_packet_bits.min(bits);
                sq.max_packet_bits = sq.max_packet_bits.max(bits);
                sq.max_tx_ns = sq.max_tx_ns.max(t);
                qs.push(q);
                tx.push(t);
                let propagation = match path.get(i + 1) {
                    Some(&w) => {
                        let m = topo.distance(v, w).expect("paths follow links");
                        ns_round(m / s.doc.light_speed_mps)
                    }
                    None => 0,
                };
                after.push(nodes[v].pipeline_ns + propagation);
            }
            flows.push(SimFlow {
                id: f.id,
                key: f.key,
                curve: f.carried,
                packet_bits: bits,
                path,
                queues: qs,
                tx_ns: tx,
                after_ns: after,
            });
        }
        for node in &nodes {
            let shares: Vec<f64> = node.queues.iter().map(|&q| queues[q].share).collect();
            let bits: Vec<f64> = node.queues.iter().map(|&q| queues[q].max_packet_bits).collect();
            for (&q, w) in node.queues.iter().zip(weights_from_shares(&shares, &bits)) {
                queues[q].weight = w;
            }
        }
        Ok(Self { flows, queues, nodes })
    }

    /// Propagation along a flow's path, as simulated.
    pub fn propagation_ns(&self, flow: usize) -> u64 {
        let f = &self.flows[flow];
        f.after_ns.iter().zip(&f.path).map(|(a, &v)| a - self.nodes[v].pipeline_ns).sum()
    }
}
