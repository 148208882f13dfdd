//! Queue capacities that the share allocation guarantees never to overflow.

use serde::Serialize;
use slicenc_core::error::CurveError;
use slicenc_core::minplus::{backlog_bound, ArrivalCurve, ServiceCurve};
use slicenc_core::scenario::{Decision, Scenario};
use slicenc_core::topology::SliceKey;

use crate::network::Network;
use crate::SimError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueBuffer {
    pub node: String,
    pub key: SliceKey,
    pub packets: u64,
    /// Capacity in bits: whole packets of the queue's largest size.
    pub bits: f64,
}

/// Whole packets needed to hold the backlog bound; at least one.
pub fn buffer_packets(arrival: &ArrivalCurve, service: &ServiceCurve, packet_bits: f64) -> Result<u64, CurveError> {
    let bits = backlog_bound(arrival, service)?;
    Ok(((bits / packet_bits).ceil() as u64).max(1))
}

pub(crate) fn sized(net: &Network, s: &Scenario) -> Result<Vec<QueueBuffer>, SimError> {
    let topo = &s.topology;
    let mut arrival = vec![ArrivalCurve::ZERO; net.queues.len()];
    for f in &net.flows {
        let mut upstream = 0.0;
        for (&v, &q) in f.path.iter().zip(&f.queues) {
            arrival[q].rate += f.curve.rate;
            arrival[q].burst += f.curve.burst + f.curve.rate * upstream;
            upstream += topo.node(v).latency_s;
        }
    }
    net.queues
        .iter()
        .zip(&arrival)
        .map(|(q, a)| {
            let node = topo.node(q.node);
            let service = ServiceCurve { rate: q.share * node.capacity_bps, latency: node.latency_s };
            let packets = buffer_packets(a, &service, q.max_packet_bits).map_err(|_| SimError::Unstable {
                node: node.id.clone(),
                key: q.key.to_string(),
                arrival: a.rate,
                service: service.rate,
            })?;
            Ok(QueueBuffer { node: node.id.clone(), key: q.key, packets, bits: packets as f64 * q.max_packet_bits })
        })
        .collect()
}

/// Capacity of every queue from the backlog bound of its aggregate arrival
/// against the allocated share and the node latency.
pub fn size_buffers(s: &Scenario, d: &Decision) -> Result<Vec<QueueBuffer>, SimError> {
    sized(&Network::build(s, d)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backlog_rounds_up_to_packets() {
        let a = ArrivalCurve::new(512e3, 4096.0).unwrap();
        let s = ServiceCurve::new(25e6, 40.96e-6).unwrap();
        assert!((backlog_bound(&a, &s).unwrap() - 4116.97152).abs() < 1e-9);
        assert_eq!(buffer_packets(&a, &s, 1024.0).unwrap(), 5);
    }

    #[test]
    fn zero_traffic_still_gets_one_packet() {
        let s = ServiceCurve::new(1e9, 1e-5).unwrap();
        assert_eq!(buffer_packets(&ArrivalCurve::ZERO, &s, 1024.0).unwrap(), 1);
    }
}
