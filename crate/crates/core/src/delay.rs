//! End-to-end worst-case delay bounds for one flow of interest under FIFO
//! multiplexing inside its slice queue, plus processing and propagation terms.

use serde::{Deserialize, Serialize};

use crate::error::DelayError;
use crate::minplus::{ArrivalCurve, ServiceCurve};
use crate::topology::Topology;

/// Queueing, processing and propagation parts of an end-to-end bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DelayBreakdown {
    pub queueing: f64,
    pub processing_du: f64,
    pub processing_cu: f64,
    pub propagation: f64,
    pub total: f64,
}

impl DelayBreakdown {
    pub fn new(queueing: f64, processing_du: f64, processing_cu: f64, propagation: f64) -> Self {
        Self {
            queueing,
            processing_du,
            processing_cu,
            propagation,
            total: queueing + (processing_du + processing_cu) + propagation,
        }
    }

    pub fn processing(&self) -> f64 {
        self.processing_du + self.processing_cu
    }
}

fn saturated(node: String, allocated: f64, cross: f64) -> DelayError {
    DelayError::Saturated { node, allocated, cross }
}

/// Tandem bound with the same cross aggregate at every node.
pub fn tandem_delay(
    foi: &ArrivalCurve,
    cross: &[ArrivalCurve],
    nodes: &[ServiceCurve],
) -> Result<f64, DelayError> {
    if nodes.is_empty() {
        return Err(DelayError::EmptyPath);
    }
    let rho_y: f64 = cross.iter().map(|c| c.rate).sum();
    let sigma_y: f64 = cross.iter().map(|c| c.burst).sum();
    let mut net_rate = f64::INFINITY;
    for (v, s) in nodes.iter().enumerate() {
        if s.rate - rho_y <= 0.0 {
            return Err(saturated(format!("#{v}"), s.rate, rho_y));
        }
        net_rate = net_rate.min(s.rate);
    }
    let mut latency_sum = 0.0;
    let mut prefix = 0.0;
    let mut cross_terms = 0.0;
    for s in nodes {
        cross_terms += (rho_y * prefix + sigma_y) / s.rate;
        prefix += s.latency;
        latency_sum += s.latency;
    }
    Ok(latency_sum + foi.burst / (net_rate - rho_y) + cross_terms)
}

/// Cross flow of a sliced tandem, present on a subset of the FoI's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCross {
    pub curve: ArrivalCurve,
    /// `present[v]` is true when the flow shares the queue at path position `v`.
    pub present: Vec<bool>,
}

/// Tandem bound with per-node slice rates and per-node cross populations.
pub fn sliced_tandem_delay(
    foi: &ArrivalCurve,
    cross: &[PartialCross],
    nodes: &[ServiceCurve],
) -> Result<f64, DelayError> {
    if nodes.is_empty() {
        return Err(DelayError::EmptyPath);
    }
    if let Some(c) = cross.iter().find(|c| c.present.len() != nodes.len()) {
        return Err(DelayError::InconsistentPath {
            flow: format!("{:?}", c.curve),
            node: format!("{} positions", c.present.len()),
        });
    }
    let mut bottleneck = f64::INFINITY;
    let mut latency_sum = 0.0;
    let mut cross_terms = 0.0;
    for (v, s) in nodes.iter().enumerate() {
        let mut rho_y = 0.0;
        let mut burst_y = 0.0;
        for c in cross.iter().filter(|c| c.present[v]) {
            rho_y += c.curve.rate;
            let upstream: f64 = (0..v).filter(|&j| c.present[j]).map(|j| nodes[j].latency).sum();
            burst_y += c.curve.burst + c.curve.rate * upstream;
        }
        if s.rate - rho_y <= 0.0 {
            return Err(saturated(format!("#{v}"), s.rate, rho_y));
        }
        bottleneck = bottleneck.min(s.rate - rho_y);
        latency_sum += s.latency;
        cross_terms += burst_y / s.rate;
    }
    Ok(latency_sum + foi.burst / bottleneck + cross_terms)
}

/// Cross flow with its own route through the topology.
#[derive(Debug, Clone, Copy)]
pub struct RoutedFlow<'a> {
    pub id: &'a str,
    pub curve: ArrivalCurve,
    pub path: &'a [usize],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatedBurst {
    pub node: String,
    pub flow: String,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDelay {
    pub delay: f64,
    pub bottleneck_node: String,
    pub bottleneck_rate: f64,
    pub bursts: Vec<UpdatedBurst>,
}

/// Tree-topology bound: every cross flow's burst grows with the latencies of
/// the nodes it crossed before meeting the FoI at each node.
///
/// `rates[k]` is the slice rate allocated at `path[k]`.
pub fn tree_delay(
    topo: &Topology,
    foi: &ArrivalCurve,
    path: &[usize],
    rates: &[f64],
    cross: &[RoutedFlow<'_>],
) -> Result<TreeDelay, DelayError> {
    if path.is_empty() {
        return Err(DelayError::EmptyPath);
    }
    assert_eq!(path.len(), rates.len(), "one allocated rate per path node");
    for f in cross {
        for (i, n) in f.path.iter().enumerate() {
            if *n >= topo.len() || f.path[..i].contains(n) {
                return Err(DelayError::InconsistentPath {
                    flow: f.id.to_string(),
                    node: n.to_string(),
                });
            }
        }
    }
    let mut bottleneck = f64::INFINITY;
    let mut bottleneck_node = 0;
    let mut total = 0.0;
    let mut bursts = Vec::new();
    for (k, (&v, &rate)) in path.iter().zip(rates).enumerate() {
        let mut rho_y = 0.0;
        let mut burst_y = 0.0;
        for f in cross {
            let Some(pos) = f.path.iter().position(|n| *n == v) else { continue };
            let upstream: f64 = f.path[..pos].iter().map(|h| topo.node(*h).latency_s).sum();
            let b = f.curve.burst + f.curve.rate * upstream;
            bursts.push(UpdatedBurst {
                node: topo.node(v).id.clone(),
                flow: f.id.to_string(),
                bits: b,
            });
            rho_y += f.curve.rate;
            burst_y += b;
        }
        if rate - rho_y <= 0.0 {
            return Err(saturated(topo.node(v).id.clone(), rate, rho_y));
        }
        if rate - rho_y < bottleneck {
            bottleneck = rate - rho_y;
            bottleneck_node = k;
        }
        total += topo.node(v).latency_s + burst_y / rate;
    }
    Ok(TreeDelay {
        delay: foi.burst / bottleneck + total,
        bottleneck_node: topo.node(path[bottleneck_node]).id.clone(),
        bottleneck_rate: bottleneck,
        bursts,
    })
}

/// Tree bound for `count` identical flows sharing one path, the FoI being one of them.
///
/// Returns the index of the saturated path position on failure.
pub fn uniform_slice_delay(
    flow: &ArrivalCurve,
    count: u32,
    rates: &[f64],
    latencies: &[f64],
) -> Result<f64, usize> {
    let others = f64::from(count.saturating_sub(1));
    let rho_y = others * flow.rate;
    let mut bottleneck = f64::INFINITY;
    let mut prefix = 0.0;
    let mut total = 0.0;
    for (k, (&rate, &t)) in rates.iter().zip(latencies).enumerate() {
        if rate - rho_y <= 0.0 {
            return Err(k);
        }
        bottleneck = bottleneck.min(rate - rho_y);
        total += t + others * (flow.burst + flow.rate * prefix) / rate;
        prefix += t;
    }
    Ok(flow.burst / bottleneck + total)
}

/// Parameters of the linear processing-time model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessingModel {
    /// Full-stack processing time for the reference load, seconds.
    pub reference_time_s: f64,
    /// Reference aggregate load, bits per second.
    pub reference_rate_bps: f64,
    pub du_cores: u32,
    pub cu_cores: u32,
}

impl Default for ProcessingModel {
    fn default() -> Self {
        Self { reference_time_s: 750e-6, reference_rate_bps: 1e9, du_cores: 16, cu_cores: 32 }
    }
}

/// DU and CU processing delay for an aggregate load, given the percentages of
/// full-stack work placed at each side.
pub fn processing_delay(
    load_bps: f64,
    du_percent: f64,
    cu_percent: f64,
    model: &ProcessingModel,
) -> (f64, f64) {
    let scale = model.reference_time_s / model.reference_rate_bps * load_bps;
    (
        scale * (du_percent / 100.0) / f64::from(model.du_cores),
        scale * (cu_percent / 100.0) / f64::from(model.cu_cores),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Link, TransportNode};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn appendix() -> (Topology, Vec<f64>) {
        let caps = [0.05e9, 0.1e9, 0.25e9, 0.25e9, 0.25e9];
        let shares = [0.5, 0.25, 0.25, 0.125, 0.0625];
        let t = [40.96e-6, 40.96e-6, 36.384e-6, 28.192e-6, 24.096e-6];
        let nodes = (0..5)
            .map(|i| TransportNode { id: format!("n{}", i + 1), capacity_bps: caps[i], latency_s: t[i] })
            .collect();
        let links = (0..4)
            .map(|i| Link { a: format!("n{}", i + 1), b: format!("n{}", i + 2), distance_m: 0.0 })
            .collect();
        let rates = (0..5).map(|i| caps[i] * shares[i]).collect();
        (Topology::new(nodes, links).unwrap(), rates)
    }

    #[test]
    fn appendix_tree_bound() {
        let (topo, rates) = appendix();
        let path = [0, 1, 2, 3, 4];
        let foi = ArrivalCurve::new(1.024e6, 1024.0).unwrap();
        let cross = [
            RoutedFlow { id: "f2", curve: ArrivalCurve::new(512e3, 4096.0).unwrap(), path: &path },
            RoutedFlow { id: "f3", curve: ArrivalCurve::new(256e3, 2048.0).unwrap(), path: &path },
        ];
        let r = tree_delay(&topo, &foi, &path, &rates, &cross).unwrap();
        assert!(rel(r.delay, 1.43153667431e-3) < 1e-9, "{}", r.delay);
        assert_eq!(r.bottleneck_node, "n5");
        assert!(rel(r.bottleneck_rate, 14.857e6) < 1e-12);
        let expected = [
            4096.0,
            2048.0,
            4116.97152,
            2058.48576,
            4137.94304,
            2068.97152,
            4156.571648,
            2078.285824,
            4171.005952,
            2085.502976,
        ];
        assert_eq!(r.bursts.len(), expected.len());
        for (b, e) in r.bursts.iter().zip(expected) {
            assert!(rel(b.bits, e) < 1e-9, "{b:?} vs {e}");
        }
    }

    #[test]
    fn appendix_sliced_and_uniform_agree() {
        let (topo, rates) = appendix();
        let nodes: Vec<ServiceCurve> = rates
            .iter()
            .enumerate()
            .map(|(i, r)| ServiceCurve::new(*r, topo.node(i).latency_s).unwrap())
            .collect();
        let foi = ArrivalCurve::new(1.024e6, 1024.0).unwrap();
        let cross = vec![
            PartialCross { curve: ArrivalCurve::new(512e3, 4096.0).unwrap(), present: vec![true; 5] },
            PartialCross { curve: ArrivalCurve::new(256e3, 2048.0).unwrap(), present: vec![true; 5] },
        ];
        let d = sliced_tandem_delay(&foi, &cross, &nodes).unwrap();
        assert!(rel(d, 1.43153667431e-3) < 1e-9);

        let lat: Vec<f64> = nodes.iter().map(|n| n.latency).collect();
        let flow = ArrivalCurve::new(512e3, 4096.0).unwrap();
        let u = uniform_slice_delay(&flow, 3, &rates, &lat).unwrap();
        let path = [0, 1, 2, 3, 4];
        let routed = [
            RoutedFlow { id: "a", curve: flow, path: &path },
            RoutedFlow { id: "b", curve: flow, path: &path },
        ];
        let t = tree_delay(&topo, &flow, &path, &rates, &routed).unwrap();
        assert!(rel(u, t.delay) < 1e-12);
    }

    #[test]
    fn two_node_expansion() {
        let foi = ArrivalCurve::new(1e6, 2000.0).unwrap();
        let f1 = ArrivalCurve::new(3e6, 5000.0).unwrap();
        let n = [ServiceCurve::new(20e6, 1e-4).unwrap(), ServiceCurve::new(15e6, 2e-4).unwrap()];
        let expected = n[0].latency
            + n[1].latency
            + foi.burst / (n[0].rate - f1.rate).min(n[1].rate - f1.rate)
            + f1.burst / n[0].rate
            + (f1.rate * n[0].latency + f1.burst) / n[1].rate;
        let got = tandem_delay(&foi, &[f1], &n).unwrap();
        assert!(rel(got, expected) < 1e-14);
    }

    #[test]
    fn degenerate_cases() {
        let foi = ArrivalCurve::new(1e6, 1000.0).unwrap();
        let s = ServiceCurve::new(10e6, 5e-5).unwrap();
        let d = tandem_delay(&foi, &[], &[s; 4]).unwrap();
        assert!(rel(d, 4.0 * 5e-5 + 1000.0 / 10e6) < 1e-14);

        let cross = ArrivalCurve::new(2e6, 3000.0).unwrap();
        let single = tandem_delay(&foi, &[cross], &[s]).unwrap();
        let lo = crate::minplus::leftover_fifo(&s, &cross).unwrap();
        let via = crate::minplus::delay_bound_single(&foi, &lo).unwrap();
        assert!(rel(single, via) < 1e-14);

        let starved = [s, ServiceCurve { rate: 0.0, latency: 0.0 }];
        assert!(matches!(
            sliced_tandem_delay(&foi, &[], &starved),
            Err(DelayError::Saturated { .. })
        ));
        assert!(matches!(tandem_delay(&foi, &[], &[]), Err(DelayError::EmptyPath)));
    }

    #[test]
    fn processing_examples() {
        let m = ProcessingModel::default();
        let load = 60.0 * 1.024e6;
        let (du, cu) = processing_delay(load, 0.0, 94.19, &m);
        assert_eq!(du, 0.0);
        assert!((cu - 1.356e-6).abs() < 1e-9);
        let (du, cu) = processing_delay(load, 59.17, 35.02, &m);
        assert!((du + cu - 2.21e-6).abs() < 5e-9);
        assert_eq!(processing_delay(0.0, 59.17, 35.02, &m), (0.0, 0.0));
    }

    #[test]
    fn breakdown_sums() {
        let b = DelayBreakdown::new(1e-4, 2e-6, 3e-7, 6.6e-5);
        assert!((b.total - (b.queueing + b.processing() + b.propagation)).abs() < 1e-12);
    }
}
