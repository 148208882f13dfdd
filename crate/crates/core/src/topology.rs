//! Transport-network graph, path enumeration, GPS share bookkeeping and
//! propagation delay.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::PacketClass;
use crate::error::TopologyError;

pub const LIGHT_SPEED: f64 = 3.0e8;
pub const FIBER_SPEED: f64 = 2.0e8;
pub const DEFAULT_LINK_DISTANCE_M: f64 = 5000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportNode {
    pub id: String,
    pub capacity_bps: f64,
    pub latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub a: String,
    pub b: String,
    #[serde(default = "default_distance")]
    pub distance_m: f64,
}

fn default_distance() -> f64 {
    DEFAULT_LINK_DISTANCE_M
}

/// Slice instance attached to one vDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SliceKey {
    pub slice: PacketClass,
    pub vdu: u32,
}

impl fmt::Display for SliceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.slice, self.vdu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: String,
    pub key: SliceKey,
    pub rate_bps: f64,
    pub burst_bits: f64,
    pub packet_bytes: f64,
}

impl FlowSpec {
    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.rate_bps > 0.0 && self.rate_bps.is_finite()) {
            return Err(TopologyError::Invalid(format!("flow {} needs a positive rate", self.id)));
        }
        if !(self.packet_bytes > 0.0) {
            return Err(TopologyError::Invalid(format!("flow {} needs a packet size", self.id)));
        }
        if self.burst_bits < self.packet_bytes * 8.0 {
            return Err(TopologyError::Invalid(format!(
                "flow {} burst {} b is smaller than one packet",
                self.id, self.burst_bits
            )));
        }
        Ok(())
    }
}

/// Ordered CU-to-vDU node sequence, stored as node indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoutePath {
    pub nodes: Vec<usize>,
}

impl RoutePath {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.contains(&node)
    }

    pub fn position(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|n| *n == node)
    }

    /// True when `self` visits a subset of `other`'s nodes in the same order.
    pub fn is_subsequence_of(&self, other: &RoutePath) -> bool {
        let mut it = other.nodes.iter();
        self.nodes.iter().all(|n| it.any(|m| m == n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<TransportNode>,
    links: Vec<Link>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Topology {
    pub fn new(nodes: Vec<TransportNode>, links: Vec<Link>) -> Result<Self, TopologyError> {
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !(n.capacity_bps > 0.0 && n.capacity_bps.is_finite()) {
                return Err(TopologyError::Invalid(format!("node {} needs a positive capacity", n.id)));
            }
            if !(n.latency_s >= 0.0 && n.latency_s.is_finite()) {
                return Err(TopologyError::Invalid(format!("node {} has a negative latency", n.id)));
            }
            if index.insert(n.id.clone(), i).is_some() {
                return Err(TopologyError::DuplicateNode(n.id.clone()));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for l in &links {
            let a = *index.get(&l.a).ok_or_else(|| TopologyError::UnknownNode(l.a.clone()))?;
            let b = *index.get(&l.b).ok_or_else(|| TopologyError::UnknownNode(l.b.clone()))?;
            if a == b {
                return Err(TopologyError::Invalid(format!("self-loop at {}", l.a)));
            }
            if !(l.distance_m >= 0.0 && l.distance_m.is_finite()) {
                return Err(TopologyError::Invalid(format!("link {}-{} has a negative length", l.a, l.b)));
            }
            if adjacency[a].iter().any(|(n, _)| *n == b) {
                return Err(TopologyError::Invalid(format!("duplicate link {}-{}", l.a, l.b)));
            }
            adjacency[a].push((b, l.distance_m));
            adjacency[b].push((a, l.distance_m));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|(n, _)| *n);
        }
        Ok(Self { nodes, links, index, adjacency })
    }

    pub fn nodes(&self) -> &[TransportNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, idx: usize) -> &TransportNode {
        &self.nodes[idx]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize, TopologyError> {
        self.index.get(id).copied().ok_or_else(|| TopologyError::UnknownNode(id.to_string()))
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency[a].iter().find(|(n, _)| *n == b).map(|(_, d)| *d)
    }

    /// Builds a path from node ids, checking adjacency and acyclicity.
    pub fn path_from_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<RoutePath, TopologyError> {
        let nodes = ids.iter().map(|id| self.index_of(id.as_ref())).collect::<Result<Vec<_>, _>>()?;
        self.check_path(&nodes)?;
        Ok(RoutePath { nodes })
    }

    pub fn check_path(&self, nodes: &[usize]) -> Result<(), TopologyError> {
        if nodes.is_empty() {
            return Err(TopologyError::InvalidPath("empty path".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].contains(n) {
                return Err(TopologyError::InvalidPath(format!("node {} repeats", self.nodes[*n].id)));
            }
        }
        for w in nodes.windows(2) {
            if self.distance(w[0], w[1]).is_none() {
                return Err(TopologyError::NotAdjacent(
                    self.nodes[w[0]].id.clone(),
                    self.nodes[w[1]].id.clone(),
                ));
            }
        }
        Ok(())
    }

    pub fn path_ids(&self, path: &RoutePath) -> Vec<String> {
        path.nodes.iter().map(|n| self.nodes[*n].id.clone()).collect()
    }

    pub fn path_label(&self, path: &RoutePath) -> String {
        self.path_ids(path).join(">")
    }

    pub fn link_distances(&self, path: &RoutePath) -> Vec<f64> {
        path.nodes
            .windows(2)
            .map(|w| self.distance(w[0], w[1]).expect("path checked at construction"))
            .collect()
    }

    pub fn path_distance(&self, path: &RoutePath) -> f64 {
        self.link_distances(path).iter().sum()
    }

    /// All simple paths from `cu` to `vdu`, fewest hops first, then by node index sequence.
    pub fn enumerate_paths(
        &self,
        cu: usize,
        vdu: usize,
        hop_limit: Option<usize>,
    ) -> Result<Vec<RoutePath>, TopologyError> {
        let limit = hop_limit.unwrap_or(usize::MAX);
        let mut out = Vec::new();
        let mut stack = vec![cu];
        let mut on_path = vec![false; self.nodes.len()];
        on_path[cu] = true;
        self.dfs_paths(vdu, limit, &mut stack, &mut on_path, &mut out);
        if out.is_empty() {
            return Err(TopologyError::Unreachable {
                cu: self.nodes[cu].id.clone(),
                vdu: self.nodes[vdu].id.clone(),
            });
        }
        out.sort_by(|a, b| a.nodes.len().cmp(&b.nodes.len()).then_with(|| a.nodes.cmp(&b.nodes)));
        Ok(out)
    }

    fn dfs_paths(
        &self,
        target: usize,
        limit: usize,
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<RoutePath>,
    ) {
        let here = *stack.last().expect("non-empty stack");
        if here == target {
            out.push(RoutePath { nodes: stack.clone() });
            return;
        }
        if stack.len() > limit {
            return;
        }
        for &(next, _) in &self.adjacency[here] {
            if on_path[next] {
                continue;
            }
            on_path[next] = true;
            stack.push(next);
            self.dfs_paths(target, limit, stack, on_path, out);
            stack.pop();
            on_path[next] = false;
        }
    }

    /// Checks that the directed graph induced by the routes has no cycle.
    pub fn validate_feedforward(&self, routes: &[RoutePath]) -> Result<(), TopologyError> {
        let n = self.nodes.len();
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for r in routes {
            for w in r.nodes.windows(2) {
                if !succ[w[0]].contains(&w[1]) {
                    succ[w[0]].push(w[1]);
                }
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; n];
        let mut trail = Vec::new();
        for start in 0..n {
            if state[start] == 0 {
                if let Some(cycle) = find_cycle(start, &succ, &mut state, &mut trail) {
                    return Err(TopologyError::Cycle(
                        cycle.into_iter().map(|i| self.nodes[i].id.clone()).collect(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Sum of link lengths over light speed.
    pub fn propagation_delay(&self, path: &RoutePath, speed_mps: f64) -> f64 {
        self.path_distance(path) / speed_mps
    }
}

fn find_cycle(
    node: usize,
    succ: &[Vec<usize>],
    state: &mut [u8],
    trail: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    state[node] = 1;
    trail.push(node);
    for &next in &succ[node] {
        match state[next] {
            1 => {
                let from = trail.iter().position(|n| *n == next).expect("on stack");
                let mut cycle = trail[from..].to_vec();
                cycle.push(next);
                return Some(cycle);
            }
            0 => {
                if let Some(c) = find_cycle(next, succ, state, trail) {
                    return Some(c);
                }
            }
            _ => {}
        }
    }
    trail.pop();
    state[node] = 2;
    None
}

pub fn propagation_delay(distances_m: &[f64], speed_mps: f64) -> f64 {
    distances_m.iter().sum::<f64>() / speed_mps
}

/// Normalises weights into shares that sum to one.
pub fn weights_to_shares(weights: &[f64]) -> Result<Vec<f64>, TopologyError> {
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(TopologyError::Invalid("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(TopologyError::ZeroWeights(String::new()));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// GPS share per (node, slice key). Absent entries read as zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShareTable {
    shares: BTreeMap<(usize, SliceKey), f64>,
}

impl ShareTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, node: usize, key: SliceKey, share: f64) {
        if share == 0.0 {
            self.shares.remove(&(node, key));
        } else {
            self.shares.insert((node, key), share);
        }
    }

    pub fn get(&self, node: usize, key: SliceKey) -> f64 {
        self.shares.get(&(node, key)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SliceKey, f64)> + '_ {
        self.shares.iter().map(|((n, k), s)| (*n, *k, *s))
    }

    pub fn node_total(&self, node: usize) -> f64 {
        self.shares.range((node, min_key())..).take_while(|((n, _), _)| *n == node).map(|(_, s)| s).sum()
    }

    pub fn allocated_rate(&self, topo: &Topology, node: usize, key: SliceKey) -> f64 {
        self.get(node, key) * topo.node(node).capacity_bps
    }
}

fn min_key() -> SliceKey {
    SliceKey { slice: PacketClass::Urllc, vdu: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, cap: f64) -> TransportNode {
        TransportNode { id: id.into(), capacity_bps: cap, latency_s: 0.0 }
    }

    fn link(a: &str, b: &str) -> Link {
        Link { a: a.into(), b: b.into(), distance_m: 5000.0 }
    }

    fn ring() -> Topology {
        let nodes = (1..=10).map(|i| node(&format!("v{i}"), 1e9)).collect();
        let links = vec![
            link("v10", "v9"),
            link("v9", "v7"),
            link("v9", "v8"),
            link("v7", "v8"),
            link("v7", "v5"),
            link("v8", "v6"),
            link("v5", "v1"),
            link("v5", "v2"),
            link("v6", "v3"),
            link("v6", "v4"),
        ];
        Topology::new(nodes, links).unwrap()
    }

    #[test]
    fn ring_has_two_paths_per_vdu() {
        let t = ring();
        let cu = t.index_of("v10").unwrap();
        let v1 = t.index_of("v1").unwrap();
        let paths = t.enumerate_paths(cu, v1, None).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(t.path_ids(&paths[0]), ["v10", "v9", "v7", "v5", "v1"]);
        assert_eq!(t.path_ids(&paths[1]), ["v10", "v9", "v8", "v7", "v5", "v1"]);
        assert!(paths[0].is_subsequence_of(&paths[1]));
        assert!(!paths[1].is_subsequence_of(&paths[0]));
        assert_eq!(t.enumerate_paths(cu, v1, None).unwrap(), paths);
        assert_eq!(t.enumerate_paths(cu, v1, Some(4)).unwrap().len(), 1);
        t.validate_feedforward(&paths).unwrap();
    }

    #[test]
    fn chain_and_disconnected() {
        let t = Topology::new(vec![node("a", 1.0), node("b", 1.0), node("c", 1.0)], vec![link("a", "b")])
            .unwrap();
        assert_eq!(t.enumerate_paths(0, 1, None).unwrap().len(), 1);
        assert!(matches!(t.enumerate_paths(0, 2, None), Err(TopologyError::Unreachable { .. })));
    }

    #[test]
    fn feedforward_detects_opposing_routes() {
        let t = Topology::new(vec![node("a", 1.0), node("b", 1.0)], vec![link("a", "b")]).unwrap();
        let ab = RoutePath { nodes: vec![0, 1] };
        let ba = RoutePath { nodes: vec![1, 0] };
        assert!(matches!(t.validate_feedforward(&[ab, ba]), Err(TopologyError::Cycle(_))));
        let empty = Topology::new(vec![], vec![]).unwrap();
        empty.validate_feedforward(&[]).unwrap();
    }

    #[test]
    fn shares_from_weights() {
        assert_eq!(weights_to_shares(&[2.0, 1.0, 1.0]).unwrap(), [0.5, 0.25, 0.25]);
        let s = weights_to_shares(&[0.70, 0.30]).unwrap();
        assert!((s[0] - 0.70).abs() < 1e-12 && (s[1] - 0.30).abs() < 1e-12);
        assert_eq!(weights_to_shares(&[3.0]).unwrap(), [1.0]);
        assert!(weights_to_shares(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn allocated_rates() {
        let t = Topology::new(vec![node("v1", 1.2e9), node("n5", 0.25e9)], vec![]).unwrap();
        let key = SliceKey { slice: PacketClass::Urllc, vdu: 1 };
        let mut table = ShareTable::new();
        table.set(0, key, 0.70);
        table.set(1, key, 0.0625);
        assert!((table.allocated_rate(&t, 0, key) - 0.84e9).abs() < 1.0);
        assert_eq!(table.allocated_rate(&t, 1, key), 0.015625e9);
        let other = SliceKey { slice: PacketClass::Embb, vdu: 1 };
        assert_eq!(table.allocated_rate(&t, 0, other), 0.0);
        table.set(0, other, 0.30);
        assert!((table.node_total(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagation() {
        assert!((propagation_delay(&[5000.0; 4], LIGHT_SPEED) - 66.667e-6).abs() < 1e-9);
        assert_eq!(propagation_delay(&[], LIGHT_SPEED), 0.0);
        assert!((propagation_delay(&[5000.0], LIGHT_SPEED) - 16.667e-6).abs() < 1e-9);
        let t = ring();
        let p = t.path_from_ids(&["v10", "v9", "v7", "v5", "v1"]).unwrap();
        assert!((t.propagation_delay(&p, LIGHT_SPEED) - 20000.0 / 3e8).abs() < 1e-18);
        assert!(t.path_from_ids(&["v10", "v7"]).is_err());
    }
}
