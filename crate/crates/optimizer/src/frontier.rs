//! Minimal share demands of one vDU choice, and their combination across vDUs.
//!
//! A vDU choice (split, admission, paths) needs some number of grid units on
//! every node its slices traverse. Nodes that no other vDU can reach are given
//! to the choice outright; on the remaining "coupling" nodes the choice is
//! summarised by its Pareto-minimal unit vectors. Combining vDUs then only has
//! to track the units already used on nodes that later vDUs may still need.

use std::collections::{HashMap, HashSet};

use slicenc_core::analysis;
use slicenc_core::catalog::PacketClass;
use slicenc_core::delay::{uniform_slice_delay, DelayBreakdown};
use slicenc_core::minplus::ArrivalCurve;
use slicenc_core::scenario::Scenario;
use slicenc_core::topology::RoutePath;

use crate::feasibility::{rate_covered, slice_load, vdu_rate};
use crate::{Choice, Grid};

/// Static routing facts for one solve.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub grid: Grid,
    /// Every enumerated CU-to-vDU path, per vDU.
    pub paths: Vec<Vec<RoutePath>>,
    /// Indices of paths not dominated by a shorter sub-route.
    pub kept: Vec<Vec<usize>>,
    /// Nodes touched by more than one vDU.
    pub shared: Vec<bool>,
    /// Active nodes after each vDU has been placed.
    pub active: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(s: &Scenario, grid: Grid) -> Result<Self, crate::SolveError> {
        let n = s.topology.len();
        let mut paths = Vec::new();
        let mut kept = Vec::new();
        let mut reach = Vec::new();
        for v in &s.vdus {
            let all = s.candidate_paths(v)?;
            let keep: Vec<usize> = (0..all.len()).filter(|&i| !dominated(s, &all, i)).collect();
            let mut r = vec![false; n];
            for &i in &keep {
                for &node in &all[i].nodes {
                    r[node] = true;
                }
            }
            paths.push(all);
            kept.push(keep);
            reach.push(r);
        }
        let shared: Vec<bool> = (0..n).map(|v| reach.iter().filter(|r| r[v]).count() > 1).collect();
        let u = s.vdus.len();
        let active = (0..=u)
            .map(|d| {
                (0..n)
                    .filter(|&v| reach[..d].iter().any(|r| r[v]) && reach[d..].iter().any(|r| r[v]))
                    .collect()
            })
            .collect();
        Ok(Self { grid, paths, kept, shared, active })
    }
}

/// A path is dominated when another candidate visits a subset of its nodes in
/// the same order and is no longer.
fn dominated(s: &Scenario, all: &[RoutePath], i: usize) -> bool {
    let p = &all[i];
    let dist = s.topology.path_distance(p);
    all.iter().enumerate().any(|(j, q)| {
        j != i && q.nodes.len() < p.nodes.len() && q.is_subsequence_of(p) && s.topology.path_distance(q) <= dist
    })
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Point {
    /// Units used on each coupling node, aligned with [`Frontier::nodes`].
    pub demand: Vec<u16>,
    /// URLLC units along the URLLC path.
    pub urllc: Vec<u16>,
    /// eMBB units along the eMBB path.
    pub embb: Vec<u16>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Frontier {
    pub nodes: Vec<usize>,
    pub points: Vec<Point>,
    /// Minimal projections of the demands onto subsets of positions.
    projections: std::cell::RefCell<HashMap<Vec<usize>, std::rc::Rc<Vec<Vec<u16>>>>>,
}

impl Frontier {
    fn projected(&self, keep: &[usize]) -> std::rc::Rc<Vec<Vec<u16>>> {
        if let Some(p) = self.projections.borrow().get(keep) {
            return std::rc::Rc::clone(p);
        }
        let p = std::rc::Rc::new(project(self.points.iter().map(|p| p.demand.as_slice()), keep));
        self.projections.borrow_mut().insert(keep.to_vec(), std::rc::Rc::clone(&p));
        p
    }
}

/// Delay check for `count` URLLC flows with everything but the rates fixed.
struct UrllcBound {
    curve: ArrivalCurve,
    count: u32,
    caps: Vec<f64>,
    latencies: Vec<f64>,
    du: f64,
    cu: f64,
    propagation: f64,
    sla: f64,
    grid: Grid,
    rates: std::cell::RefCell<Vec<f64>>,
}

impl UrllcBound {
    fn ok(&self, units: &[u16]) -> bool {
        let mut rates = self.rates.borrow_mut();
        for (r, (&k, &c)) in rates.iter_mut().zip(units.iter().zip(&self.caps)) {
            *r = self.grid.share(k) * c;
        }
        match uniform_slice_delay(&self.curve, self.count, &rates, &self.latencies) {
            Ok(q) => DelayBreakdown::new(q, self.du, self.cu, self.propagation).total <= self.sla,
            Err(_) => false,
        }
    }
}

fn min_units(grid: Grid, from: u16, mut ok: impl FnMut(u16) -> bool) -> Option<u16> {
    (from..=grid.levels()).find(|&k| ok(k))
}

/// Minimal demands of one choice for vDU `u`; empty when the choice cannot work alone.
pub(crate) fn frontier(s: &Scenario, layout: &Layout, u: usize, c: &Choice) -> Frontier {
    let grid = layout.grid;
    let levels = grid.levels();
    let vdu = &s.vdus[u];
    let topo = &s.topology;
    let (Ok(limit), Ok(need)) = (
        s.catalog.delay_requirement(c.split),
        s.catalog.required_capacity(c.split, s.doc.split_capacity_packet_bytes),
    ) else {
        return Frontier::default();
    };
    let p = c.urllc_path.map(|i| &layout.paths[u][i]);
    let q = c.embb_path.map(|i| &layout.paths[u][i]);
    if c.admitted > vdu.urllc_cap || (c.admitted > 0) != p.is_some() || (vdu.embb_demand_bps > 0.0) != q.is_some() {
        return Frontier::default();
    }
    if c.admitted > 0 && s.doc.slices.urllc.rate_bps < s.doc.slices.urllc.min_rate_bps {
        return Frontier::default();
    }
    if [p, q].into_iter().flatten().any(|path| analysis::transport_latency(s, path) > limit) {
        return Frontier::default();
    }
    let cap = |node: usize| topo.node(node).capacity_bps;
    let on_p = |node: usize| p.is_some_and(|p| p.contains(node));

    let mut embb = Vec::new();
    if let Some(q) = q {
        let curve = analysis::generated_curve(s, vdu, Some(c.split), PacketClass::Embb).expect("split checked");
        let load = slice_load(curve.rate, 1);
        for &node in &q.nodes {
            let r = cap(node);
            let Some(mut k) = min_units(grid, 0, |k| rate_covered(load, grid.share(k) * r)) else {
                return Frontier::default();
            };
            if !on_p(node) {
                match min_units(grid, k, |k| rate_covered(need, vdu_rate(0.0, grid.share(k), r))) {
                    Some(x) => k = x,
                    None => return Frontier::default(),
                }
            }
            embb.push(k);
        }
    }
    let embb_at = |node: usize| q.and_then(|q| q.position(node)).map(|i| embb[i]);

    let mut urllc_points: Vec<Vec<u16>> = vec![Vec::new()];
    if let Some(p) = p {
        let curve = analysis::generated_curve(s, vdu, Some(c.split), PacketClass::Urllc).expect("split checked");
        let load = slice_load(curve.rate, c.admitted);
        let (du, cu) = analysis::slice_processing(s, Some(c.split), f64::from(c.admitted) * s.doc.slices.urllc.rate_bps)
            .expect("split checked");
        let bound = UrllcBound {
            curve,
            count: c.admitted,
            caps: p.nodes.iter().map(|&n| cap(n)).collect(),
            latencies: analysis::path_latencies(s, p),
            du,
            cu,
            propagation: topo.propagation_delay(p, s.doc.light_speed_mps),
            sla: s.doc.slices.urllc.delay_sla_s,
            grid,
            rates: std::cell::RefCell::new(vec![0.0; p.nodes.len()]),
        };
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut free = Vec::new();
        for (i, &node) in p.nodes.iter().enumerate() {
            let r = cap(node);
            let e = embb_at(node);
            let e_share = e.map_or(0.0, |k| grid.share(k));
            let Some(k) = min_units(grid, 0, |k| {
                rate_covered(load, grid.share(k) * r) && rate_covered(need, vdu_rate(grid.share(k), e_share, r))
            }) else {
                return Frontier::default();
            };
            let top = levels.saturating_sub(e.unwrap_or(0));
            if k > top || e.unwrap_or(0) > levels {
                return Frontier::default();
            }
            if layout.shared[node] {
                lo.push(k);
                free.push(i);
            } else {
                lo.push(top);
            }
            hi.push(top);
        }
        urllc_points = enumerate_minimal(&bound, &lo, &hi, &free);
        if urllc_points.is_empty() {
            return Frontier::default();
        }
    }

    let mut nodes: Vec<usize> = p
        .iter()
        .chain(q.iter())
        .flat_map(|path| path.nodes.iter().copied())
        .filter(|&n| layout.shared[n])
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    let points = urllc_points
        .into_iter()
        .map(|urllc| {
            let demand = nodes
                .iter()
                .map(|&n| {
                    let a = p.and_then(|p| p.position(n)).map_or(0, |i| urllc[i]);
                    a + embb_at(n).unwrap_or(0)
                })
                .collect();
            Point { demand, urllc, embb: embb.clone() }
        })
        .collect();
    Frontier { nodes, points, ..Frontier::default() }
}

/// Pareto-minimal unit vectors meeting the delay bound, varying only `free` positions.
fn enumerate_minimal(bound: &UrllcBound, lo: &[u16], hi: &[u16], free: &[usize]) -> Vec<Vec<u16>> {
    let mut cur = lo.to_vec();
    for &i in free {
        cur[i] = hi[i];
    }
    if !bound.ok(&cur) {
        return Vec::new();
    }
    if free.is_empty() {
        return vec![cur];
    }
    let mut out = Vec::new();
    descend(bound, lo, hi, free, 0, &mut cur, &mut out);
    pareto_min(out)
}

fn descend(
    bound: &UrllcBound,
    lo: &[u16],
    hi: &[u16],
    free: &[usize],
    depth: usize,
    cur: &mut Vec<u16>,
    out: &mut Vec<Vec<u16>>,
) {
    let i = free[depth];
    let rest = &free[depth + 1..];
    for &j in rest {
        cur[j] = hi[j];
    }
    // Smallest value at `i` that still works with everything after it maxed out.
    let (mut a, mut b) = (lo[i], hi[i]);
    cur[i] = a;
    if !bound.ok(cur) {
        while b - a > 1 {
            let m = a + (b - a) / 2;
            cur[i] = m;
            if bound.ok(cur) {
                b = m;
            } else {
                a = m;
            }
        }
        a = b;
    }
    if rest.is_empty() {
        cur[i] = a;
        out.push(cur.clone());
        return;
    }
    for k in a..=hi[i] {
        cur[i] = k;
        for &j in rest {
            cur[j] = lo[j];
        }
        // Once the tail can sit at its floor, larger values only yield dominated points.
        if bound.ok(cur) {
            out.push(cur.clone());
            break;
        }
        descend(bound, lo, hi, free, depth + 1, cur, out);
    }
}

/// Keeps vectors not dominated component-wise by another; first occurrence wins ties.
pub(crate) fn pareto_min(mut v: Vec<Vec<u16>>) -> Vec<Vec<u16>> {
    let mut seen = HashSet::new();
    v.retain(|x| seen.insert(x.clone()));
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by_key(|&i| (v[i].iter().map(|&x| u32::from(x)).sum::<u32>(), i));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if !kept.iter().any(|&j| v[j].iter().zip(&v[i]).all(|(a, b)| a <= b)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| v[i].clone()).collect()
}

#[derive(Debug, Clone)]
pub(crate) struct State {
    pub used: Vec<u16>,
    pub parent: u32,
    pub point: u32,
}

#[derive(Debug, Clone)]
pub(crate) struct Layer {
    pub nodes: Vec<usize>,
    pub states: Vec<State>,
}

impl Layer {
    pub fn root() -> Self {
        Self::single(Vec::new(), Vec::new())
    }

    pub fn single(nodes: Vec<usize>, used: Vec<u16>) -> Self {
        Self { nodes, states: vec![State { used, parent: 0, point: 0 }] }
    }

    /// Distinct states carried over to `nodes`, counting zero on nodes not tracked here.
    pub fn projected_states(&self, nodes: &[usize]) -> Vec<Vec<u16>> {
        let at: Vec<Option<usize>> = nodes.iter().map(|&n| self.nodes.iter().position(|&x| x == n)).collect();
        let v: Vec<Vec<u16>> =
            self.states.iter().map(|s| at.iter().map(|i| i.map_or(0, |i| s.used[i])).collect()).collect();
        pareto_min(v)
    }
}

struct Plan {
    /// For each frontier node: position in the previous layer.
    check: Vec<(usize, Option<usize>)>,
    /// For each next-layer node: (position in previous layer, position in frontier).
    build: Vec<(Option<usize>, Option<usize>)>,
}

fn plan(prev: &Layer, fr: &Frontier, next: &[usize]) -> Plan {
    let pos = |list: &[usize], n: usize| list.iter().position(|&x| x == n);
    Plan {
        check: fr.nodes.iter().enumerate().map(|(i, &n)| (i, pos(&prev.nodes, n))).collect(),
        build: next.iter().map(|&n| (pos(&prev.nodes, n), pos(&fr.nodes, n))).collect(),
    }
}

fn fits(plan: &Plan, s: &State, p: &Point, levels: u16) -> bool {
    plan.check.iter().all(|&(i, prev)| prev.map_or(0, |j| s.used[j]) + p.demand[i] <= levels)
}

/// Distinct minimal projections of `vectors` onto the positions `keep`.
fn project<'a>(vectors: impl Iterator<Item = &'a [u16]>, keep: &[usize]) -> Vec<Vec<u16>> {
    let mut v: Vec<Vec<u16>> = vectors.map(|x| keep.iter().map(|&i| x[i]).collect()).collect();
    v.sort_unstable();
    v.dedup();
    pareto_min(v)
}

/// A layer with its state projections cached per node subset, for fast
/// compatibility checks against many frontiers.
pub(crate) struct View<'a> {
    layer: &'a Layer,
    cache: HashMap<Vec<usize>, Vec<Vec<u16>>>,
}

impl<'a> View<'a> {
    pub fn new(layer: &'a Layer) -> Self {
        Self { layer, cache: HashMap::new() }
    }

    /// True when some state and some point of `fr` fit together.
    pub fn admits(&mut self, fr: &Frontier, levels: u16) -> bool {
        if fr.points.is_empty() || self.layer.states.is_empty() {
            return false;
        }
        let (mine, theirs): (Vec<usize>, Vec<usize>) = fr
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, &n)| self.layer.nodes.iter().position(|&x| x == n).map(|j| (i, j)))
            .unzip();
        if mine.is_empty() {
            return true;
        }
        let layer = self.layer;
        let states = self
            .cache
            .entry(theirs.clone())
            .or_insert_with(|| project(layer.states.iter().map(|s| s.used.as_slice()), &theirs));
        let points = fr.projected(&mine);
        states.iter().any(|s| points.iter().any(|p| s.iter().zip(p).all(|(a, b)| a + b <= levels)))
    }
}

#[cfg(test)]
fn compatible(prev: &Layer, fr: &Frontier, levels: u16) -> bool {
    View::new(prev).admits(fr, levels)
}

pub(crate) fn combine(prev: &Layer, fr: &Frontier, next: &[usize], levels: u16) -> Layer {
    let plan = plan(prev, fr, next);
    let mut seen: HashSet<Vec<u16>> = HashSet::new();
    let mut cands: Vec<State> = Vec::new();
    for (si, s) in prev.states.iter().enumerate() {
        for (pi, p) in fr.points.iter().enumerate() {
            if !fits(&plan, s, p, levels) {
                continue;
            }
            let used: Vec<u16> = plan
                .build
                .iter()
                .map(|&(a, b)| a.map_or(0, |j| s.used[j]) + b.map_or(0, |j| p.demand[j]))
                .collect();
            if seen.insert(used.clone()) {
                cands.push(State { used, parent: si as u32, point: pi as u32 });
            }
        }
    }
    let vecs: Vec<Vec<u16>> = cands.iter().map(|c| c.used.clone()).collect();
    let keep: HashSet<Vec<u16>> = pareto_min(vecs).into_iter().collect();
    cands.retain(|c| keep.contains(&c.used));
    Layer { nodes: next.to_vec(), states: cands }
}
