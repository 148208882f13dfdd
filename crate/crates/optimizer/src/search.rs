//! Branch-and-bound over per-vDU choices with exact share feasibility.

use std::collections::HashMap;
use std::rc::Rc;

use slicenc_core::catalog::{PacketClass, SplitId};
use slicenc_core::scenario::{Decision, Scenario, VduDecision};
use slicenc_core::topology::{ShareTable, SliceKey};

use crate::frontier::{combine, frontier, Frontier, Layer, Layout, View};
use crate::{better, check_supported, finish, Choice, Grid, Solution, SolveError, SolveOptions};

const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FrontierKey {
    vdu: usize,
    demand_bits: u64,
    cap: u32,
    choice: Choice,
}

/// Reusable solver state. Frontiers are cached across solves, so scenario
/// variants that only change demands or candidate splits solve faster.
pub struct Solver {
    layout: Layout,
    opts: SolveOptions,
    cache: HashMap<FrontierKey, Rc<Frontier>>,
    /// Best profit of vDUs `d..` from one state of the layer before `d`.
    tails: HashMap<(usize, Vec<u16>), f64>,
    fingerprint: Vec<(usize, String)>,
}

fn fingerprint(s: &Scenario) -> Vec<(usize, String)> {
    s.vdus.iter().map(|v| (v.node, s.topology.node(v.node).id.clone())).collect()
}

impl Solver {
    pub fn new(s: &Scenario, opts: SolveOptions) -> Result<Self, SolveError> {
        check_supported(s)?;
        let grid = Grid::from_step(opts.grid_step)?;
        Ok(Self { layout: Layout::new(s, grid)?, opts, cache: HashMap::new(), tails: HashMap::new(), fingerprint: fingerprint(s) })
    }

    fn frontier(&mut self, s: &Scenario, u: usize, c: Choice) -> Rc<Frontier> {
        let v = &s.vdus[u];
        let key = FrontierKey { vdu: u, demand_bits: v.embb_demand_bps.to_bits(), cap: v.urllc_cap, choice: c };
        if let Some(f) = self.cache.get(&key) {
            return Rc::clone(f);
        }
        let f = Rc::new(frontier(s, &self.layout, u, &c));
        self.cache.insert(key, Rc::clone(&f));
        f
    }

    /// Largest admission for which the choice still fits on top of `prev`.
    fn max_admission(&mut self, s: &Scenario, u: usize, prev: &mut View, base: Choice) -> Option<u32> {
        let levels = self.layout.grid.levels();
        let fits = |this: &mut Self, prev: &mut View, n: u32| {
            let f = this.frontier(s, u, Choice { admitted: n, ..base });
            prev.admits(&f, levels)
        };
        let cap = s.vdus[u].urllc_cap;
        if cap == 0 || !fits(self, prev, 1) {
            return None;
        }
        let (mut a, mut b) = (1, cap + 1);
        while b - a > 1 {
            let m = a + (b - a) / 2;
            if fits(self, prev, m) {
                a = m;
            } else {
                b = m;
            }
        }
        Some(a)
    }

    /// Candidate choices for vDU `u` given what earlier vDUs use, best first.
    fn options(&mut self, s: &Scenario, u: usize, prev: &mut View) -> Vec<(Choice, f64)> {
        let levels = self.layout.grid.levels();
        let has_embb = s.vdus[u].embb_demand_bps > 0.0;
        let embb_paths: Vec<Option<usize>> =
            if has_embb { self.layout.kept[u].iter().map(|&i| Some(i)).collect() } else { vec![None] };
        let urllc_paths = self.layout.kept[u].clone();
        let mut out = Vec::new();
        for &split in &s.candidates {
            let cost = split_cost(s, split);
            for &q in &embb_paths {
                let idle = Choice { split, admitted: 0, urllc_path: None, embb_path: q };
                let f = self.frontier(s, u, idle);
                if prev.admits(&f, levels) {
                    out.push((idle, -cost));
                }
                for &p in &urllc_paths {
                    let base = Choice { split, admitted: 0, urllc_path: Some(p), embb_path: q };
                    if let Some(n) = self.max_admission(s, u, prev, base) {
                        out.push((Choice { admitted: n, ..base }, gain(s, n) - cost));
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| crate::compare_choices(s, &[a.0], &[b.0]))
        });
        out
    }

    /// First vDU whose completion value is computed exactly.
    fn tail_start(&self, s: &Scenario) -> usize {
        s.vdus.len().saturating_sub(2)
    }

    /// Exact best profit of vDUs `d..` given `used` units on the nodes active before `d`.
    fn completion(&mut self, s: &Scenario, d: usize, used: &[u16]) -> f64 {
        let u = s.vdus.len();
        if d == u {
            return 0.0;
        }
        let key = (d, used.to_vec());
        if let Some(&v) = self.tails.get(&key) {
            return v;
        }
        let layer = Layer::single(self.layout.active[d].clone(), used.to_vec());
        let opts = self.options(s, d, &mut View::new(&layer));
        let value = if opts.is_empty() {
            f64::NEG_INFINITY
        } else if d + 1 == u {
            opts[0].1
        } else {
            let levels = self.layout.grid.levels();
            let next_nodes = self.layout.active[d + 1].clone();
            // What the rest could make if this vDU took nothing.
            let rest = layer
                .projected_states(&next_nodes)
                .iter()
                .map(|st| self.completion(s, d + 1, st))
                .fold(f64::NEG_INFINITY, f64::max);
            let mut best = f64::NEG_INFINITY;
            for &(top, _) in &opts {
                let cost = split_cost(s, top.split);
                let floor = if top.admitted == 0 { 0 } else { 1 };
                for n in (floor..=top.admitted).rev() {
                    let own = gain(s, n) - cost;
                    if own + rest <= best {
                        break;
                    }
                    let f = self.frontier(s, d, Choice { admitted: n, ..top });
                    for st in combine(&layer, &f, &next_nodes, levels).states {
                        best = best.max(own + self.completion(s, d + 1, &st.used));
                    }
                }
            }
            best
        };
        self.tails.insert(key, value);
        value
    }

    /// Upper bound on the profit of vDUs `from..` given the placed ones.
    /// Exact from [`Self::tail_start`] on, each vDU taken alone before that.
    fn suffix_bound(&mut self, s: &Scenario, from: usize, layer: &Layer) -> f64 {
        let u = s.vdus.len();
        if from >= u {
            return 0.0;
        }
        let tail = self.tail_start(s).max(from);
        let mut total = 0.0;
        let mut view = View::new(layer);
        for j in from..tail {
            match self.options(s, j, &mut view).first() {
                Some(o) => total += o.1,
                None => return f64::NEG_INFINITY,
            }
        }
        let nodes = self.layout.active[tail].clone();
        total
            + layer
                .projected_states(&nodes)
                .iter()
                .map(|st| self.completion(s, tail, st))
                .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn solve(&mut self, s: &Scenario) -> Result<Solution, SolveError> {
        check_supported(s)?;
        if fingerprint(s) != self.fingerprint {
            return Err(SolveError::Unsupported("solver reused across different topologies".into()));
        }
        let u = s.vdus.len();
        self.tails.clear();
        let root = Layer::root();
        let opts = self.options(s, 0, &mut View::new(&root));
        let rest = self.suffix_bound(s, 1, &root);
        if opts.is_empty() || rest == f64::NEG_INFINITY {
            return Err(SolveError::Infeasible);
        }
        let mut search = Search {
            nodes: 0,
            limit: self.opts.max_nodes,
            best: None,
            choices: Vec::with_capacity(u),
            layers: vec![root],
            exhausted: false,
        };
        search.descend(self, s, 0, 0.0, opts, rest);
        let nodes = search.nodes;
        let best = search.best.take();
        let exhausted = search.exhausted;
        let solution = match best {
            Some(b) => Some(finish(s, b.decision, nodes)?),
            None => None,
        };
        match (solution, exhausted) {
            (Some(sol), false) => Ok(sol),
            (None, false) => Err(SolveError::Infeasible),
            (best, true) => Err(SolveError::BudgetExceeded { limit: self.opts.max_nodes.unwrap_or(0), best: best.map(Box::new) }),
        }
    }

    fn build_decision(&mut self, s: &Scenario, choices: &[Choice], layers: &[Layer]) -> Decision {
        let grid = self.layout.grid;
        let mut points = vec![0u32; choices.len()];
        let mut idx = 0usize;
        for d in (1..layers.len()).rev() {
            let st = &layers[d].states[idx];
            points[d - 1] = st.point;
            idx = st.parent as usize;
        }
        let mut shares = ShareTable::new();
        let mut vdus = Vec::new();
        for (u, c) in choices.iter().enumerate() {
            let v = &s.vdus[u];
            let f = self.frontier(s, u, *c);
            let pt = &f.points[points[u] as usize];
            let p = c.urllc_path.map(|i| self.layout.paths[u][i].clone());
            let q = c.embb_path.map(|i| self.layout.paths[u][i].clone());
            if let Some(p) = &p {
                for (&node, &k) in p.nodes.iter().zip(&pt.urllc) {
                    shares.set(node, SliceKey { slice: PacketClass::Urllc, vdu: v.id }, grid.share(k));
                }
            }
            if let Some(q) = &q {
                for (&node, &k) in q.nodes.iter().zip(&pt.embb) {
                    shares.set(node, SliceKey { slice: PacketClass::Embb, vdu: v.id }, grid.share(k));
                }
            }
            vdus.push(VduDecision { vdu: v.id, split: Some(c.split), admitted: c.admitted, urllc_path: p, embb_path: q });
        }
        Decision { vdus, shares }
    }
}

fn split_cost(s: &Scenario, id: SplitId) -> f64 {
    let o = s.catalog.split(id).expect("candidate splits validated");
    s.econ.cost_of_counts(o.du_count(), o.cu_count())
}

fn gain(s: &Scenario, n: u32) -> f64 {
    s.econ.gamma * s.econ.c_du * f64::from(n)
}

struct Incumbent {
    profit: f64,
    cost: f64,
    choices: Vec<Choice>,
    decision: Decision,
}

struct Search {
    nodes: u64,
    limit: Option<u64>,
    best: Option<Incumbent>,
    choices: Vec<Choice>,
    layers: Vec<Layer>,
    exhausted: bool,
}

impl Search {
    fn beaten(&self, bound: f64) -> bool {
        self.best.as_ref().is_some_and(|b| bound < b.profit - BOUND_SLACK)
    }

    /// `opts` are the options of vDU `depth` and `rest` bounds the vDUs after it.
    fn descend(&mut self, solver: &mut Solver, s: &Scenario, depth: usize, acc: f64, opts: Vec<(Choice, f64)>, rest: f64) {
        if self.exhausted {
            return;
        }
        if depth == s.vdus.len() {
            self.offer(solver, s);
            return;
        }
        let levels = solver.layout.grid.levels();
        let prev = self.layers.last().expect("root layer").clone();
        let next_nodes = solver.layout.active[depth + 1].clone();
        let u = s.vdus.len();
        let tail = solver.tail_start(s);
        for &(top, _) in &opts {
            let cost = split_cost(s, top.split);
            let floor = if top.admitted == 0 { 0 } else { 1 };
            for n in (floor..=top.admitted).rev() {
                let value = acc + gain(s, n) - cost;
                if self.beaten(value + rest) {
                    break;
                }
                if let Some(limit) = self.limit {
                    if self.nodes >= limit {
                        self.exhausted = true;
                        return;
                    }
                }
                self.nodes += 1;
                let c = Choice { admitted: n, ..top };
                let f = solver.frontier(s, depth, c);
                let layer = combine(&prev, &f, &next_nodes, levels);
                if layer.states.is_empty() {
                    continue;
                }
                // Later vDUs can only do worse now that this one is placed.
                let (next_opts, next_rest) = if depth + 1 < u {
                    let o = solver.options(s, depth + 1, &mut View::new(&layer));
                    if o.is_empty() {
                        continue;
                    }
                    let r = solver.suffix_bound(s, depth + 2, &layer);
                    let b = if depth + 1 >= tail { solver.suffix_bound(s, depth + 1, &layer) } else { o[0].1 + r };
                    if self.beaten(value + b) {
                        continue;
                    }
                    (o, r)
                } else {
                    (Vec::new(), 0.0)
                };
                self.layers.push(layer);
                self.choices.push(c);
                self.descend(solver, s, depth + 1, value, next_opts, next_rest);
                self.choices.pop();
                self.layers.pop();
                if self.exhausted {
                    return;
                }
            }
        }
    }

    fn offer(&mut self, solver: &mut Solver, s: &Scenario) {
        let admitted: Vec<u32> = self.choices.iter().map(|c| c.admitted).collect();
        let placements: Vec<&[slicenc_core::catalog::Location]> = self
            .choices
            .iter()
            .map(|c| s.catalog.placement_vector(c.split).expect("validated"))
            .collect();
        let revenue = slicenc_core::economics::revenue(&admitted, &s.econ);
        let cost = slicenc_core::economics::deployment_cost(&placements, &s.econ);
        let profit = slicenc_core::economics::profit(&admitted, &placements, &s.econ);
        let _ = revenue;
        let improves = match &self.best {
            None => true,
            Some(b) => better(s, (profit, cost, &self.choices), (b.profit, b.cost, &b.choices)),
        };
        if improves {
            let decision = solver.build_decision(s, &self.choices, &self.layers);
            self.best = Some(Incumbent { profit, cost, choices: self.choices.clone(), decision });
        }
    }
}

/// Branch-and-bound optimum over the discretised decision space.
pub fn solve_bnb(s: &Scenario, opts: SolveOptions) -> Result<Solution, SolveError> {
    Solver::new(s, opts)?.solve(s)
}
