//! Brute-force reference solver for tiny instances.
//!
//! Every combination of split, admission and paths is ranked by objective;
//! the first whose shares can be realised on the grid is returned. Share
//! existence is decided by enumerating every unit vector on each path.

use std::cmp::Ordering;
use std::collections::HashMap;

use slicenc_core::analysis;
use slicenc_core::catalog::{Location, PacketClass};
use slicenc_core::economics;
use slicenc_core::scenario::{Decision, Scenario, VduDecision};
use slicenc_core::topology::{RoutePath, ShareTable, SliceKey};

use crate::feasibility::{rate_covered, slice_load, vdu_rate, within_share_limit};
use crate::frontier::pareto_min;
use crate::{better, check_supported, finish, Choice, Grid, Solution, SolveError, SolveOptions};

/// Above this many ranked combinations the instance is refused.
const MAX_COMBOS: usize = 2_000_000;

/// One realisable share assignment of a vDU choice.
#[derive(Debug, Clone)]
struct Realisation {
    /// Units used per topology node.
    usage: Vec<u16>,
    urllc: Vec<u16>,
    embb: Vec<u16>,
}

fn vectors(levels: u16, len: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=levels).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out
}

fn realisations(s: &Scenario, grid: Grid, u: usize, c: &Choice, paths: &[RoutePath]) -> Vec<Realisation> {
    let levels = grid.levels();
    let vdu = &s.vdus[u];
    let topo = &s.topology;
    let p = c.urllc_path.map(|i| &paths[i]);
    let q = c.embb_path.map(|i| &paths[i]);
    let (Ok(limit), Ok(need)) = (
        s.catalog.delay_requirement(c.split),
        s.catalog.required_capacity(c.split, s.doc.split_capacity_packet_bytes),
    ) else {
        return Vec::new();
    };
    if c.admitted > 0 && s.doc.slices.urllc.rate_bps < s.doc.slices.urllc.min_rate_bps {
        return Vec::new();
    }
    if [p, q].into_iter().flatten().any(|path| analysis::transport_latency(s, path) > limit) {
        return Vec::new();
    }

    let urllc_ok: Vec<Vec<u16>> = match p {
        None => vec![Vec::new()],
        Some(p) => {
            let curve = analysis::generated_curve(s, vdu, Some(c.split), PacketClass::Urllc).expect("split checked");
            let load = slice_load(curve.rate, c.admitted);
            let latencies = analysis::path_latencies(s, p);
            let sla = s.doc.slices.urllc.delay_sla_s;
            vectors(levels, p.nodes.len())
                .into_iter()
                .filter(|v| {
                    let rates: Vec<f64> =
                        p.nodes.iter().zip(v).map(|(&n, &k)| grid.share(k) * topo.node(n).capacity_bps).collect();
                    rates.iter().all(|&r| rate_covered(load, r))
                        && analysis::uniform_breakdown(s, vdu, Some(c.split), PacketClass::Urllc, c.admitted, p, &rates, &latencies)
                            .is_ok_and(|b| b.total <= sla)
                })
                .collect()
        }
    };
    let embb_ok: Vec<Vec<u16>> = match q {
        None => vec![Vec::new()],
        Some(q) => {
            let curve = analysis::generated_curve(s, vdu, Some(c.split), PacketClass::Embb).expect("split checked");
            let load = slice_load(curve.rate, 1);
            vectors(levels, q.nodes.len())
                .into_iter()
                .filter(|v| q.nodes.iter().zip(v).all(|(&n, &k)| rate_covered(load, grid.share(k) * topo.node(n).capacity_bps)))
                .collect()
        }
    };

    let mut union: Vec<usize> = p.iter().chain(q.iter()).flat_map(|x| x.nodes.iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    let mut out = Vec::new();
    for a in &urllc_ok {
        for b in &embb_ok {
            let mut usage = vec![0u16; topo.len()];
            let mut us = vec![0u16; topo.len()];
            let mut es = vec![0u16; topo.len()];
            if let Some(p) = p {
                for (&n, &k) in p.nodes.iter().zip(a) {
                    usage[n] += k;
                    us[n] = k;
                }
            }
            if let Some(q) = q {
                for (&n, &k) in q.nodes.iter().zip(b) {
                    usage[n] += k;
                    es[n] = k;
                }
            }
            let fits = union.iter().all(|&n| {
                let cap = topo.node(n).capacity_bps;
                usage[n] <= levels
                    && within_share_limit(grid.share(us[n]) + grid.share(es[n]))
                    && rate_covered(need, vdu_rate(grid.share(us[n]), grid.share(es[n]), cap))
            });
            if fits {
                out.push(Realisation { usage, urllc: a.clone(), embb: b.clone() });
            }
        }
    }
    // Only usage matters for combining vDUs, so keep the minimal ones.
    let minimal = pareto_min(out.iter().map(|r| r.usage.clone()).collect());
    minimal
        .into_iter()
        .map(|m| out.iter().find(|r| r.usage == m).expect("kept from list").clone())
        .collect()
}

fn choices_for(s: &Scenario, u: usize, paths: &[RoutePath]) -> Vec<Choice> {
    let v = &s.vdus[u];
    let embb: Vec<Option<usize>> =
        if v.embb_demand_bps > 0.0 { (0..paths.len()).map(Some).collect() } else { vec![None] };
    let mut out = Vec::new();
    for &split in &s.candidates {
        for &q in &embb {
            out.push(Choice { split, admitted: 0, urllc_path: None, embb_path: q });
            for n in 1..=v.urllc_cap {
                for p in 0..paths.len() {
                    out.push(Choice { split, admitted: n, urllc_path: Some(p), embb_path: q });
                }
            }
        }
    }
    out
}

fn realise(level: usize, picks: &[&[Realisation]], used: &mut [u16], levels: u16, chosen: &mut Vec<usize>) -> bool {
    if level == picks.len() {
        return true;
    }
    for (i, r) in picks[level].iter().enumerate() {
        if used.iter().zip(&r.usage).all(|(a, b)| a + b <= levels) {
            used.iter_mut().zip(&r.usage).for_each(|(a, b)| *a += b);
            chosen.push(i);
            if realise(level + 1, picks, used, levels, chosen) {
                return true;
            }
            chosen.pop();
            used.iter_mut().zip(&r.usage).for_each(|(a, b)| *a -= b);
        }
    }
    false
}

struct Ranked {
    profit: f64,
    cost: f64,
    choices: Vec<Choice>,
}

/// Optimum by full enumeration. Refuses instances with too many combinations.
pub fn solve_exhaustive(s: &Scenario, opts: SolveOptions) -> Result<Solution, SolveError> {
    check_supported(s)?;
    let grid = Grid::from_step(opts.grid_step)?;
    let paths: Vec<Vec<RoutePath>> = s.vdus.iter().map(|v| s.candidate_paths(v)).collect::<Result<_, _>>()?;
    let options: Vec<Vec<Choice>> = (0..s.vdus.len()).map(|u| choices_for(s, u, &paths[u])).collect();
    let total = options.iter().try_fold(1usize, |acc, o| acc.checked_mul(o.len()));
    if total.is_none_or(|t| t > MAX_COMBOS) {
        return Err(SolveError::Unsupported("instance too large for exhaustive search".into()));
    }

    let mut ranked = Vec::new();
    let mut idx = vec![0usize; s.vdus.len()];
    'outer: loop {
        let choices: Vec<Choice> = idx.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        let admitted: Vec<u32> = choices.iter().map(|c| c.admitted).collect();
        let placements: Vec<&[Location]> =
            choices.iter().map(|c| s.catalog.placement_vector(c.split).expect("validated")).collect();
        ranked.push(Ranked {
            profit: economics::profit(&admitted, &placements, &s.econ),
            cost: economics::deployment_cost(&placements, &s.econ),
            choices,
        });
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < options[d].len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    ranked.sort_by(|a, b| {
        if better(s, (a.profit, a.cost, &a.choices), (b.profit, b.cost, &b.choices)) {
            Ordering::Less
        } else if better(s, (b.profit, b.cost, &b.choices), (a.profit, a.cost, &a.choices)) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    });

    let mut memo: HashMap<(usize, Choice), Vec<Realisation>> = HashMap::new();
    let levels = grid.levels();
    let mut examined = 0u64;
    for r in &ranked {
        examined += 1;
        for (u, c) in r.choices.iter().enumerate() {
            memo.entry((u, *c)).or_insert_with(|| realisations(s, grid, u, c, &paths[u]));
        }
        let picks: Vec<&[Realisation]> = r.choices.iter().enumerate().map(|(u, c)| memo[&(u, *c)].as_slice()).collect();
        if picks.iter().any(|p| p.is_empty()) {
            continue;
        }
        let mut used = vec![0u16; s.topology.len()];
        let mut chosen = Vec::new();
        if realise(0, &picks, &mut used, levels, &mut chosen) {
            let decision = assemble(s, grid, &r.choices, &paths, &picks, &chosen);
            return finish(s, decision, examined);
        }
    }
    Err(SolveError::Infeasible)
}

fn assemble(
    s: &Scenario,
    grid: Grid,
    choices: &[Choice],
    paths: &[Vec<RoutePath>],
    picks: &[&[Realisation]],
    chosen: &[usize],
) -> Decision {
    let mut shares = ShareTable::new();
    let mut vdus = Vec::new();
    for (u, c) in choices.iter().enumerate() {
        let v = &s.vdus[u];
        let r = &picks[u][chosen[u]];
        let p = c.urllc_path.map(|i| paths[u][i].clone());
        let q = c.embb_path.map(|i| paths[u][i].clone());
        for (path, units, slice) in [(&p, &r.urllc, PacketClass::Urllc), (&q, &r.embb, PacketClass::Embb)] {
            if let Some(path) = path {
                for (&n, &k) in path.nodes.iter().zip(units) {
                    shares.set(n, SliceKey { slice, vdu: v.id }, grid.share(k));
                }
            }
        }
        vdus.push(VduDecision { vdu: v.id, split: Some(c.split), admitted: c.admitted, urllc_path: p, embb_path: q });
    }
    Decision { vdus, shares }
}
