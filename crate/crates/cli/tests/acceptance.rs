//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p slicenc --test acceptance`. Pass criterion
//! numbers to run a subset, e.g. `-- 1 2 8`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicenc_core::analysis;
use slicenc_core::catalog::{required_capacity, RadioConfig, SplitId};
use slicenc_core::economics::{gamma, zeta_from_cashflow, CashFlowInput};
use slicenc_core::minplus::{additive_delay, concatenate, delay_bound_single, ArrivalCurve, ServiceCurve};
use slicenc_core::scenario::{Decision, DecisionDoc, Scenario};
use slicenc_opt::{check_feasibility, demand_sweep, instances, objective, solve_bnb, solve_exhaustive, SolveOptions};
use slicenc_sim::{run, wrr_bounds, BufferPolicy, SimConfig, TrafficModel};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(name: &str) -> Scenario {
    Scenario::load(&fixture(name)).expect("fixture loads")
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(d: Duration, limit_s: u64) -> bool {
    d <= Duration::from_secs(limit_s)
}

const APPENDIX_BOUND: f64 = 1.43153667431e-3;

/// Bursts of f2 and f3 entering n1..n5, as seen from f1.
const APPENDIX_BURSTS: [(&str, &str, f64); 10] = [
    ("f2", "n1", 4096.0),
    ("f3", "n1", 2048.0),
    ("f2", "n2", 4116.97152),
    ("f3", "n2", 2058.48576),
    ("f2", "n3", 4137.94304),
    ("f3", "n3", 2068.97152),
    ("f2", "n4", 4156.571648),
    ("f3", "n4", 2078.285824),
    ("f2", "n5", 4171.005952),
    ("f3", "n5", 2085.502976),
];

fn appendix_golden() -> Verdict {
    let t = Instant::now();
    let s = load("appendix_a.scenario");
    let d = Decision::from_doc(&s, s.doc.decision.as_ref().expect("embedded decision")).expect("decision resolves");
    let reports = analysis::analyze(&s, &d).expect("appendix analyses");
    let f1 = reports.iter().find(|r| r.id == "f1").expect("f1 reported");
    let rel = (f1.breakdown.total - APPENDIX_BOUND).abs() / APPENDIX_BOUND;
    let mut matched = 0;
    for (flow, node, bits) in APPENDIX_BURSTS {
        if f1.bursts.iter().any(|b| b.flow == flow && b.node == node && (b.bits - bits).abs() <= 1e-9) {
            matched += 1;
        }
    }
    let el = t.elapsed();
    verdict(
        rel <= 1e-9 && matched == APPENDIX_BURSTS.len() && within(el, 1),
        format!("bound {:.11} ms (rel err {rel:.1e}), {matched}/10 bursts, {el:.2?}", f1.breakdown.total * 1e3),
    )
}

fn economics() -> Verdict {
    let t = Instant::now();
    let g = gamma(4, 6, 0.2585, 0.5571, 320);
    let text = std::fs::read_to_string(fixture("verizon_q3_2022.cashflow")).expect("fixture reads");
    let cf: CashFlowInput = toml::from_str(&text).expect("fixture parses");
    let z = zeta_from_cashflow(&cf).zeta;
    let el = t.elapsed();
    verdict(
        (g - 0.118).abs() <= 1e-3 && (z - 0.5571).abs() <= 5e-4 && within(el, 1),
        format!("gamma {g:.5}, zeta {z:.5}, {el:.2?}"),
    )
}

fn pay_bursts_only_once() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    let mut least = f64::INFINITY;
    for _ in 0..1000 {
        let rate = rng.random_range(1e3..1e9);
        let a = ArrivalCurve::new(rate, rng.random_range(0.0..1e6)).expect("valid arrival");
        let s = ServiceCurve::new(rate * rng.random_range(1.0..100.0), rng.random_range(1e-6..1e-2))
            .expect("valid service");
        let hops = rng.random_range(2..=20u32);
        let hop_by_hop = additive_delay(&a, &s, hops).expect("stable");
        let whole = delay_bound_single(&a, &concatenate(&vec![s; hops as usize]).expect("non-empty")).expect("stable");
        if hop_by_hop <= whole {
            failures += 1;
        }
        least = least.min((hop_by_hop - whole) / whole);
    }
    let el = t.elapsed();
    verdict(
        failures == 0 && within(el, 5),
        format!("{failures}/1000 not strictly larger, smallest relative gap {least:.2e}, {el:.2?}"),
    )
}

fn bound_soundness() -> Verdict {
    let t = Instant::now();
    let opts = SolveOptions { grid_step: 0.25, max_nodes: None };
    let (mut scenarios, mut runs, mut flows, mut violations, mut worst) = (0, 0, 0u64, 0u64, 0.0f64);
    let mut seed = 0u64;
    while scenarios < 100 {
        seed += 1;
        let s = instances::tiny(seed, 2);
        let Ok(sol) = solve_bnb(&s, opts) else { continue };
        let bounds = wrr_bounds(&s, &sol.decision).expect("decision builds");
        if bounds.is_empty() {
            continue;
        }
        scenarios += 1;
        for k in 0..5 {
            let cfg = SimConfig {
                model: TrafficModel::TokenBucket,
                seed: seed * 10 + k,
                duration_s: 1.0,
                buffers: BufferPolicy::Unlimited,
            };
            let st = run(&s, &sol.decision, &cfg).expect("simulation runs");
            runs += 1;
            violations += st.conformance_violations;
            for (f, (id, b)) in st.flows.iter().zip(&bounds) {
                assert_eq!(&f.id, id);
                flows += 1;
                // Half a nanosecond of float slack on the bound.
                match b {
                    Some(b) if f.max_delay_s <= b + 0.5e-9 => worst = worst.max(f.max_delay_s / b),
                    _ => violations += 1,
                }
            }
        }
    }
    let el = t.elapsed();
    verdict(
        violations == 0 && within(el, 600),
        format!(
            "{scenarios} scenarios, {runs} runs, {flows} flow checks, {violations} exceptions, \
             worst sim/bound {worst:.3}, {el:.1?}"
        ),
    )
}

fn solver_equivalence() -> Verdict {
    let t = Instant::now();
    let opts = SolveOptions { grid_step: 0.25, max_nodes: None };
    let (mut equal, mut infeasible, mut differ) = (0, 0, Vec::new());
    for seed in 0..200u64 {
        let s = instances::tiny(seed, 2);
        match (solve_bnb(&s, opts), solve_exhaustive(&s, opts)) {
            (Ok(a), Ok(b)) if a.profit == b.profit => equal += 1,
            (Err(slicenc_opt::SolveError::Infeasible), Err(slicenc_opt::SolveError::Infeasible)) => infeasible += 1,
            _ => differ.push(seed),
        }
    }
    let el = t.elapsed();
    verdict(
        differ.is_empty() && within(el, 300),
        format!("{equal} equal, {infeasible} both infeasible, differing seeds {differ:?}, {el:.1?}"),
    )
}

fn flexible_split_dominance() -> Verdict {
    let t = Instant::now();
    let s = load("fig6_default.scenario");
    let rows = demand_sweep(&s, SolveOptions { grid_step: 0.05, max_nodes: None }).expect("sweep solves");
    let el = t.elapsed();
    let below = rows
        .iter()
        .filter(|r| r.comparison.profit_ffs < r.comparison.profit_o1 || r.comparison.profit_ffs < r.comparison.profit_o9)
        .count();
    let o1_wins = rows.iter().filter(|r| r.comparison.profit_o1 > r.comparison.profit_o9).count();
    let o9_wins = rows.iter().filter(|r| r.comparison.profit_o9 > r.comparison.profit_o1).count();
    let gap = rows
        .iter()
        .map(|r| r.comparison.profit_o9 - r.comparison.profit_o1)
        .fold(f64::INFINITY, f64::min);
    verdict(
        rows.len() == 256 && below == 0 && o1_wins >= 1 && o9_wins >= 1 && within(el, 1800),
        format!(
            "{} instances, flexible below a fixed split on {below}, O1 beats O9 on {o1_wins}, \
             O9 beats O1 on {o9_wins} (smallest O9 lead {gap:.4}), {el:.0?}",
            rows.len()
        ),
    )
}

fn reference_solution() -> Verdict {
    let t = Instant::now();
    let s = load("fig6_default.scenario");
    let d = Decision::from_doc(&s, &DecisionDoc::load(&fixture("table7.decision")).expect("decision loads"))
        .expect("decision resolves");
    let report = check_feasibility(&s, &d);
    let worst = report.worst_urllc_delay().unwrap_or(f64::INFINITY);
    let (_, _, reference) = objective(&s, &d);
    // Every 0.05 grid point is also a 0.01 grid point, so the coarse optimum
    // is a lower bound on the fine one.
    let best = solve_bnb(&s, SolveOptions { grid_step: 0.05, max_nodes: None }).expect("optimum exists");
    let el = t.elapsed();
    verdict(
        report.is_feasible() && worst <= 1e-3 && best.profit >= reference,
        format!(
            "feasible {}, worst URLLC bound {:.4} ms, profit {:.4} optimum vs {reference:.4} reference decision, {el:.1?}",
            report.is_feasible(),
            worst * 1e3,
            best.profit
        ),
    )
}

fn split_capacities() -> Verdict {
    let t = Instant::now();
    let rc = RadioConfig::default();
    let o9 = required_capacity(SplitId::O9, &rc, 1500.0).expect("O9 has a formula");
    let o11 = required_capacity(SplitId::O11, &rc, 1500.0).expect("O11 has a formula");
    let s = load("fig6_default.scenario");
    let v1 = s.topology.node(s.topology.index_of("v1").expect("v1 exists")).capacity_bps;
    let el = t.elapsed();
    verdict(
        (o9 - 1.0752e9).abs() <= 1e-6 * 1.0752e9
            && (o11 - 1.96608e9).abs() <= 1e-6 * 1.96608e9
            && o9 < v1
            && within(el, 1),
        format!("O9 {:.6} Gb/s, O11 {:.6} Gb/s, v1 {:.2} Gb/s, {el:.2?}", o9 / 1e9, o11 / 1e9, v1 / 1e9),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("appendix golden bound", appendix_golden),
        ("economics", economics),
        ("pay bursts only once", pay_bursts_only_once),
        ("bound soundness", bound_soundness),
        ("solver equivalence", solver_equivalence),
        ("flexible split dominance", flexible_split_dominance),
        ("reference solution", reference_solution),
        ("split catalog", split_capacities),
    ];
    // Criterion numbers to run; libtest flags such as --nocapture are ignored.
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !wanted.is_empty() && !wanted.contains(&n) {
            continue;
        }
        let v = check();
        println!("criterion {n} {name}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
