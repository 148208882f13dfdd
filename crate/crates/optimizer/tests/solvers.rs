use proptest::prelude::*;
use slicenc_core::catalog::SplitId;
use slicenc_core::scenario::{Decision, Scenario, ScenarioDoc};
use slicenc_core::topology::ShareTable;
use slicenc_opt::{
    check_feasibility, compare_modes, instances, objective, solve_bnb, solve_exhaustive, Grid, Solution, SolveError,
    SolveOptions,
};

fn coarse() -> SolveOptions {
    SolveOptions { grid_step: 0.25, max_nodes: None }
}

fn edit(s: &Scenario, f: impl FnOnce(&mut ScenarioDoc)) -> Scenario {
    let mut doc = s.doc.clone();
    f(&mut doc);
    Scenario::from_doc(doc).unwrap()
}

fn split_cost(s: &Scenario, id: SplitId) -> f64 {
    slicenc_core::economics::deployment_cost(&[s.catalog.placement_vector(id).unwrap()], &s.econ)
}

fn profit_or_none(r: Result<Solution, SolveError>) -> Option<f64> {
    match r {
        Ok(s) => Some(s.profit),
        Err(SolveError::Infeasible) => None,
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn grid_rejects_steps_that_do_not_divide_one() {
    assert_eq!(Grid::from_step(0.25).unwrap().levels(), 4);
    assert_eq!(Grid::from_step(0.01).unwrap().levels(), 100);
    assert!(Grid::from_step(0.3).is_err());
    assert!(Grid::from_step(0.0).is_err());
    assert!(Grid::from_step(1e-5).is_err());
}

#[test]
fn no_urllc_demand_deploys_cheapest_split() {
    let s = edit(&instances::tiny(7, 2), |d| {
        d.splits = SplitId::SELECTABLE.to_vec();
        for v in &mut d.vdus {
            v.urllc_cap = Some(0);
            v.embb_demand_bps = Some(20e6);
        }
    });
    let sol = solve_exhaustive(&s, coarse()).unwrap();
    let per_vdu = split_cost(&s, SplitId::O9);
    assert!((sol.profit + per_vdu * s.vdus.len() as f64).abs() < 1e-12);
    assert!(sol.splits().iter().all(|x| *x == Some(SplitId::O9)));
    assert_eq!(solve_bnb(&s, coarse()).unwrap().profit, sol.profit);
}

#[test]
fn sla_below_propagation_admits_nobody() {
    let s = edit(&instances::tiny(3, 2), |d| {
        d.slices.urllc.delay_sla_s = 1e-6;
        for v in &mut d.vdus {
            v.urllc_cap = Some(5);
        }
    });
    let sol = solve_bnb(&s, coarse()).unwrap();
    assert!(sol.admitted().iter().all(|&n| n == 0));
    assert!(solve_exhaustive(&s, coarse()).unwrap().admitted().iter().all(|&n| n == 0));
}

#[test]
fn single_decision_space_is_returned() {
    let s = edit(&instances::tiny(11, 1), |d| {
        d.splits = vec![SplitId::O1];
        d.vdus[0].urllc_cap = Some(0);
        d.vdus[0].embb_demand_bps = Some(0.0);
    });
    let sol = solve_bnb(&s, coarse()).unwrap();
    assert_eq!(sol.splits(), vec![Some(SplitId::O1)]);
    assert_eq!(sol.admitted(), vec![0]);
    assert!(sol.decision.shares.iter().next().is_none());
    assert_eq!(sol.profit, -split_cost(&s, SplitId::O1));
}

#[test]
fn hand_enumerated_single_path_optimum() {
    // One vDU, one path c-m1-d1, caps 4.8/4.8/4.8 Gb/s, 4 UEs on offer.
    let s = edit(&instances::tiny(5, 1), |d| {
        d.splits = vec![SplitId::O1, SplitId::O9];
        d.links.retain(|l| l.a != "m2" && l.b != "m2");
        d.nodes.retain(|n| n.id != "m2");
        for n in &mut d.nodes {
            n.capacity_bps = 4.8e9;
            n.latency_s = 10e-6;
        }
        for l in &mut d.links {
            l.distance_m = 1000.0;
        }
        d.vdus[0].urllc_cap = Some(4);
        d.vdus[0].embb_demand_bps = Some(0.0);
        d.slices.urllc.delay_sla_s = 1e-3;
        d.processing = None;
        d.economics.gamma = 0.5;
    });
    // Everything fits at full share, so the choice is purely economic.
    let o1 = 0.5 * 4.0 - split_cost(&s, SplitId::O1);
    let o9 = 0.5 * 4.0 - split_cost(&s, SplitId::O9);
    let sol = solve_exhaustive(&s, coarse()).unwrap();
    assert_eq!(sol.admitted(), vec![4]);
    assert!((sol.profit - o1.max(o9)).abs() < 1e-12);
    assert_eq!(sol.splits(), vec![Some(if o9 > o1 { SplitId::O9 } else { SplitId::O1 })]);
}

#[test]
fn budget_exhaustion_reports_incumbent() {
    let s = instances::tiny(28, 2);
    match solve_bnb(&s, SolveOptions { grid_step: 0.25, max_nodes: Some(1) }) {
        Err(SolveError::BudgetExceeded { limit: 1, .. }) => {}
        other => panic!("{:?}", other.map(|s| s.profit)),
    }
}

#[test]
fn share_overflow_is_a_violation() {
    let s = instances::tiny(2, 1);
    let mut sol = solve_bnb(&s, coarse()).unwrap();
    let (node, key, _) = sol.decision.shares.iter().next().unwrap();
    let mut shares = ShareTable::new();
    for (n, k, v) in sol.decision.shares.iter() {
        shares.set(n, k, v);
    }
    shares.set(node, key, 1.5);
    sol.decision.shares = shares;
    let report = check_feasibility(&s, &sol.decision);
    assert!(report.violations().any(|c| c.kind == slicenc_opt::ConstraintKind::ShareLimit));
}

#[test]
fn modes_bracket_fixed_splits() {
    for seed in 0..20 {
        let s = edit(&instances::tiny(seed, 2), |d| d.splits = SplitId::SELECTABLE.to_vec());
        let m = match compare_modes(&s, coarse()) {
            Ok(m) => m,
            Err(SolveError::Infeasible) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(m.profit_ffs >= m.profit_o1 && m.profit_ffs >= m.profit_o9, "seed {seed}");
        assert_eq!(m.split_histogram.values().sum::<usize>(), s.vdus.len());
    }
}

fn verify(s: &Scenario, d: &Decision, profit: f64) {
    let report = check_feasibility(s, d);
    assert!(report.is_feasible(), "{:?}", report.violations().collect::<Vec<_>>());
    assert_eq!(objective(s, d).2, profit);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bnb_equals_exhaustive(seed in any::<u64>()) {
        let s = instances::tiny(seed, 2);
        let a = solve_bnb(&s, coarse());
        let b = solve_exhaustive(&s, coarse());
        if let (Ok(a), Ok(b)) = (&a, &b) {
            prop_assert_eq!(a.splits(), b.splits());
            prop_assert_eq!(a.admitted(), b.admitted());
        }
        prop_assert_eq!(profit_or_none(a), profit_or_none(b));
    }

    #[test]
    fn solutions_revalidate(seed in any::<u64>()) {
        let s = instances::tiny(seed, 2);
        if let Ok(sol) = solve_bnb(&s, coarse()) {
            verify(&s, &sol.decision, sol.profit);
            prop_assert_eq!(check_feasibility(&s, &sol.decision), sol.report.clone());
        }
        if let Ok(sol) = solve_exhaustive(&s, coarse()) {
            verify(&s, &sol.decision, sol.profit);
        }
    }

    #[test]
    fn more_candidate_splits_never_hurt(seed in any::<u64>(), extra in 0usize..6) {
        let s = instances::tiny(seed, 2);
        let wider = edit(&s, |d| {
            let add = SplitId::SELECTABLE[extra];
            if !d.splits.contains(&add) {
                d.splits.push(add);
            }
        });
        let narrow = profit_or_none(solve_bnb(&s, coarse()));
        let wide = profit_or_none(solve_bnb(&wider, coarse()));
        if let Some(n) = narrow {
            prop_assert!(wide.is_some_and(|w| w >= n));
        }
    }
}
