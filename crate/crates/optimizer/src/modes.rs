//! Flexible versus fixed split deployment, alone and over the demand grid.

use std::collections::BTreeMap;

use serde::Serialize;
use slicenc_core::catalog::SplitId;
use slicenc_core::scenario::Scenario;

use crate::{Solution, SolveError, SolveOptions, Solver};

#[derive(Debug, Clone, Serialize)]
pub struct ModeComparison {
    pub profit_ffs: f64,
    pub profit_o1: f64,
    pub profit_o9: f64,
    /// Splits chosen by the flexible solution, with how many vDUs use each.
    pub split_histogram: BTreeMap<SplitId, usize>,
    #[serde(skip)]
    pub solutions: [Solution; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// eMBB load per vDU, in percent of RBs.
    pub embb_percent: Vec<f64>,
    #[serde(flatten)]
    pub comparison: ModeComparison,
}

fn compare_with(solver: &mut Solver, s: &Scenario) -> Result<ModeComparison, SolveError> {
    let ffs = solver.solve(s)?;
    let o1 = solver.solve(&s.with_splits(&[SplitId::O1])?)?;
    let o9 = solver.solve(&s.with_splits(&[SplitId::O9])?)?;
    let mut split_histogram = BTreeMap::new();
    for id in ffs.splits().into_iter().flatten() {
        *split_histogram.entry(id).or_insert(0) += 1;
    }
    Ok(ModeComparison {
        profit_ffs: ffs.profit,
        profit_o1: o1.profit,
        profit_o9: o9.profit,
        split_histogram,
        solutions: [ffs, o1, o9],
    })
}

/// Optimum with the scenario's candidate splits, with O1 only and with O9 only.
pub fn compare_modes(s: &Scenario, opts: SolveOptions) -> Result<ModeComparison, SolveError> {
    compare_with(&mut Solver::new(s, opts)?, s)
}

/// [`compare_modes`] for every assignment of demand-grid levels to vDUs.
pub fn demand_sweep(s: &Scenario, opts: SolveOptions) -> Result<Vec<SweepRow>, SolveError> {
    let levels = &s.doc.demand_grid.percent;
    let u = s.vdus.len();
    let mut solver = Solver::new(s, opts)?;
    let mut rows = Vec::new();
    let mut idx = vec![0usize; u];
    if levels.is_empty() {
        return Ok(rows);
    }
    loop {
        let percents: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
        let variant = s.with_embb_percents(&percents)?;
        rows.push(SweepRow { comparison: compare_with(&mut solver, &variant)?, embb_percent: percents });
        let Some(d) = (0..u).rev().find(|&d| idx[d] + 1 < levels.len()) else { break };
        idx[d] += 1;
        idx[d + 1..].iter_mut().for_each(|i| *i = 0);
    }
    Ok(rows)
}
