//! Joint split selection, routing, share allocation and URLLC admission.
//!
//! Two solvers cover the same discretised decision space: [`solve_exhaustive`]
//! enumerates it outright and is only practical for tiny instances, while
//! [`solve_bnb`] prunes it with dominance rules and profit bounds.

use std::cmp::Ordering;

use serde::Serialize;
use slicenc_core::catalog::SplitId;
use slicenc_core::economics;
use slicenc_core::error::ScenarioError;
use slicenc_core::scenario::{Decision, Scenario};
use thiserror::Error;

mod exhaustive;
pub mod feasibility;
mod frontier;
pub mod instances;
mod modes;
mod search;

pub use exhaustive::solve_exhaustive;
pub use feasibility::{check_feasibility, ConstraintCheck, ConstraintKind, FeasibilityReport};
pub use modes::{compare_modes, demand_sweep, ModeComparison, SweepRow};
pub use search::{solve_bnb, Solver};

/// Share discretisation: shares are multiples of `1 / levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    levels: u16,
}

impl Grid {
    pub fn from_step(step: f64) -> Result<Self, SolveError> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(SolveError::BadGrid(step));
        }
        let levels = (1.0 / step).round();
        if (levels * step - 1.0).abs() > 1e-9 || levels > 10_000.0 {
            return Err(SolveError::BadGrid(step));
        }
        Ok(Self { levels: levels as u16 })
    }

    pub fn levels(self) -> u16 {
        self.levels
    }

    pub fn share(self, units: u16) -> f64 {
        f64::from(units) / f64::from(self.levels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub grid_step: f64,
    /// Search nodes allowed before giving up with the incumbent.
    pub max_nodes: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { grid_step: 0.01, max_nodes: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    #[serde(skip)]
    pub decision: Decision,
    pub profit: f64,
    pub revenue: f64,
    pub cost: f64,
    pub report: FeasibilityReport,
    pub nodes_explored: u64,
}

impl Solution {
    pub fn splits(&self) -> Vec<Option<SplitId>> {
        self.decision.vdus.iter().map(|v| v.split).collect()
    }

    pub fn admitted(&self) -> Vec<u32> {
        self.decision.vdus.iter().map(|v| v.admitted).collect()
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("grid step {0} must divide 1 into at most 10000 levels")]
    BadGrid(f64),
    #[error("no feasible decision exists")]
    Infeasible,
    #[error("search budget of {limit} nodes exhausted")]
    BudgetExceeded { limit: u64, best: Option<Box<Solution>> },
    #[error("unsupported scenario: {0}")]
    Unsupported(String),
    #[error("solver produced a decision that fails verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Revenue, cost and profit of a decision.
pub fn objective(s: &Scenario, d: &Decision) -> (f64, f64, f64) {
    let admitted: Vec<u32> = d.vdus.iter().map(|v| v.admitted).collect();
    let placements: Vec<&[slicenc_core::catalog::Location]> = d
        .vdus
        .iter()
        .filter_map(|v| v.split.and_then(|id| s.catalog.placement_vector(id).ok()))
        .collect();
    let revenue = economics::revenue(&admitted, &s.econ);
    let cost = economics::deployment_cost(&placements, &s.econ);
    (revenue, cost, economics::profit(&admitted, &placements, &s.econ))
}

/// Per-vDU choice, without shares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Choice {
    pub split: SplitId,
    pub admitted: u32,
    /// Index into the vDU's full candidate path list.
    pub urllc_path: Option<usize>,
    pub embb_path: Option<usize>,
}

/// Deterministic preference among decisions of equal profit: lower cost,
/// then more centralised splits, more UEs and lower path indices, vDU by vDU.
pub(crate) fn compare_choices(s: &Scenario, a: &[Choice], b: &[Choice]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let cx = centralisation(s, x.split);
        let cy = centralisation(s, y.split);
        let ord = cy
            .cmp(&cx)
            .then(y.admitted.cmp(&x.admitted))
            .then(x.urllc_path.cmp(&y.urllc_path))
            .then(x.embb_path.cmp(&y.embb_path));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

fn centralisation(s: &Scenario, id: SplitId) -> (usize, std::cmp::Reverse<u8>) {
    let cu = s.catalog.split(id).map(|o| o.cu_count()).unwrap_or(0);
    (cu, std::cmp::Reverse(id.number()))
}

/// Candidate ordering: higher profit first, then lower cost, then [`compare_choices`].
pub(crate) fn better(s: &Scenario, a: (f64, f64, &[Choice]), b: (f64, f64, &[Choice])) -> bool {
    match a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => compare_choices(s, a.2, b.2) == Ordering::Less,
        },
    }
}

pub(crate) fn check_supported(s: &Scenario) -> Result<(), SolveError> {
    if s.uses_explicit_flows() {
        return Err(SolveError::Unsupported("explicit flow lists are for analysis only".into()));
    }
    if s.doc.slices.embb.delay_sla_s.is_some() {
        return Err(SolveError::Unsupported("eMBB delay SLAs are checked but not optimised".into()));
    }
    if s.vdus.is_empty() {
        return Err(SolveError::Unsupported("scenario has no vDUs".into()));
    }
    Ok(())
}

/// Verifies a solver result and packages it.
pub(crate) fn finish(s: &Scenario, decision: Decision, nodes: u64) -> Result<Solution, SolveError> {
    let report = check_feasibility(s, &decision);
    if !report.is_feasible() {
        let first = report.violations().next().map(|c| format!("{} {}", c.kind, c.subject)).unwrap_or_default();
        return Err(SolveError::Verification(first));
    }
    let (revenue, cost, profit) = objective(s, &decision);
    Ok(Solution { decision, profit, revenue, cost, report, nodes_explored: nodes })
}
