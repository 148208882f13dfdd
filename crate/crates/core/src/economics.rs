//! Cash-flow model: revenue per admitted UE against VNF deployment cost.

use serde::{Deserialize, Serialize};

use crate::catalog::Location;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconParams {
    /// CU-to-DU cost ratio of one VNF.
    pub eta: f64,
    /// Revenue per UE over the cost of one DU-hosted VNF.
    pub gamma: f64,
    /// Break-even utilisation.
    pub zeta: f64,
    pub f_max: u32,
    /// Cost of one DU-hosted VNF; the monetary unit.
    #[serde(default = "one")]
    pub c_du: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for EconParams {
    fn default() -> Self {
        Self { eta: 0.2585, gamma: 0.118, zeta: 0.5571, f_max: 320, c_du: 1.0 }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(format!("eta {} outside (0, 1]", self.eta));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(format!("zeta {} outside (0, 1]", self.zeta));
        }
        if self.f_max == 0 {
            return Err("f_max must be at least 1".into());
        }
        if !(self.gamma > 0.0) {
            return Err("gamma must be positive".into());
        }
        if !(self.c_du > 0.0) {
            return Err("c_du must be positive".into());
        }
        Ok(())
    }

    /// Cost of a deployment with the given VNF counts. Counting first keeps
    /// equal deployments bit-identical whatever their vDU order.
    pub fn cost_of_counts(&self, du_vnfs: usize, cu_vnfs: usize) -> f64 {
        du_vnfs as f64 * self.c_du + cu_vnfs as f64 * (self.eta * self.c_du)
    }
}

/// Quarterly financial statement figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CashFlowInput {
    pub wireless_revenue: f64,
    pub wireless_cost: f64,
    pub arpu_per_month: f64,
    #[serde(default = "quarter")]
    pub months: f64,
    pub total_connections: f64,
}

fn quarter() -> f64 {
    3.0
}

impl CashFlowInput {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("wireless_revenue", self.wireless_revenue),
            ("wireless_cost", self.wireless_cost),
            ("arpu_per_month", self.arpu_per_month),
            ("months", self.months),
            ("total_connections", self.total_connections),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CashFlowSummary {
    pub break_even_connections: f64,
    pub zeta: f64,
}

pub fn gamma(vdus: u32, vnfs: u32, eta: f64, zeta: f64, f_max: u32) -> f64 {
    f64::from(vdus) * (f64::from(vnfs) + eta - 1.0) / (zeta * f64::from(f_max))
}

pub fn zeta_from_cashflow(cf: &CashFlowInput) -> CashFlowSummary {
    let break_even = cf.wireless_cost / (cf.arpu_per_month * cf.months);
    CashFlowSummary { break_even_connections: break_even, zeta: break_even / cf.total_connections }
}

pub fn deployment_cost(placements: &[&[Location]], econ: &EconParams) -> f64 {
    let du = placements.iter().flat_map(|p| p.iter()).filter(|l| **l == Location::Du).count();
    let total: usize = placements.iter().map(|p| p.len()).sum();
    econ.cost_of_counts(du, total - du)
}

pub fn revenue(admitted: &[u32], econ: &EconParams) -> f64 {
    let ues: u64 = admitted.iter().map(|n| u64::from(*n)).sum();
    econ.gamma * econ.c_du * ues as f64
}

pub fn profit(admitted: &[u32], placements: &[&[Location]], econ: &EconParams) -> f64 {
    revenue(admitted, econ) - deployment_cost(placements, econ)
}
