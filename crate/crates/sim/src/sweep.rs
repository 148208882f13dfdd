//! Largest simulated URLLC delay of one vDU as its admission grows.

use rayon::prelude::*;
use serde::Serialize;
use slicenc_core::catalog::PacketClass;
use slicenc_core::scenario::{Decision, Scenario};

use crate::{bound, run, SimConfig, SimError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ue_count: u32,
    /// Largest URLLC delay of the vDU over all seeds.
    pub sim_max_s: f64,
    /// Share-allocation bound, queueing plus propagation; `None` when the
    /// allocation cannot carry this many UEs.
    pub bound_s: Option<f64>,
    /// Bound under the simulated WRR schedule.
    pub wrr_bound_s: Option<f64>,
    pub dropped: u64,
}

fn with_admission(d: &Decision, vdu: u32, n: u32) -> Decision {
    let mut d = d.clone();
    for v in &mut d.vdus {
        if v.vdu == vdu {
            v.admitted = n;
        }
    }
    d
}

/// Runs every seed at every admission count. Counts must lie in
/// `1..=admitted` for the vDU; the decision's shares are kept as they are.
pub fn sweep_ue_count(
    s: &Scenario,
    d: &Decision,
    vdu: u32,
    counts: &[u32],
    seeds: &[u64],
    cfg: &SimConfig,
) -> Result<Vec<SweepPoint>, SimError> {
    let admitted = d.vdu(vdu).ok_or_else(|| SimError::Invalid(format!("vDU {vdu} is not in the decision")))?.admitted;
    if let Some(n) = counts.iter().find(|&&n| n == 0 || n > admitted) {
        return Err(SimError::Invalid(format!("{n} UEs is outside 1..={admitted} for vDU {vdu}")));
    }
    if seeds.is_empty() {
        return Err(SimError::Invalid("no seeds given".into()));
    }
    let prefix = format!("{}-{vdu}-", PacketClass::Urllc);
    let mine = |id: &str| id.starts_with(&prefix);
    counts
        .par_iter()
        .map(|&n| {
            let dn = with_admission(d, vdu, n);
            let bound_s = bound::gps_bounds(s, &dn)
                .ok()
                .map(|b| b.iter().filter(|(id, _)| mine(id)).map(|(_, x)| *x).fold(0.0, f64::max));
            let wrr_bound_s = bound::wrr_bounds(s, &dn)?
                .iter()
                .filter(|(id, _)| mine(id))
                .map(|(_, x)| *x)
                .try_fold(0.0, |acc: f64, x| x.map(|x| acc.max(x)));
            let runs: Vec<_> = seeds
                .par_iter()
                .map(|&seed| run(s, &dn, &SimConfig { seed, ..*cfg }))
                .collect::<Result<_, _>>()?;
            Ok(SweepPoint {
                ue_count: n,
                sim_max_s: runs.iter().map(|r| r.max_delay(|f| mine(&f.id))).fold(0.0, f64::max),
                bound_s,
                wrr_bound_s,
                dropped: runs.iter().map(|r| r.dropped).sum(),
            })
        })
        .collect()
}
