//! Scenario and decision documents: the TOML schema, validation into resolved
//! structures, and a digest that ignores key order and formatting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{Catalog, PacketClass, SplitId};
use crate::delay::ProcessingModel;
use crate::economics::EconParams;
use crate::error::ScenarioError;
use crate::topology::{Link, RoutePath, ShareTable, SliceKey, Topology, TransportNode, LIGHT_SPEED};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrllcSlice {
    pub delay_sla_s: f64,
    /// Minimum rate each admitted UE must be given.
    pub min_rate_bps: f64,
    pub rate_bps: f64,
    pub burst_bits: f64,
    pub packet_bytes: f64,
}

impl Default for UrllcSlice {
    fn default() -> Self {
        Self {
            delay_sla_s: 1e-3,
            min_rate_bps: 1.024e6,
            rate_bps: 1.024e6,
            burst_bits: 1024.0,
            packet_bytes: 128.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbbSlice {
    pub packet_bytes: f64,
    pub burst_bits: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_sla_s: Option<f64>,
}

impl Default for EmbbSlice {
    fn default() -> Self {
        Self { packet_bytes: 1500.0, burst_bits: 12000.0, delay_sla_s: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slices {
    #[serde(default)]
    pub urllc: UrllcSlice,
    #[serde(default)]
    pub embb: EmbbSlice,
}

/// Background eMBB demand levels, as percent of RBs and the matching rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandGrid {
    pub percent: Vec<f64>,
    pub demand_bps: Vec<f64>,
}

impl Default for DemandGrid {
    fn default() -> Self {
        Self {
            percent: vec![20.0, 40.0, 60.0, 80.0],
            demand_bps: vec![29.201e6, 58.243e6, 87.109e6, 117.81e6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VduSpec {
    pub id: u32,
    pub node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ru: Option<String>,
    /// Share of RBs taken by eMBB, looked up in the demand grid when no rate is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embb_percent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embb_demand_bps: Option<f64>,
    /// Explicit URLLC admission cap; derived from F_max and free RBs otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urllc_cap: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roles {
    pub cu: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dus: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFlow {
    pub id: String,
    pub slice: PacketClass,
    pub vdu: u32,
    pub rate_bps: f64,
    pub burst_bits: f64,
    pub packet_bytes: f64,
    /// Own route; the slice path from the decision when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VduDecisionDoc {
    pub vdu: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitId>,
    #[serde(default)]
    pub admitted: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urllc_path: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embb_path: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionDoc {
    #[serde(default)]
    pub vdus: Vec<VduDecisionDoc>,
    /// node id -> "slice/vdu" -> share
    #[serde(default)]
    pub shares: BTreeMap<String, BTreeMap<String, f64>>,
}

/// The scenario document as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    #[serde(default = "light_speed")]
    pub light_speed_mps: f64,
    #[serde(default = "yes")]
    pub apply_overhead: bool,
    /// IP packet size used in the split capacity formulas.
    #[serde(default = "mtu")]
    pub split_capacity_packet_bytes: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_limit: Option<usize>,
    #[serde(default = "default_splits")]
    pub splits: Vec<SplitId>,
    pub roles: Roles,
    pub nodes: Vec<TransportNode>,
    #[serde(default)]
    pub links: Vec<Link>,
    #[serde(default)]
    pub vdus: Vec<VduSpec>,
    #[serde(default)]
    pub slices: Slices,
    #[serde(default)]
    pub demand_grid: DemandGrid,
    #[serde(default)]
    pub economics: EconParams,
    #[serde(default)]
    pub processing: Option<ProcessingModel>,
    #[serde(default)]
    pub catalog: Catalog,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<ExplicitFlow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionDoc>,
}

fn light_speed() -> f64 {
    LIGHT_SPEED
}
fn yes() -> bool {
    true
}
fn mtu() -> f64 {
    1500.0
}
fn default_splits() -> Vec<SplitId> {
    SplitId::SELECTABLE.to_vec()
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        toml::to_string(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// SHA-256 over the canonical JSON form of the parsed document.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

impl DecisionDoc {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        #[derive(Deserialize)]
        struct Wrapper {
            decision: DecisionDoc,
        }
        if let Ok(w) = toml::from_str::<Wrapper>(text) {
            return Ok(w.decision);
        }
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, ScenarioError> {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            decision: &'a DecisionDoc,
        }
        toml::to_string(&Wrapper { decision: self }).map_err(|e| ScenarioError::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vdu {
    pub id: u32,
    pub node: usize,
    pub embb_demand_bps: f64,
    pub urllc_cap: u32,
}

/// Validated scenario with ids resolved to indices.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub topology: Topology,
    pub cu: usize,
    pub vdus: Vec<Vdu>,
    pub catalog: Catalog,
    pub econ: EconParams,
    pub processing: Option<ProcessingModel>,
    pub candidates: Vec<SplitId>,
}

impl Scenario {
    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        let invalid = |m: String| ScenarioError::Invalid(m);
        let topology = Topology::new(doc.nodes.clone(), doc.links.clone())?;
        let cu = topology.index_of(&doc.roles.cu)?;
        for du in &doc.roles.dus {
            topology.index_of(du)?;
        }
        doc.catalog.validate()?;
        doc.economics.validate().map_err(invalid)?;
        if !(doc.light_speed_mps > 0.0) {
            return Err(invalid("light_speed_mps must be positive".into()));
        }
        if doc.splits.is_empty() {
            return Err(invalid("candidate split set is empty".into()));
        }
        for s in &doc.splits {
            doc.catalog.split(*s)?;
        }
        let u = &doc.slices.urllc;
        if !(u.delay_sla_s > 0.0 && u.rate_bps > 0.0 && u.min_rate_bps >= 0.0 && u.packet_bytes > 0.0) {
            return Err(invalid("URLLC slice parameters must be positive".into()));
        }
        if u.burst_bits < u.packet_bytes * 8.0 {
            return Err(invalid("URLLC burst is smaller than one packet".into()));
        }
        let e = &doc.slices.embb;
        if !(e.packet_bytes > 0.0) || e.burst_bits < e.packet_bytes * 8.0 {
            return Err(invalid("eMBB burst is smaller than one packet".into()));
        }
        if doc.demand_grid.percent.len() != doc.demand_grid.demand_bps.len() {
            return Err(invalid("demand grid columns differ in length".into()));
        }
        let n_vdus = doc.vdus.len().max(1) as u32;
        let per_vdu = doc.economics.f_max / n_vdus;
        let n_rb = f64::from(doc.catalog.radio.n_rb);
        let mut vdus = Vec::new();
        for v in &doc.vdus {
            if vdus.iter().any(|w: &Vdu| w.id == v.id) {
                return Err(invalid(format!("duplicate vDU id {}", v.id)));
            }
            let node = topology.index_of(&v.node)?;
            let demand = match (v.embb_demand_bps, v.embb_percent) {
                (Some(d), _) => d,
                (None, Some(p)) => doc
                    .demand_grid
                    .percent
                    .iter()
                    .position(|q| (q - p).abs() < 1e-9)
                    .map(|i| doc.demand_grid.demand_bps[i])
                    .ok_or_else(|| invalid(format!("vDU {}: {p}% is not on the demand grid", v.id)))?,
                (None, None) => 0.0,
            };
            if !(demand >= 0.0) {
                return Err(invalid(format!("vDU {} has negative eMBB demand", v.id)));
            }
            // Multiply before dividing so 80% of 100 RBs leaves exactly 20.
            let free_rbs = (n_rb * (100.0 - v.embb_percent.unwrap_or(0.0)) / 100.0 + 1e-9).floor().max(0.0) as u32;
            let cap = v.urllc_cap.unwrap_or(per_vdu.min(free_rbs));
            vdus.push(Vdu { id: v.id, node, embb_demand_bps: demand, urllc_cap: cap });
        }
        for f in &doc.flows {
            if !vdus.iter().any(|v| v.id == f.vdu) {
                return Err(invalid(format!("flow {} names unknown vDU {}", f.id, f.vdu)));
            }
            if !(f.rate_bps > 0.0) || f.burst_bits < f.packet_bytes * 8.0 || !(f.packet_bytes > 0.0) {
                return Err(invalid(format!("flow {} needs a positive rate and a burst of one packet", f.id)));
            }
            if let Some(p) = &f.path {
                topology.path_from_ids(p)?;
            }
        }
        Ok(Self {
            candidates: doc.splits.clone(),
            catalog: doc.catalog.clone(),
            econ: doc.economics,
            processing: doc.processing,
            topology,
            cu,
            vdus,
            doc,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_doc(ScenarioDoc::load(path)?)
    }

    pub fn vdu(&self, id: u32) -> Option<&Vdu> {
        self.vdus.iter().find(|v| v.id == id)
    }

    pub fn vdu_index(&self, id: u32) -> Option<usize> {
        self.vdus.iter().position(|v| v.id == id)
    }

    pub fn uses_explicit_flows(&self) -> bool {
        !self.doc.flows.is_empty()
    }

    /// Paths a slice of the given vDU may take.
    pub fn candidate_paths(&self, vdu: &Vdu) -> Result<Vec<RoutePath>, ScenarioError> {
        Ok(self.topology.enumerate_paths(self.cu, vdu.node, self.doc.hop_limit)?)
    }

    pub fn with_embb_percents(&self, percents: &[f64]) -> Result<Scenario, ScenarioError> {
        let mut doc = self.doc.clone();
        for (v, p) in doc.vdus.iter_mut().zip(percents) {
            v.embb_percent = Some(*p);
            v.embb_demand_bps = None;
            v.urllc_cap = None;
        }
        Scenario::from_doc(doc)
    }

    pub fn with_splits(&self, splits: &[SplitId]) -> Result<Scenario, ScenarioError> {
        let mut doc = self.doc.clone();
        doc.splits = splits.to_vec();
        Scenario::from_doc(doc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VduDecision {
    pub vdu: u32,
    pub split: Option<SplitId>,
    pub admitted: u32,
    pub urllc_path: Option<RoutePath>,
    pub embb_path: Option<RoutePath>,
}

impl VduDecision {
    pub fn path(&self, slice: PacketClass) -> Option<&RoutePath> {
        match slice {
            PacketClass::Urllc => self.urllc_path.as_ref(),
            PacketClass::Embb => self.embb_path.as_ref(),
        }
    }
}

/// Resolved decision: per-vDU split, admission and paths, plus the share table.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub vdus: Vec<VduDecision>,
    pub shares: ShareTable,
}

pub fn parse_key(text: &str) -> Option<SliceKey> {
    let (slice, vdu) = text.split_once('/')?;
    let slice = match slice.trim() {
        "urllc" => PacketClass::Urllc,
        "embb" => PacketClass::Embb,
        _ => return None,
    };
    Some(SliceKey { slice, vdu: vdu.trim().parse().ok()? })
}

impl Decision {
    pub fn from_doc(s: &Scenario, doc: &DecisionDoc) -> Result<Self, ScenarioError> {
        let invalid = |m: String| ScenarioError::Invalid(m);
        let mut vdus = Vec::new();
        for v in &s.vdus {
            let entry = doc.vdus.iter().find(|d| d.vdu == v.id);
            let resolve = |p: &Option<Vec<String>>| -> Result<Option<RoutePath>, ScenarioError> {
                let Some(ids) = p else { return Ok(None) };
                let path = s.topology.path_from_ids(ids)?;
                if path.nodes.first() != Some(&s.cu) || path.nodes.last() != Some(&v.node) {
                    return Err(invalid(format!("vDU {} path must run from the CU to its node", v.id)));
                }
                Ok(Some(path))
            };
            let d = match entry {
                Some(e) => VduDecision {
                    vdu: v.id,
                    split: e.split,
                    admitted: e.admitted,
                    urllc_path: resolve(&e.urllc_path)?,
                    embb_path: resolve(&e.embb_path)?,
                },
                None => VduDecision { vdu: v.id, split: None, admitted: 0, urllc_path: None, embb_path: None },
            };
            if let Some(split) = d.split {
                s.catalog.split(split)?;
            }
            vdus.push(d);
        }
        if let Some(d) = doc.vdus.iter().find(|d| s.vdu(d.vdu).is_none()) {
            return Err(invalid(format!("decision names unknown vDU {}", d.vdu)));
        }
        let mut shares = ShareTable::new();
        for (node, entries) in &doc.shares {
            let n = s.topology.index_of(node)?;
            for (key, share) in entries {
                let k = parse_key(key).ok_or_else(|| invalid(format!("bad slice key {key:?}")))?;
                if s.vdu(k.vdu).is_none() {
                    return Err(invalid(format!("share for unknown vDU in {key:?}")));
                }
                if !(*share >= 0.0 && *share <= 1.0) {
                    return Err(invalid(format!("share {share} at {node} outside [0, 1]")));
                }
                shares.set(n, k, *share);
            }
        }
        Ok(Self { vdus, shares })
    }

    pub fn to_doc(&self, s: &Scenario) -> DecisionDoc {
        let ids = |p: &Option<RoutePath>| p.as_ref().map(|p| s.topology.path_ids(p));
        let vdus = self
            .vdus
            .iter()
            .map(|v| VduDecisionDoc {
                vdu: v.vdu,
                split: v.split,
                admitted: v.admitted,
                urllc_path: ids(&v.urllc_path),
                embb_path: ids(&v.embb_path),
            })
            .collect();
        let mut shares: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (node, key, share) in self.shares.iter() {
            shares
                .entry(s.topology.node(node).id.clone())
                .or_default()
                .insert(key.to_string(), share);
        }
        DecisionDoc { vdus, shares }
    }

    pub fn vdu(&self, id: u32) -> Option<&VduDecision> {
        self.vdus.iter().find(|v| v.vdu == id)
    }
}
