//! Functional split catalog: VNF placement, midhaul capacity and latency
//! requirements, per-split packet overhead and VNF processing fractions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::CatalogError;

/// Split points of the RAN protocol stack, numbered from the top (O1) down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SplitId {
    O1,
    O2,
    O3,
    O4,
    O5,
    O6,
    O7,
    O8,
    O9,
    O10,
    O11,
    O12,
}

impl SplitId {
    pub const ALL: [SplitId; 12] = [
        SplitId::O1,
        SplitId::O2,
        SplitId::O3,
        SplitId::O4,
        SplitId::O5,
        SplitId::O6,
        SplitId::O7,
        SplitId::O8,
        SplitId::O9,
        SplitId::O10,
        SplitId::O11,
        SplitId::O12,
    ];

    /// Splits that may be chosen as the DU/CU cut.
    pub const SELECTABLE: [SplitId; 6] =
        [SplitId::O1, SplitId::O2, SplitId::O4, SplitId::O6, SplitId::O8, SplitId::O9];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn is_selectable(self) -> bool {
        Self::SELECTABLE.contains(&self)
    }

    /// Standardisation label for reports.
    pub fn label(self) -> &'static str {
        match self {
            SplitId::O1 => "3GPP option 1",
            SplitId::O2 => "3GPP option 2-1",
            SplitId::O3 => "3GPP option 3",
            SplitId::O4 => "3GPP option 4",
            SplitId::O5 => "3GPP option 5",
            SplitId::O6 => "3GPP option 6",
            SplitId::O7 => "3GPP option 7-1",
            SplitId::O8 => "3GPP option 7-3",
            SplitId::O9 => "O-RAN option 7.2x",
            SplitId::O10 => "3GPP option 7-2",
            SplitId::O11 => "3GPP option 8",
            SplitId::O12 => "eCPRI option E",
        }
    }
}

impl fmt::Display for SplitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "O{}", self.number())
    }
}

impl FromStr for SplitId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.trim().trim_start_matches(['O', 'o']);
        digits
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=12).contains(n))
            .map(|n| SplitId::ALL[n - 1])
            .ok_or_else(|| CatalogError::UnknownSplit(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Du,
    Cu,
}

/// Slice type; also selects the packet-size column of the overhead table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketClass {
    Urllc,
    Embb,
}

impl fmt::Display for PacketClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PacketClass::Urllc => "urllc",
            PacketClass::Embb => "embb",
        })
    }
}

/// Downlink radio parameters used by the capacity formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioConfig {
    pub tbs_dl_bits: f64,
    pub n_rb: u32,
    pub sample_rate: f64,
    pub subcarriers_per_rb: u32,
    pub symbols_per_subframe: u32,
    pub mimo_layers: u32,
    pub iq_bits: u32,
    pub antenna_ports: u32,
    pub transport_blocks: u32,
    pub fapi_dl_bps: f64,
    pub ref_symbol_res: u32,
    pub pdcch_res: u32,
    pub hdr_pdcp_bytes: u32,
    pub hdr_rlc_bytes: u32,
    pub hdr_mac_bytes: u32,
    pub ues_per_tti: u32,
    pub tti_s: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tbs_dl_bits: 75376.0,
            n_rb: 100,
            sample_rate: 30.72e6,
            subcarriers_per_rb: 12,
            symbols_per_subframe: 14,
            mimo_layers: 2,
            iq_bits: 32,
            antenna_ports: 2,
            transport_blocks: 2,
            fapi_dl_bps: 1.5e6,
            ref_symbol_res: 6,
            pdcch_res: 144,
            hdr_pdcp_bytes: 2,
            hdr_rlc_bytes: 5,
            hdr_mac_bytes: 2,
            ues_per_tti: 1,
            tti_s: 1e-3,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let counts = [
            ("n_rb", self.n_rb),
            ("subcarriers_per_rb", self.subcarriers_per_rb),
            ("symbols_per_subframe", self.symbols_per_subframe),
            ("mimo_layers", self.mimo_layers),
            ("iq_bits", self.iq_bits),
            ("antenna_ports", self.antenna_ports),
            ("transport_blocks", self.transport_blocks),
            ("ues_per_tti", self.ues_per_tti),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(CatalogError::Invalid(format!("{name} must be at least 1")));
        }
        for (name, v) in [
            ("tbs_dl_bits", self.tbs_dl_bits),
            ("sample_rate", self.sample_rate),
            ("tti_s", self.tti_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CatalogError::Invalid(format!("{name} must be positive")));
            }
        }
        if !(self.fapi_dl_bps >= 0.0) {
            return Err(CatalogError::Invalid("fapi_dl_bps must be non-negative".into()));
        }
        Ok(())
    }

    fn all_headers(&self) -> f64 {
        f64::from(self.hdr_pdcp_bytes + self.hdr_rlc_bytes + self.hdr_mac_bytes)
    }

    /// IP packets carried per TTI per transport block.
    pub fn ip_packets_per_tti(&self, ip_pkt_bytes: f64) -> f64 {
        self.tbs_dl_bits / ((ip_pkt_bytes + self.all_headers()) * 8.0)
    }

    pub fn pdsch_res(&self) -> f64 {
        let data_symbols = f64::from(self.symbols_per_subframe)
            - f64::from(self.ref_symbol_res) * f64::from(self.antenna_ports);
        f64::from(self.n_rb) * f64::from(self.subcarriers_per_rb) * data_symbols
    }
}

/// One virtualised RAN function in chain order (RRC first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnfProfile {
    pub index: u8,
    pub layer: String,
    /// Share of the full-stack processing time, in percent.
    pub processing_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitOption {
    pub id: SplitId,
    /// Location of each VNF, indexed like `Catalog::vnfs`.
    pub placement: Vec<Location>,
    pub delay_requirement_s: f64,
    pub multiplier_small: f64,
    pub multiplier_large: f64,
}

impl SplitOption {
    pub fn du_count(&self) -> usize {
        self.placement.iter().filter(|l| **l == Location::Du).count()
    }

    pub fn cu_count(&self) -> usize {
        self.placement.len() - self.du_count()
    }

    pub fn multiplier(&self, class: PacketClass) -> f64 {
        match class {
            PacketClass::Urllc => self.multiplier_small,
            PacketClass::Embb => self.multiplier_large,
        }
    }

    /// Every CU-placed VNF has all its predecessors at the CU as well.
    pub fn respects_chain(&self) -> bool {
        self.placement
            .windows(2)
            .all(|w| !(w[1] == Location::Cu && w[0] == Location::Du))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub radio: RadioConfig,
    pub vnfs: Vec<VnfProfile>,
    /// Processing share of the RU-resident FFT, in percent.
    pub ru_processing_percent: f64,
    pub splits: Vec<SplitOption>,
    /// Latency requirement of the fronthaul-only option O11.
    pub o11_delay_requirement_s: f64,
}

fn placement(cu_from_top: usize) -> Vec<Location> {
    (0..6).map(|g| if g < cu_from_top { Location::Cu } else { Location::Du }).collect()
}

impl Default for Catalog {
    fn default() -> Self {
        let vnfs = [
            ("RRC", 2.17),
            ("PDCP", 18.7),
            ("RLC", 0.91),
            ("MAC", 13.24),
            ("PHY-C", 49.28),
            ("PHY-B", 9.89),
        ]
        .iter()
        .enumerate()
        .map(|(i, (layer, z))| VnfProfile {
            index: i as u8 + 1,
            layer: (*layer).to_string(),
            processing_percent: *z,
        })
        .collect();
        let rows = [
            (SplitId::O1, 1, 10e-3, 1.0, 1.0),
            (SplitId::O2, 2, 1.5e-3, 1.0157, 1.0014),
            (SplitId::O4, 3, 1e-3, 1.0547, 1.0047),
            (SplitId::O6, 4, 250e-6, 1.0704, 1.0060),
            (SplitId::O8, 5, 250e-6, 6.6214, 6.2235),
            (SplitId::O9, 6, 250e-6, 7.6338, 7.1751),
        ];
        let splits = rows
            .iter()
            .map(|&(id, cu, d, small, large)| SplitOption {
                id,
                placement: placement(cu),
                delay_requirement_s: d,
                multiplier_small: small,
                multiplier_large: large,
            })
            .collect();
        Self {
            radio: RadioConfig::default(),
            vnfs,
            ru_processing_percent: 5.82,
            splits,
            o11_delay_requirement_s: 250e-6,
        }
    }
}

impl Catalog {
    pub fn validate(&self) -> Result<(), CatalogError> {
        self.radio.validate()?;
        let total: f64 =
            self.vnfs.iter().map(|v| v.processing_percent).sum::<f64>() + self.ru_processing_percent;
        if (total - 100.0).abs() > 0.05 {
            return Err(CatalogError::Invalid(format!(
                "processing fractions sum to {total}, expected 100"
            )));
        }
        for s in &self.splits {
            if !s.id.is_selectable() {
                return Err(CatalogError::NotSelectable(s.id.to_string()));
            }
            if s.placement.len() != self.vnfs.len() {
                return Err(CatalogError::Invalid(format!(
                    "split {} places {} VNFs, catalog has {}",
                    s.id,
                    s.placement.len(),
                    self.vnfs.len()
                )));
            }
            if !s.respects_chain() {
                return Err(CatalogError::Invalid(format!("split {} breaks the VNF chain", s.id)));
            }
            if s.multiplier_small < 1.0 || s.multiplier_large < 1.0 {
                return Err(CatalogError::Invalid(format!("split {} has a multiplier below 1", s.id)));
            }
            if !(s.delay_requirement_s > 0.0) {
                return Err(CatalogError::Invalid(format!("split {} needs a positive delay", s.id)));
            }
        }
        Ok(())
    }

    pub fn split(&self, id: SplitId) -> Result<&SplitOption, CatalogError> {
        self.splits
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| CatalogError::NotSelectable(id.to_string()))
    }

    pub fn overhead_multiplier(&self, id: SplitId, class: PacketClass) -> Result<f64, CatalogError> {
        Ok(self.split(id)?.multiplier(class))
    }

    pub fn placement_vector(&self, id: SplitId) -> Result<&[Location], CatalogError> {
        Ok(&self.split(id)?.placement)
    }

    pub fn delay_requirement(&self, id: SplitId) -> Result<f64, CatalogError> {
        match id {
            SplitId::O11 => Ok(self.o11_delay_requirement_s),
            _ => Ok(self.split(id)?.delay_requirement_s),
        }
    }

    /// Processing percentages of DU-placed and CU-placed VNFs for a split.
    pub fn processing_fractions(&self, id: SplitId) -> Result<(f64, f64), CatalogError> {
        let placement = self.placement_vector(id)?;
        let (mut du, mut cu) = (0.0, 0.0);
        for (vnf, loc) in self.vnfs.iter().zip(placement) {
            match loc {
                Location::Du => du += vnf.processing_percent,
                Location::Cu => cu += vnf.processing_percent,
            }
        }
        Ok((du, cu))
    }

    pub fn required_capacity(&self, id: SplitId, ip_pkt_bytes: f64) -> Result<f64, CatalogError> {
        required_capacity(id, &self.radio, ip_pkt_bytes)
    }
}

/// Midhaul/fronthaul bit rate demanded by a split, in bits per second.
pub fn required_capacity(id: SplitId, rc: &RadioConfig, ip_pkt_bytes: f64) -> Result<f64, CatalogError> {
    let per_tti = |payload_bytes: f64| {
        rc.ip_packets_per_tti(ip_pkt_bytes) * payload_bytes * f64::from(rc.transport_blocks) * 8.0
            / rc.tti_s
    };
    let pdcp = f64::from(rc.hdr_pdcp_bytes);
    let rlc = f64::from(rc.hdr_rlc_bytes);
    let mac = f64::from(rc.hdr_mac_bytes);
    match id {
        SplitId::O1 => Ok(per_tti(ip_pkt_bytes)),
        SplitId::O2 => Ok(per_tti(ip_pkt_bytes + pdcp)),
        SplitId::O4 => Ok(per_tti(ip_pkt_bytes + pdcp + rlc)),
        SplitId::O6 => Ok(per_tti(ip_pkt_bytes + pdcp + rlc + mac) + rc.fapi_dl_bps),
        SplitId::O8 => {
            let res = f64::from(rc.ues_per_tti) * rc.pdsch_res() + f64::from(rc.pdcch_res);
            Ok(res * f64::from(rc.iq_bits) * f64::from(rc.mimo_layers) / rc.tti_s)
        }
        SplitId::O9 => {
            let bits = f64::from(rc.subcarriers_per_rb)
                * f64::from(rc.n_rb)
                * f64::from(rc.symbols_per_subframe)
                * f64::from(rc.mimo_layers)
                * f64::from(rc.iq_bits);
            Ok(bits / rc.tti_s)
        }
        SplitId::O11 => Ok(rc.sample_rate * f64::from(rc.antenna_ports) * f64::from(rc.iq_bits)),
        other => Err(CatalogError::UnknownSplit(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn low_layer_capacities() {
        let rc = RadioConfig::default();
        let o9 = required_capacity(SplitId::O9, &rc, 128.0).unwrap();
        assert!(rel(o9, 12.0 * 100.0 * 14.0 * 2.0 * 32.0 / 1e-3) < 1e-15);
        assert!(rel(o9, 1.0752e9) < 1e-12);
        let o11 = required_capacity(SplitId::O11, &rc, 128.0).unwrap();
        assert!(rel(o11, 30.72e6 * 2.0 * 32.0) < 1e-15);
        let o8 = required_capacity(SplitId::O8, &rc, 128.0).unwrap();
        assert!(rel(o8, (2400.0 + 144.0) * 32.0 * 2.0 / 1e-3) < 1e-12);
    }

    #[test]
    fn o1_uses_footnote_packet_count() {
        let rc = RadioConfig::default();
        let ip: f64 = 75376.0 / (1509.0 * 8.0);
        assert!((ip - 6.244).abs() < 1e-3);
        let o1 = required_capacity(SplitId::O1, &rc, 1500.0).unwrap();
        assert!(rel(o1, ip * 1500.0 * 2.0 * 8.0 / 1e-3) < 1e-12);
        assert!((o1 / 1e6 - 149.9).abs() < 0.1);
    }

    #[test]
    fn unknown_splits_have_no_formula() {
        let rc = RadioConfig::default();
        for id in [SplitId::O3, SplitId::O5, SplitId::O7, SplitId::O10, SplitId::O12] {
            assert!(matches!(required_capacity(id, &rc, 128.0), Err(CatalogError::UnknownSplit(_))));
        }
    }

    #[test]
    fn capacity_grows_toward_lower_splits() {
        let rc = RadioConfig::default();
        for pkt in [128.0, 1500.0] {
            let order = [
                SplitId::O1,
                SplitId::O2,
                SplitId::O4,
                SplitId::O6,
                SplitId::O8,
                SplitId::O9,
                SplitId::O11,
            ];
            let caps: Vec<f64> =
                order.iter().map(|s| required_capacity(*s, &rc, pkt).unwrap()).collect();
            assert!(caps.windows(2).all(|w| w[0] <= w[1]), "{caps:?}");
        }
    }

    #[test]
    fn multipliers_and_placement() {
        let cat = Catalog::default();
        cat.validate().unwrap();
        assert_eq!(cat.overhead_multiplier(SplitId::O9, PacketClass::Urllc).unwrap(), 7.6338);
        assert_eq!(cat.overhead_multiplier(SplitId::O1, PacketClass::Urllc).unwrap(), 1.0);
        assert_eq!(cat.overhead_multiplier(SplitId::O1, PacketClass::Embb).unwrap(), 1.0);
        assert_eq!(cat.overhead_multiplier(SplitId::O6, PacketClass::Embb).unwrap(), 1.0060);
        for s in &cat.splits {
            assert!(s.respects_chain());
            if s.id != SplitId::O1 {
                assert!(s.multiplier_small > s.multiplier_large);
            }
        }
        assert!(cat.placement_vector(SplitId::O9).unwrap().iter().all(|l| *l == Location::Cu));
        let o1 = cat.placement_vector(SplitId::O1).unwrap();
        assert_eq!(o1[0], Location::Cu);
        assert!(o1[1..].iter().all(|l| *l == Location::Du));
        let o6 = cat.placement_vector(SplitId::O6).unwrap();
        let du: Vec<&str> = cat
            .vnfs
            .iter()
            .zip(o6)
            .filter(|(_, l)| **l == Location::Du)
            .map(|(v, _)| v.layer.as_str())
            .collect();
        assert_eq!(du, ["PHY-C", "PHY-B"]);
        assert!(cat.split(SplitId::O11).is_err());
    }

    #[test]
    fn processing_fraction_sums() {
        let cat = Catalog::default();
        let (du, cu) = cat.processing_fractions(SplitId::O6).unwrap();
        assert!((du - 59.17).abs() < 1e-9);
        assert!((cu - 35.02).abs() < 1e-9);
        let (du, cu) = cat.processing_fractions(SplitId::O9).unwrap();
        assert_eq!(du, 0.0);
        assert!((cu - 94.19).abs() < 1e-9);
    }

    #[test]
    fn split_ids_parse() {
        assert_eq!("O9".parse::<SplitId>().unwrap(), SplitId::O9);
        assert_eq!("o11".parse::<SplitId>().unwrap(), SplitId::O11);
        assert!("O13".parse::<SplitId>().is_err());
        assert_eq!(SplitId::O4.to_string(), "O4");
    }

    #[test]
    fn catalog_round_trips() {
        let cat = Catalog::default();
        let text = toml::to_string(&cat).unwrap();
        let back: Catalog = toml::from_str(&text).unwrap();
        assert_eq!(back, cat);
    }
}
