//! Seeded random instances small enough for [`crate::solve_exhaustive`].
//!
//! Topology: a CU `c` feeding two aggregation nodes `m1`, `m2`, each linked
//! to every vDU node. With a two-hop limit every vDU has exactly two paths.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicenc_core::catalog::SplitId;
use slicenc_core::delay::ProcessingModel;
use slicenc_core::scenario::{Roles, Scenario, ScenarioDoc, VduSpec};
use slicenc_core::topology::{Link, TransportNode};

const CAPACITIES: [f64; 3] = [1.2e9, 2.4e9, 4.8e9];

fn node(rng: &mut ChaCha8Rng, id: &str) -> TransportNode {
    TransportNode {
        id: id.into(),
        capacity_bps: *CAPACITIES.choose(rng).expect("non-empty"),
        latency_s: rng.random_range(5.0e-6..80.0e-6),
    }
}

/// A random instance with at most `max_vdus` vDUs and at most 5 URLLC UEs each.
pub fn tiny(seed: u64, max_vdus: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_vdus = rng.random_range(1..=max_vdus.max(1));
    let mut nodes = vec![node(&mut rng, "c"), node(&mut rng, "m1"), node(&mut rng, "m2")];
    let mut links = Vec::new();
    for m in ["m1", "m2"] {
        links.push(Link { a: "c".into(), b: m.into(), distance_m: rng.random_range(500.0..15_000.0) });
    }
    let mut vdus = Vec::new();
    for i in 1..=n_vdus {
        let id = format!("d{i}");
        nodes.push(node(&mut rng, &id));
        for m in ["m1", "m2"] {
            links.push(Link { a: m.into(), b: id.clone(), distance_m: rng.random_range(500.0..15_000.0) });
        }
        let demand = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(10.0e6..400.0e6) };
        vdus.push(VduSpec {
            id: i as u32,
            node: id,
            ru: None,
            embb_percent: None,
            embb_demand_bps: Some(demand),
            urllc_cap: Some(rng.random_range(0..=5)),
        });
    }

    let mut splits: Vec<SplitId> = SplitId::SELECTABLE.to_vec();
    let keep = rng.random_range(1..=3);
    let mut chosen = Vec::new();
    while chosen.len() < keep {
        let i = rng.random_range(0..splits.len());
        chosen.push(splits.remove(i));
    }
    chosen.sort();

    let mut doc = ScenarioDoc::parse("name = \"tiny\"\nroles = { cu = \"c\" }\nnodes = []").expect("template parses");
    doc.name = format!("tiny-{seed}");
    doc.hop_limit = Some(2);
    doc.splits = chosen;
    doc.roles = Roles { cu: "c".into(), dus: Vec::new() };
    doc.nodes = nodes;
    doc.links = links;
    doc.vdus = vdus;
    doc.slices.urllc.delay_sla_s = rng.random_range(0.1e-3..1.0e-3);
    doc.slices.urllc.burst_bits = rng.random_range(1024.0..16384.0);
    doc.economics.gamma = rng.random_range(0.02..0.6);
    if rng.random_bool(0.5) {
        doc.processing = Some(ProcessingModel {
            reference_time_s: rng.random_range(50e-6..400e-6),
            reference_rate_bps: 1e9,
            du_cores: 16,
            cu_cores: 32,
        });
    }
    Scenario::from_doc(doc).expect("generated instance is valid")
}
