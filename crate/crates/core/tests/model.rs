use proptest::prelude::*;
use slicenc_core::catalog::{required_capacity, Catalog, Location, PacketClass, RadioConfig, SplitId};
use slicenc_core::economics::{deployment_cost, gamma, profit, EconParams};
use slicenc_core::topology::{propagation_delay, weights_to_shares, Link, SliceKey, Topology, TransportNode};

#[test]
fn placements_respect_the_function_chain() {
    let c = Catalog::default();
    for o in &c.splits {
        assert!(o.respects_chain(), "{}", o.id);
        let p = c.placement_vector(o.id).unwrap();
        for w in p.windows(2) {
            assert!(!(w[0] == Location::Du && w[1] == Location::Cu));
        }
    }
}

#[test]
fn lower_splits_need_more_capacity() {
    let rc = RadioConfig::default();
    let caps: Vec<f64> = SplitId::ALL.iter().filter_map(|id| required_capacity(*id, &rc, 1500.0).ok()).collect();
    assert!(caps.len() >= 7);
    assert!(caps.windows(2).all(|w| w[0] <= w[1]), "{caps:?}");
}

#[test]
fn small_packets_carry_more_overhead() {
    let c = Catalog::default();
    for o in c.splits.iter().filter(|o| o.multiplier_large > 1.0) {
        assert!(
            c.overhead_multiplier(o.id, PacketClass::Urllc).unwrap() > c.overhead_multiplier(o.id, PacketClass::Embb).unwrap(),
            "{}",
            o.id
        );
    }
}

fn ring() -> Topology {
    let ids = ["c", "a", "b", "d"];
    let nodes = ids.iter().map(|i| TransportNode { id: (*i).into(), capacity_bps: 1e9, latency_s: 1e-5 }).collect();
    let link = |a: &str, b: &str, m: f64| Link { a: a.into(), b: b.into(), distance_m: m };
    Topology::new(nodes, vec![link("c", "a", 1000.0), link("c", "b", 2000.0), link("a", "d", 300.0), link("b", "d", 50.0)])
        .unwrap()
}

#[test]
fn path_enumeration_is_stable() {
    let t = ring();
    let first = t.enumerate_paths(0, 3, None).unwrap();
    assert_eq!(first.len(), 2);
    for _ in 0..10 {
        assert_eq!(ring().enumerate_paths(0, 3, None).unwrap(), first);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn shares_sum_to_one(w in prop::collection::vec(0.0f64..100.0, 1..12)) {
        prop_assume!(w.iter().sum::<f64>() > 0.0);
        let s = weights_to_shares(&w).unwrap();
        prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn propagation_adds_over_concatenation(
        a in prop::collection::vec(0.0f64..2e4, 0..6), b in prop::collection::vec(0.0f64..2e4, 0..6),
    ) {
        let speed = 2e8;
        let joined: Vec<f64> = a.iter().chain(&b).copied().collect();
        let whole = propagation_delay(&joined, speed);
        let parts = propagation_delay(&a, speed) + propagation_delay(&b, speed);
        prop_assert!((whole - parts).abs() <= 1e-15);
    }

    #[test]
    fn node_totals_add_the_shares(shares in prop::collection::vec(0.0f64..0.2, 1..5)) {
        let t = ring();
        let mut table = slicenc_core::topology::ShareTable::new();
        for (i, s) in shares.iter().enumerate() {
            table.set(1, SliceKey { slice: PacketClass::Urllc, vdu: i as u32 + 1 }, *s);
            table.set(2, SliceKey { slice: PacketClass::Embb, vdu: i as u32 + 1 }, 0.1);
        }
        let sum: f64 = shares.iter().sum();
        prop_assert!((table.node_total(1) - sum).abs() <= 1e-12);
        prop_assert!(table.node_total(1) <= 1.0);
        let k = SliceKey { slice: PacketClass::Urllc, vdu: 1 };
        prop_assert_eq!(table.allocated_rate(&t, 1, k), shares[0] * 1e9);
    }

    #[test]
    fn gamma_scales_with_vdus_and_inversely_with_break_even(
        u in 1u32..50, g in 1u32..10, eta in 0.01f64..1.0, zeta in 0.01f64..1.0, f_max in 1u32..1000,
    ) {
        let base = gamma(u, g, eta, zeta, f_max);
        prop_assert!((gamma(2 * u, g, eta, zeta, f_max) - 2.0 * base).abs() <= 1e-12 * base.abs().max(1.0));
        prop_assert!((gamma(u, g, eta, zeta, 2 * f_max) - base / 2.0).abs() <= 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn profit_grows_with_admission(
        admitted in prop::collection::vec(0u32..100, 1..5), extra in 1u32..20, which in 0usize..5, g in 0.01f64..1.0,
    ) {
        let econ = EconParams { gamma: g, ..EconParams::default() };
        let c = Catalog::default();
        let placements: Vec<&[Location]> =
            admitted.iter().map(|_| c.placement_vector(SplitId::O6).unwrap()).collect();
        let before = profit(&admitted, &placements, &econ);
        let mut more = admitted.clone();
        let i = which % more.len();
        more[i] += extra;
        prop_assert!(profit(&more, &placements, &econ) >= before);
    }

    #[test]
    fn equal_unit_costs_ignore_placement(picks in prop::collection::vec(0usize..6, 1..5)) {
        let econ = EconParams { eta: 1.0, ..EconParams::default() };
        let c = Catalog::default();
        let chosen: Vec<&[Location]> =
            picks.iter().map(|i| c.placement_vector(SplitId::SELECTABLE[*i]).unwrap()).collect();
        let all_du: Vec<&[Location]> = picks.iter().map(|_| c.placement_vector(SplitId::O1).unwrap()).collect();
        prop_assert_eq!(deployment_cost(&chosen, &econ), deployment_cost(&all_du, &econ));
    }
}
