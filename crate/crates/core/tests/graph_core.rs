mod common;

use nbcover::covers::{sample_cover, ModelKind, ModelSpec};
use nbcover::graph::check_morphism;
use nbcover::iso::{automorphism_count, find_isomorphism, IsoMode};
use nbcover::{Error, Graph, GraphBuilder, Morphism, MorphismKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn involution_must_reverse_orientation() {
    let loop1 = Graph::from_parts(1, &[(0, 0), (0, 0)], vec![1, 0]).unwrap();
    assert_eq!(loop1, Graph::bouquet(1, 0));
    let half = Graph::from_parts(1, &[(0, 0)], vec![0]).unwrap();
    assert_eq!(half, Graph::bouquet(0, 1));
    assert_eq!(Graph::from_parts(2, &[(0, 1)], vec![0]).unwrap_err(), Error::NotOrientationReversing(0));
    assert!(matches!(Graph::from_parts(2, &[(0, 1), (1, 0)], vec![1, 1]), Err(Error::NotInvolution(_))));
}

#[test]
fn degrees_orders_and_pruning() {
    let g = Graph::bouquet(2, 0);
    assert_eq!((g.vertex_count(), g.directed_edge_count(), g.degree(0).unwrap()), (1, 4, 4));
    assert_eq!(Graph::bouquet(0, 3).degree(0).unwrap(), 3);
    assert_eq!(Graph::bouquet(0, 0).order(), -1);
    assert_eq!(Graph::dipole(3).order(), 1);
    assert_eq!(Graph::bouquet(4, 0).order(), 3);
    assert_eq!(Graph::path(4).order(), -1);
    assert!(Graph::cycle(5).is_pruned());
    assert!(!Graph::bouquet(0, 1).is_pruned());
    assert!(Graph::bouquet(2, 0).is_pruned());
    assert_eq!(Graph::path(3).prune().vertex_count(), 0);

    // A triangle with a pendant path of length 2.
    let mut b = GraphBuilder::new(3);
    b.add_edge(0, 1);
    b.add_edge(1, 2);
    b.add_edge(2, 0);
    let tip = b.add_vertex();
    b.add_path(0, tip, 2);
    let p = b.build().prune();
    assert!(find_isomorphism(&p, &Graph::cycle(3), IsoMode::Plain).unwrap().is_some());
}

#[test]
fn morphism_kinds() {
    let base = Graph::bouquet(2, 0);
    let cover = sample_cover(&ModelSpec::new(ModelKind::Permutation, base.clone()).unwrap(), 2, 4).unwrap();
    assert_eq!(check_morphism(&cover.total, &base, &cover.projection).unwrap(), MorphismKind::Covering(Some(2)));
    assert_eq!(check_morphism(&base, &base, &Morphism::identity(&base)).unwrap(), MorphismKind::Covering(Some(1)));

    // The lifts of one loop form an étale subgraph that is not a covering.
    let mut fig8_cover = sample_cover(&ModelSpec::new(ModelKind::Permutation, base.clone()).unwrap(), 6, 9).unwrap();
    let f1_lifts: Vec<usize> = (0..6).map(|i| fig8_cover.edge(0, i)).collect();
    let (sub, inc) = fig8_cover.total.edge_induced(&f1_lifts).unwrap();
    fig8_cover.projection = inc.then(&fig8_cover.projection);
    assert_eq!(check_morphism(&sub, &base, &fig8_cover.projection).unwrap(), MorphismKind::Etale);
}

#[test]
fn cycle_automorphisms_over_a_loop() {
    for k in 1..=7 {
        let mut b = GraphBuilder::new(k);
        for i in 0..k {
            b.add_edge(i, (i + 1) % k);
        }
        let g = b.build();
        let p = Morphism { vertex_map: vec![0; k], edge_map: (0..2 * k).map(|e| e % 2).collect() };
        assert_eq!(automorphism_count(&g, Some(&p)), k as u64);
        assert_eq!(automorphism_count(&g, None), 2 * k as u64);
    }
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    any::<u64>().prop_map(|s| common::random_graph(&mut ChaCha8Rng::seed_from_u64(s), 7))
}

proptest! {
    #[test]
    fn pruning_is_idempotent(g in arb_graph()) {
        let p = g.prune();
        prop_assert!(p.is_pruned());
        prop_assert_eq!(p.prune(), p.clone());
        prop_assert!(p.edge_count() <= g.edge_count());
    }

    #[test]
    fn degrees_sum_to_directed_edges(g in arb_graph()) {
        let total: usize = g.degrees().iter().sum();
        prop_assert_eq!(total, g.directed_edge_count());
        let primes: usize = g.degrees_prime().iter().sum();
        prop_assert_eq!(primes, g.directed_edge_count() + g.half_loop_count());
    }

    #[test]
    fn order_is_additive(a in arb_graph(), b in arb_graph()) {
        prop_assert_eq!(a.disjoint_union(&b).order(), a.order() + b.order());
        prop_assert_eq!(a.disjoint_union(&b).component_count(), a.component_count() + b.component_count());
    }

    #[test]
    fn relabeling_gives_an_isomorphic_graph(g in arb_graph(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..g.vertex_count()).collect();
        perm.shuffle(&mut rng);
        let edges: Vec<(usize, usize)> = (0..g.directed_edge_count()).map(|e| (perm[g.tail(e)], perm[g.head(e)])).collect();
        let h = Graph::from_parts(g.vertex_count(), &edges, g.involution().to_vec()).unwrap();
        prop_assert!(find_isomorphism(&g, &h, IsoMode::Plain).unwrap().is_some());
    }
}
