mod common;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use nbcover::bgraph::{BGraph, OrderedBGraph};
use nbcover::covers::{
    count_ordered_embeddings, expected_ordered_embeddings_exact, falling_factorial, fibre_counts, occurs_in_model, sample_cover,
    CoordinatizedCover, ModelKind, ModelSpec, Occurrence, PermutationAssignment,
};
use nbcover::spectra::{
    adjacency_to_hashimoto_bound, alon_threshold, count_beyond, hashimoto, hashimoto_eigenvalues, hashimoto_to_adjacency_bound,
    ihara_check, mu1, new_adjacency_spectrum, new_old_spectrum,
};
use nbcover::walks::nb_traces;
use nbcover::{Error, Graph, GraphBuilder, Morphism};

/// The walk of the theta example, its visited subgraph and labels over the figure-eight.
fn theta_example() -> (Graph, Morphism) {
    let mut b = GraphBuilder::new(8);
    // (tail, head, base edge): f1 = 0, f2 = 2, reverses 1 and 3.
    let labelled = [(0, 1, 0), (1, 2, 0), (2, 3, 2), (3, 4, 0), (4, 5, 2), (5, 6, 2), (6, 2, 1), (0, 7, 1), (7, 4, 2)];
    let mut edge_map = Vec::new();
    for (t, h, f) in labelled {
        b.add_edge(t, h);
        edge_map.extend([f, f ^ 1]);
    }
    (b.build(), Morphism { vertex_map: vec![0; 8], edge_map })
}

#[test]
fn theta_example_fibres_and_expectation() {
    let base = Graph::bouquet(2, 0);
    let (g, p) = theta_example();
    let s = BGraph::new(g.clone(), p.clone(), &base).unwrap();
    assert!(s.is_etale(&base).unwrap());
    let f = fibre_counts(&p, &base);
    assert_eq!((f.a[0], f.a[2], f.b[0]), (5, 4, 8));
    let ordered = OrderedBGraph::with_id_order(g, Some(p));
    for n in 8..12 {
        let expected = expected_ordered_embeddings_exact(&ordered, &base, n, ModelKind::Permutation).unwrap();
        let num = falling_factorial(n, 8);
        let den = falling_factorial(n, 5) * falling_factorial(n, 4);
        assert_eq!(expected, BigRational::new(num, den));
    }
}

#[test]
fn single_edge_expectation_is_n_minus_one() {
    let base = Graph::bouquet(2, 0);
    let g = Graph::path(1);
    let p = Morphism { vertex_map: vec![0, 0], edge_map: vec![0, 1] };
    let s = OrderedBGraph::with_id_order(g, Some(p));
    for n in 1..=5 {
        let exact = expected_ordered_embeddings_exact(&s, &base, n, ModelKind::Permutation).unwrap();
        assert_eq!(exact, BigRational::from_integer(BigInt::from(n as i64 - 1)));
        let covers = common::all_covers(&base, n);
        let total: u64 = covers.iter().map(|c| count_ordered_embeddings(&s, c).unwrap()).sum();
        assert_eq!(BigRational::new(total.into(), covers.len().into()), exact);
    }
}

#[test]
fn sampled_covers_respect_their_models() {
    let inv_base = Graph::bouquet(0, 3);
    let c = sample_cover(&ModelSpec::new(ModelKind::PermInvolutionEven, inv_base).unwrap(), 4, 3).unwrap();
    for e in 0..3 {
        let s = &c.assignment.sigma[e];
        assert!((0..4).all(|i| s[i] != i && s[s[i]] == i));
    }
    assert!(matches!(ModelSpec::new(ModelKind::Cycle, Graph::bouquet(0, 1)), Err(Error::HalfLoopsForbidden(_))));
    let c = sample_cover(&ModelSpec::new(ModelKind::Cycle, Graph::bouquet(2, 0)).unwrap(), 7, 3).unwrap();
    for e in [0, 2] {
        let s = &c.assignment.sigma[e];
        let mut i = s[0];
        let mut len = 1;
        while i != 0 {
            i = s[i];
            len += 1;
        }
        assert_eq!(len, 7);
    }
    assert!(matches!(sample_cover(&ModelSpec::new(ModelKind::PermInvolutionOdd, Graph::bouquet(0, 3)).unwrap(), 4, 0), Err(Error::ParityMismatch { .. })));
}

#[test]
fn occurrence_of_half_loops_and_short_cycles() {
    let base = Graph::bouquet(1, 1);
    let half = BGraph::new(Graph::bouquet(0, 1), Morphism { vertex_map: vec![0], edge_map: vec![2] }, &base).unwrap();
    let perm = ModelSpec::new(ModelKind::PermInvolutionOdd, base.clone()).unwrap();
    let even = ModelSpec::new(ModelKind::PermInvolutionEven, base).unwrap();
    assert_eq!(occurs_in_model(&half, &perm).unwrap(), Occurrence::Yes);
    assert_eq!(occurs_in_model(&half, &even).unwrap(), Occurrence::No);
    let fig8 = Graph::bouquet(2, 0);
    let short = BGraph::new(Graph::bouquet(1, 0), Morphism { vertex_map: vec![0], edge_map: vec![0, 1] }, &fig8).unwrap();
    assert_eq!(occurs_in_model(&short, &ModelSpec::new(ModelKind::Cycle, fig8.clone()).unwrap()).unwrap(), Occurrence::No);
    assert_eq!(occurs_in_model(&short, &ModelSpec::new(ModelKind::Permutation, fig8).unwrap()).unwrap(), Occurrence::Yes);
}

#[test]
fn hashimoto_examples() {
    let mut h = hashimoto_eigenvalues(&Graph::bouquet(2, 0));
    h.sort_by(|a, b| b.re.total_cmp(&a.re));
    for (z, want) in h.iter().zip([3.0, 1.0, 1.0, -1.0]) {
        assert!((z.re - want).abs() < 1e-9 && z.im.abs() < 1e-9);
    }
    assert_eq!(hashimoto(&Graph::cycle(3)).power_traces(3)[2], 6);
    assert!(hashimoto(&Graph::bouquet(0, 1)).rows().iter().all(|r| r.iter().all(|&x| x == 0)));
    assert!((mu1(&Graph::cycle(7)) - 1.0).abs() < 1e-9);
    assert!((mu1(&Graph::bouquet(3, 0)) - 5.0).abs() < 1e-9);
    assert!((mu1(&Graph::dipole(4)) - 3.0).abs() < 1e-9);
}

#[test]
fn new_spectrum_edge_cases() {
    let base = Graph::dipole(3);
    let one = CoordinatizedCover::new(&base, PermutationAssignment::identity(&base, 1)).unwrap();
    assert!(new_adjacency_spectrum(&one, true).unwrap().2.is_empty());
    let two = CoordinatizedCover::new(&base, PermutationAssignment::identity(&base, 2)).unwrap();
    let report = new_old_spectrum(&two).unwrap();
    let mut expect = vec![-3.0, 3.0];
    expect.sort_by(f64::total_cmp);
    assert_eq!(report.adjacency_new.len(), 2);
    for (x, y) in report.adjacency_new.iter().zip(&expect) {
        assert!((x - y).abs() < 1e-9);
    }
    assert_eq!(count_beyond(&report.adjacency_new, alon_threshold(3) + 0.1), 2);
    assert_eq!(count_beyond(&[3.47], alon_threshold(4) + 0.01), 0);
    assert_eq!(count_beyond(&[3.48], alon_threshold(4) + 0.01), 1);
}

#[test]
fn bound_conversions_round_trip() {
    assert!((hashimoto_to_adjacency_bound(4, 2.0).unwrap() - 3.5).abs() < 1e-12);
    assert!((hashimoto_to_adjacency_bound(4, 3.0).unwrap() - 4.0).abs() < 1e-12);
    for d in 3..12 {
        let root = ((d - 1) as f64).sqrt();
        assert!((hashimoto_to_adjacency_bound(d, root).unwrap() - 2.0 * root).abs() < 1e-12);
        for lambda in [2.0 * root + 0.3, d as f64 - 0.1] {
            let mu = adjacency_to_hashimoto_bound(d, lambda).unwrap();
            assert!((hashimoto_to_adjacency_bound(d, mu).unwrap() - lambda).abs() < 1e-10);
        }
    }
}

fn arb_cover() -> impl Strategy<Value = CoordinatizedCover> {
    (0usize..6, 2usize..9, any::<u64>()).prop_filter_map("parity", |(kind, n, seed)| {
        let kind = ModelKind::ALL[kind];
        let base = if kind.allows_half_loops() { Graph::bouquet(1, 1) } else { Graph::theta(1, 1, 2) };
        kind.check_n(n).ok()?;
        sample_cover(&ModelSpec::new(kind, base).unwrap(), n, seed).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covers_are_coverings_with_exact_traces(c in arb_cover()) {
        let n = c.assignment.n;
        prop_assert_eq!(
            nbcover::graph::check_morphism(&c.total, &c.base, &c.projection).unwrap(),
            nbcover::MorphismKind::Covering(Some(n))
        );
        let traces = nb_traces(&c.total, 6);
        let dense = hashimoto(&c.total).power_traces(6);
        for k in 0..6 {
            prop_assert_eq!(traces[k] as i128, dense[k]);
        }
        let (_, _, new) = new_adjacency_spectrum(&c, true).unwrap();
        prop_assert_eq!(new.len(), (n - 1) * c.base.vertex_count());
    }

    #[test]
    fn ihara_holds_on_random_graphs(seed in any::<u64>()) {
        use rand::SeedableRng;
        let g = common::random_graph(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), 6);
        let o = ihara_check(&g).unwrap();
        prop_assert!(o.holds);
    }
}
