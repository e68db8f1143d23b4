use std::sync::Arc;

use nalgebra::Complex;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use nbcover::covers::{sample_cover, ModelKind, ModelSpec};
use nbcover::io::{
    fmt12, nonalon_csv, parse_automaton, parse_cover, parse_graph, read_catalog, trace_csv, write_automaton, write_catalog,
    write_cover, write_graph,
};
use nbcover::nblang::{fit_polyexponential, language_eigenvalues, nbwalk_count, CountAutomaton};
use nbcover::sidestep::{
    e_in_out, ensemble_traces, planted_model, sidestep_demo, typical_side_ensemble, MatrixModel, RegionQuery, Sampler,
};
use nbcover::spectra::{hashimoto, hashimoto_eigenvalues};
use nbcover::tangles::{enumerate_minimal_tangles, TangleQuery};
use nbcover::tracelab::{
    broder_shamir_c1, broder_shamir_exact, fit_expansion_table, mc_expected_trace, mc_nonalon_probability, mc_statistic,
    snbc_large_order_tail, with_threads, ExperimentPlan, Statistic, TraceRow, TraceTable,
};
use nbcover::walks::{enumerate_snbc, Walk};
use nbcover::{Error, Graph};

fn plan(n_grid: Vec<usize>, trials: usize) -> ExperimentPlan {
    ExperimentPlan {
        model: ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).unwrap(),
        n_grid,
        k_min: 1,
        k_max: 4,
        trials,
        master_seed: 17,
        nu: 2.5,
        r: 2,
    }
}

#[test]
fn degree_one_cover_has_the_base_trace() {
    let t = mc_expected_trace(&plan(vec![1], 20)).unwrap();
    let exact = hashimoto(&Graph::bouquet(2, 0)).power_traces(4);
    for k in 1..=4 {
        let row = t.get(1, k).unwrap();
        assert_eq!(row.mean, exact[k - 1] as f64);
        assert_eq!(row.stderr, 0.0);
    }
}

#[test]
fn reruns_and_thread_counts_agree() {
    let p = plan(vec![8, 16], 120);
    let a = with_threads(1, || trace_csv(&mc_statistic(&p, Statistic::CertifiedTrace, None).unwrap())).unwrap();
    let b = with_threads(3, || trace_csv(&mc_statistic(&p, Statistic::CertifiedTrace, None).unwrap())).unwrap();
    assert_eq!(a, b);
    let bad = ExperimentPlan { n_grid: vec![16, 8], ..p };
    assert!(matches!(bad.validate(), Err(Error::InvalidArgument(_))));
}

#[test]
fn exact_order_zero_probabilities() {
    let b = Graph::bouquet(1, 0);
    for n in 1..=6 {
        for k in 1..=n {
            let w = Walk::from_edges(&b, vec![0; k]).unwrap();
            assert_eq!(broder_shamir_exact(&b, &w, n).unwrap(), BigRational::new(BigInt::from(1), BigInt::from(n)));
        }
    }
    let fig8 = Graph::bouquet(2, 0);
    let w = Walk::from_edges(&fig8, vec![0, 2, 1, 3]).unwrap();
    assert!(matches!(broder_shamir_exact(&fig8, &w, 3), Err(Error::LengthExceedsDegree { .. })));
    // c1 is the 1/n^2 coefficient of the exact probability.
    for edges in [vec![0, 2], vec![0, 2, 1, 3], vec![0, 0, 2], vec![0, 0, 0]] {
        let w = Walk::from_edges(&fig8, edges).unwrap();
        let n = 100_000usize;
        let p = broder_shamir_exact(&fig8, &w, n).unwrap();
        let nn = BigRational::from_integer(BigInt::from(n));
        let scaled = ((p - nn.recip()) * nn.clone() * nn).to_f64().unwrap();
        let c1 = broder_shamir_c1(&fig8, &w).to_f64().unwrap();
        assert!((scaled - c1).abs() < 1e-3, "{scaled} vs {c1}");
    }
}

#[test]
fn expansion_recovers_synthetic_coefficients() {
    // f(k, n) = sum over SNBC walks of the exact order-zero probability times n.
    let b = Graph::bouquet(2, 0);
    let mut rows = Vec::new();
    let walks: Vec<Vec<Walk>> = (1..=3).map(|k| enumerate_snbc(&b, k).unwrap()).collect();
    for n in [40usize, 60, 80, 120, 160, 240] {
        for k in 1..=3 {
            let total: BigRational = walks[k - 1].iter().map(|w| broder_shamir_exact(&b, w, n).unwrap()).sum();
            let mean = (total * BigRational::from_integer(BigInt::from(n))).to_f64().unwrap();
            rows.push(TraceRow { n, k, mean, stderr: 0.0 });
        }
    }
    let est = fit_expansion_table(&TraceTable { rows, warnings: vec![] }, 3).unwrap();
    for k in 1..=3 {
        let c0: i128 = walks[k - 1].len() as i128;
        assert!((est.per_k[&k].coefficients[0] - c0 as f64).abs() < 1e-3 * c0.max(1) as f64, "k={k}");
    }
}

#[test]
fn nonalon_edge_cases() {
    let model = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).unwrap();
    let t = mc_nonalon_probability(&model, &[10], &[0.6], 50, 3, None).unwrap();
    assert!(t.rows.iter().all(|r| r.p_hat == 0.0));
    let one = mc_nonalon_probability(&model, &[10], &[0.0], 1, 3, None).unwrap();
    assert!(one.rows[0].p_hat == 0.0 || one.rows[0].p_hat == 1.0);
    let cycle = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(1, 0)).unwrap();
    assert!(matches!(mc_nonalon_probability(&cycle, &[10], &[0.1], 5, 3, None), Err(Error::NotRegularBase)));
    let csv = nonalon_csv(&t);
    assert!(csv.starts_with("n,epsilon,hits,p_hat,stderr\n10,0.6,0,0,0\n"));
}

#[test]
fn large_order_tail_vanishes_for_short_walks() {
    let model = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).unwrap();
    let r = snbc_large_order_tail(&model, 40, 3, 3, 40, 9, 1.0).unwrap();
    assert_eq!(r.mean, 0.0);
    assert!(r.within);
}

#[test]
fn language_counts_and_eigenvalues() {
    let b = Graph::bouquet(2, 0);
    assert_eq!(nbwalk_count(&b, 0, 0, 1).unwrap(), 1);
    for e in 0..4 {
        assert_eq!((0..4).map(|f| nbwalk_count(&b, e, f, 2).unwrap()).sum::<u128>(), 3);
    }
    let single = CountAutomaton::new(1, vec![vec![1]], 0, vec![0]).unwrap();
    let ev = language_eigenvalues(&single);
    assert_eq!(ev.len(), 1);
    assert!((ev[0].re - 1.0).abs() < 1e-12);
    let a = CountAutomaton::from_line_graph(&b, 0).unwrap();
    assert_eq!(parse_automaton(&write_automaton(&a)).unwrap(), a);
}

#[test]
fn polyexponential_fits() {
    let b = Graph::bouquet(2, 0);
    let traces = hashimoto(&b).power_traces(16);
    let samples: Vec<(usize, f64)> = (1..=16).map(|k| (k, traces[k - 1] as f64)).collect();
    let fit = fit_polyexponential(&samples, &hashimoto_eigenvalues(&b), 0).unwrap();
    assert!(fit.residual < 1e-6, "{}", fit.residual);
    let wrong: Vec<(usize, f64)> = (1..=16).map(|k| (k, 2f64.powf(k as f64 / 2.0))).collect();
    let fit = fit_polyexponential(&wrong, &[Complex::new(3.0, 0.0), Complex::new(1.0, 0.0)], 0).unwrap();
    assert!(fit.residual > 1e-3);
    assert!((fit.growth - 2f64.sqrt()).abs() < 0.1, "{}", fit.growth);
    assert!(matches!(fit_polyexponential(&samples[..3], &[Complex::new(3.0, 0.0)], 1), Err(Error::InsufficientGrid { .. })));
}

#[test]
fn matrix_model_regions() {
    let constant: Sampler = Arc::new(|n, _| vec![Complex::new(2.0, 0.0); n]);
    let m = MatrixModel::new(3.0, 5.0, vec![10], constant).unwrap();
    let whole = e_in_out(&m, 10, &RegionQuery::whole_plane(), 5, 0).unwrap();
    assert_eq!((whole.e_in, whole.e_out), (10.0, 0.0));
    let disc = RegionQuery::new(vec![(Complex::new(2.0, 0.0), 0.1)], vec![]).unwrap();
    assert_eq!(e_in_out(&m, 10, &disc, 5, 0).unwrap().e_out, 0.0);

    let typical = typical_side_ensemble(vec![20]);
    let region = RegionQuery::new(vec![(Complex::new(2.0, 0.0), 1e-9)], vec![(4.0, 5.0)]).unwrap();
    assert_eq!(e_in_out(&typical, 20, &region, 200, 1).unwrap().e_out, 0.0);
    assert_eq!(ensemble_traces(&typical, 20, 3, 10, 2).len(), 3);
}

#[test]
fn planted_constant_regime() {
    let model = planted_model(3.0, 5.0, 0, vec![(4.0, 0.5)], vec![100, 200, 400]).unwrap();
    let report = sidestep_demo(&model, 0, &[(Complex::new(4.0, 0.0), 0.5)], 0.5, 4000, 8).unwrap();
    for row in &report.rows {
        assert!((row.e_in[0].0 - 0.5).abs() < 5.0 * row.e_in[0].1.max(1e-3));
    }
    assert!(matches!(
        sidestep_demo(&model, 0, &[(Complex::new(4.0, 0.0), 0.5)], 0.5, 10, 8),
        Err(Error::InsufficientTrials { .. })
    ));
}

#[test]
fn files_round_trip() {
    let g = Graph::theta(1, 2, 3);
    assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
    assert!(matches!(parse_graph("graph 2\nedge 0 0 x\n"), Err(Error::Parse { line: 2, .. })));
    let cover = sample_cover(&ModelSpec::new(ModelKind::Permutation, g.clone()).unwrap(), 4, 2).unwrap();
    let (base_ref, assignment) = parse_cover(&write_cover(&cover, "theta.graph")).unwrap();
    assert_eq!(base_ref, "theta.graph");
    assert_eq!(assignment, cover.assignment);

    let dir = std::env::temp_dir().join(format!("nbcover-catalog-{}", std::process::id()));
    let cat = enumerate_minimal_tangles(&TangleQuery::new(2.0, 2).unwrap(), 5).unwrap();
    write_catalog(&dir, &cat).unwrap();
    assert_eq!(read_catalog(&dir).unwrap(), cat);
    std::fs::remove_dir_all(&dir).unwrap();

    assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
    assert_eq!(fmt12(2.9999999999999996), "3");
}
