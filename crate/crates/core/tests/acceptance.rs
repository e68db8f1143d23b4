//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use nalgebra::Complex;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nbcover::bgraph::{BGraph, OrderedBGraph};
use nbcover::covers::{count_ordered_embeddings, expected_ordered_embeddings_exact, sample_cover, ModelKind, ModelSpec};
use nbcover::io::{nonalon_csv, trace_csv};
use nbcover::iso::automorphism_count;
use nbcover::nblang::certified_trace;
use nbcover::sidestep::{ensemble_traces, planted_model, sidestep_demo, typical_side_ensemble, typical_side_expected_trace};
use nbcover::spectra::{hashimoto, mu1, new_adjacency_spectrum, ihara_check};
use nbcover::tangles::{
    enumerate_minimal_tangles, enumerate_pruned_connected, has_tangles, mu1_order_extremes, tau_tang_formula, TangleQuery,
    TangleVerdict, TauVariant,
};
use nbcover::tracelab::{
    broder_shamir_exact, broder_shamir_oracle, divisor_trace_sum, mc_expected_trace, mc_nonalon_probability, with_threads,
    ExperimentPlan,
};
use nbcover::walks::{enumerate_snbc, nb_traces, snbc_counts_by_order};
use nbcover::{Graph, GraphBuilder, Morphism};

use common::{adjacency_trace, all_covers, distinct_images, etale_bgraphs, random_graph};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    o.detail = format!("{} [{:.1}s]", o.detail, took.as_secs_f64());
    if let Some(l) = limit {
        if took > l {
            o.pass = false;
            o.detail.push_str(&format!(" exceeds {}s", l.as_secs()));
        }
    }
    o
}

fn ihara() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut held, mut worst) = (0, 0.0f64);
    let (mut with_half, mut with_loops, mut with_multi) = (0, 0, 0);
    for _ in 0..200 {
        let g = random_graph(&mut rng, 10);
        with_half += usize::from(g.has_half_loops());
        with_loops += usize::from((0..g.directed_edge_count()).any(|e| g.is_whole_loop(e)));
        with_multi += usize::from(g.adjacency_counts().iter().enumerate().any(|(i, r)| {
            r.iter().enumerate().any(|(j, &c)| if i == j { c > 2 } else { c > 1 })
        }));
        let o = ihara_check(&g).expect("within bound");
        worst = worst.max(o.max_abs_residual);
        held += usize::from(o.holds && o.max_abs_residual < 1e-8);
    }
    let spans = with_half > 0 && with_loops > 0 && with_multi > 0;
    outcome(
        held == 200 && spans,
        format!("{held}/200 hold, max relative residual {worst:e}; half-loops {with_half}, whole-loops {with_loops}, multi-edges {with_multi}"),
    )
}

fn trace_walk() -> Outcome {
    let (mut graphs, mut bad) = (0, 0);
    for v in 1..=6 {
        for orbits in 1..=10 {
            for g in nbcover::tangles::enumerate_connected_graphs(v, orbits, 0, true) {
                if g.directed_edge_count() > 10 {
                    continue;
                }
                graphs += 1;
                let tr = hashimoto(&g).power_traces(8);
                for k in 1..=8 {
                    if tr[k - 1] != nbcover::walks::for_each_snbc(&g, k, u64::MAX, |_| {}).expect("unbounded") as i128 {
                        bad += 1;
                    }
                }
            }
        }
    }
    outcome(bad == 0 && graphs > 0, format!("{graphs} connected graphs with <= 10 directed edges, {bad} mismatches"))
}

fn bases_for(kind: ModelKind) -> Vec<Graph> {
    if kind.allows_half_loops() {
        vec![Graph::bouquet(1, 1), Graph::bouquet(0, 3), Graph::bouquet(2, 1)]
    } else {
        vec![Graph::bouquet(2, 0), Graph::dipole(3), Graph::theta(1, 2, 2)]
    }
}

fn new_old() -> Outcome {
    let mut failures = Vec::new();
    let mut worst_sum = 0.0f64;
    for i in 0..100 {
        let kind = ModelKind::ALL[i % 6];
        let bases = bases_for(kind);
        let base = bases[(i / 6) % bases.len()].clone();
        let mut n = 2 + (i * 7) % 11;
        if kind.check_n(n).is_err() {
            n += 1;
        }
        let model = ModelSpec::new(kind, base.clone()).expect("model");
        let cover = sample_cover(&model, n, 1000 + i as u64).expect("sample");
        let (all, old, new) = match new_adjacency_spectrum(&cover, true) {
            Ok(x) => x,
            Err(e) => {
                failures.push(format!("{kind} n={n}: {e}"));
                continue;
            }
        };
        let mut merged: Vec<f64> = old.iter().chain(&new).copied().collect();
        merged.sort_by(f64::total_cmp);
        if merged.len() != all.len() || merged.iter().zip(&all).any(|(a, b)| (a - b).abs() > 1e-7) {
            failures.push(format!("{kind} n={n}: old+new differs from full spectrum"));
        }
        for k in 1..=6 {
            let s: f64 = new.iter().map(|x| x.powi(k as i32)).sum();
            let target = (adjacency_trace(&cover.total, k) - adjacency_trace(&base, k)) as f64;
            worst_sum = worst_sum.max((s - target).abs());
            if (s - target).abs() > 1e-6 {
                failures.push(format!("{kind} n={n} k={k}: power sum {s} vs {target}"));
            }
        }
    }
    outcome(failures.is_empty(), format!("100 covers, max power-sum error {worst_sum:e}; {}", failures.join("; ")))
}

fn broder_shamir() -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    for loops in [1usize, 2] {
        let b = Graph::bouquet(loops, 0);
        for n in 1..=5 {
            for k in 1..=4.min(n) {
                for w in enumerate_snbc(&b, k).expect("small") {
                    let exact = broder_shamir_exact(&b, &w, n).expect("exact");
                    let oracle = broder_shamir_oracle(&b, &w, n).expect("oracle");
                    checked += 1;
                    if exact != oracle {
                        bad.push(format!("d={} n={n} walk {:?}", 2 * loops, w.edges));
                    }
                    if loops == 1 && exact != BigRational::new(BigInt::from(1), BigInt::from(n)) {
                        bad.push(format!("d=2 n={n} k={k} is not 1/n"));
                    }
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} (walk, n) pairs agree exactly; {}", bad.join("; ")))
}

fn permutation_expectation() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for loops in [1usize, 2] {
        let base = Graph::bouquet(loops, 0);
        let shapes: Vec<OrderedBGraph> = etale_bgraphs(&base, 4)
            .into_iter()
            .map(|s| OrderedBGraph::with_id_order(s.graph, Some(s.projection)))
            .collect();
        for n in 1..=4 {
            let covers = all_covers(&base, n);
            for s in &shapes {
                let total: u64 = covers.iter().map(|c| count_ordered_embeddings(s, c).expect("count")).sum();
                let oracle = BigRational::new(BigInt::from(total), BigInt::from(covers.len()));
                let exact = expected_ordered_embeddings_exact(s, &base, n, ModelKind::Permutation).expect("exact");
                checked += 1;
                if oracle != exact {
                    bad.push(format!("B=bouquet({loops},0) n={n} S={}: {oracle} vs {exact}", s.key()));
                }
            }
        }
    }
    // Monte-Carlo agreement at n = 8 for the shapes with at most two edges over bouquet(2,0).
    let base = Graph::bouquet(2, 0);
    let model = ModelSpec::new(ModelKind::Permutation, base.clone()).expect("model");
    let small: Vec<OrderedBGraph> = etale_bgraphs(&base, 2)
        .into_iter()
        .map(|s| OrderedBGraph::with_id_order(s.graph, Some(s.projection)))
        .collect();
    let covers: Vec<_> = (0..10_000u64).map(|t| sample_cover(&model, 8, 77_000 + t).expect("sample")).collect();
    let mut worst_z = 0.0f64;
    for s in &small {
        let vals: Vec<f64> = covers.iter().map(|c| count_ordered_embeddings(s, c).expect("count") as f64).collect();
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let sd = (vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt() / m.sqrt();
        let exact = expected_ordered_embeddings_exact(s, &base, 8, ModelKind::Permutation).expect("exact");
        let exact = num_traits::ToPrimitive::to_f64(&exact).expect("finite");
        let z = if sd > 0.0 { (mean - exact).abs() / sd } else if (mean - exact).abs() < 1e-12 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
    }
    outcome(
        bad.is_empty() && worst_z <= 4.0,
        format!("{checked} exhaustive checks, {} Monte-Carlo shapes with max |z| {worst_z:.2}; {}", small.len(), bad.join("; ")),
    )
}

fn cycle_over_loop(k: usize) -> BGraph {
    let mut b = GraphBuilder::new(k);
    for i in 0..k {
        b.add_edge(i, (i + 1) % k);
    }
    let g = b.build();
    let edge_map = (0..g.directed_edge_count()).map(|e| e % 2).collect();
    BGraph { projection: Morphism { vertex_map: vec![0; k], edge_map }, graph: g }
}

fn automorphisms() -> Outcome {
    let mut pairs = Vec::new();
    let loop_base = Graph::bouquet(1, 0);
    let loop_model = ModelSpec::new(ModelKind::Permutation, loop_base).expect("model");
    for k in 1..=6 {
        for (j, n) in [6usize, 8, 12].into_iter().enumerate() {
            let cover = sample_cover(&loop_model, n, (k * 10 + j) as u64).expect("sample");
            pairs.push((cycle_over_loop(k), cover));
        }
    }
    let fig8 = Graph::bouquet(2, 0);
    let model = ModelSpec::new(ModelKind::Permutation, fig8.clone()).expect("model");
    let shapes = etale_bgraphs(&fig8, 3);
    let mut i = 0;
    while pairs.len() < 50 {
        let s = shapes[(i * 13) % shapes.len()].clone();
        pairs.push((s, sample_cover(&model, 6 + i % 3, 500 + i as u64).expect("sample")));
        i += 1;
    }
    let mut bad = 0;
    let mut max_aut = 0;
    for (s, cover) in &pairs {
        let ordered = OrderedBGraph::with_id_order(s.graph.clone(), Some(s.projection.clone()));
        let lhs = count_ordered_embeddings(&ordered, cover).expect("count");
        let aut = automorphism_count(&s.graph, Some(&s.projection));
        max_aut = max_aut.max(aut);
        if lhs != aut * distinct_images(s, cover) {
            bad += 1;
        }
    }
    outcome(bad == 0 && max_aut >= 6, format!("{} pairs, {bad} mismatches, largest automorphism group {max_aut}", pairs.len()))
}

fn mu1_order() -> Outcome {
    let graphs = match enumerate_pruned_connected(6) {
        Ok(g) => g,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut violations = 0;
    let mut no_whole_violations = 0;
    for g in &graphs {
        let m = g.order();
        let mu = mu1(g);
        if mu > (2 * m + 1) as f64 + 1e-9 {
            violations += 1;
        }
        let whole_loop_free = (0..g.directed_edge_count()).all(|e| !g.is_whole_loop(e));
        if whole_loop_free && mu > (m + 1) as f64 + 1e-9 {
            no_whole_violations += 1;
        }
    }
    let mut witness_err = 0.0f64;
    for m in 0..=5 {
        let x = mu1_order_extremes(m);
        witness_err = witness_err.max(x.verify());
        let two = &x.witness_no_whole_loops;
        assert!(two.vertex_count() == 2 && !two.has_half_loops());
    }
    outcome(
        violations == 0 && witness_err < 1e-9,
        format!(
            "{} graphs, {violations} above 2m+1, {no_whole_violations} whole-loop-free above m+1, witness error {witness_err:e}",
            graphs.len()
        ),
    )
}

fn tau_formulas() -> Outcome {
    let mut bad = Vec::new();
    for d in 3..=100usize {
        let s = ((d - 1) as f64).sqrt();
        let m = ((s - 1.0) / 2.0).floor() as usize + 1;
        let mp = (s - 1.0).floor() as usize + 1;
        let got_m = tau_tang_formula(d, TauVariant::M).expect("d >= 3");
        let got_mp = tau_tang_formula(d, TauVariant::MPrime).expect("d >= 3");
        if got_m != m || got_mp != mp || got_m > got_mp {
            bad.push(d);
        }
    }
    outcome(bad.is_empty(), format!("d = 3..=100, mismatches at {bad:?}"))
}

fn certified_sandwich() -> Outcome {
    let q = TangleQuery::new(2.2, 3).expect("query");
    let catalog = match enumerate_minimal_tangles(&q, 8) {
        Ok(c) => c,
        Err(e) => return outcome(false, e.to_string()),
    };
    let model = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).expect("model");
    let (mut free, mut bad) = (0, Vec::new());
    for i in 0..100usize {
        let n = 10 + (i * 3) % 51;
        let g = sample_cover(&model, n, 9000 + i as u64).expect("sample").total;
        let traces = nb_traces(&g, 8);
        let tangle_free = matches!(has_tangles(&g, &q, &catalog).expect("catalog"), TangleVerdict::NoUpToBound(_));
        free += usize::from(tangle_free);
        for k in 1..=8 {
            let cert = certified_trace(&g, k, q.nu, q.r).expect("budget");
            if cert > traces[k - 1] {
                bad.push(format!("cover {i} k={k}: {cert} > trace"));
            }
            if tangle_free {
                let below: u64 = snbc_counts_by_order(&g, k, q.r).expect("budget").0.iter().sum();
                if cert != below {
                    bad.push(format!("cover {i} k={k}: certified {cert} != snbc_<r {below}"));
                }
            }
        }
    }
    outcome(
        bad.is_empty() && free > 0,
        format!("{} catalog members, {free}/100 tangle-free covers; {}", catalog.tangles.len(), bad.join("; ")),
    )
}

fn leading_coefficient() -> Outcome {
    let base = Graph::bouquet(2, 0);
    let plan = ExperimentPlan {
        model: ModelSpec::new(ModelKind::Permutation, base.clone()).expect("model"),
        n_grid: vec![2000],
        k_min: 1,
        k_max: 6,
        trials: 1000,
        master_seed: 2024,
        nu: 2.0,
        r: 1,
    };
    let table = mc_expected_trace(&plan).expect("plan");
    let mut worst = 0.0f64;
    for k in 1..=6 {
        let row = table.get(2000, k).expect("row");
        let target = divisor_trace_sum(&base, k) as f64;
        worst = worst.max((row.mean - target).abs() / row.stderr);
    }
    outcome(worst <= 4.0, format!("max |mean - c0(k)| / stderr = {worst:.2} over k <= 6"))
}

fn nonalon_scaling() -> Outcome {
    let model = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).expect("model");
    let eps = [0.05, 0.1, 0.2, 0.3];
    let table = match mc_nonalon_probability(&model, &[100, 200, 400], &eps, 20_000, 31, None) {
        Ok(t) => t,
        Err(e) => return outcome(false, e.to_string()),
    };
    let monotone = [100usize, 200, 400].iter().all(|&n| {
        let ps: Vec<f64> = table.rows.iter().filter(|r| r.n == n).map(|r| r.p_hat).collect();
        ps.windows(2).all(|w| w[0] >= w[1])
    });
    let slope = table.slopes.iter().find(|s| s.0 == 0.1).and_then(|s| s.1);
    let p: Vec<String> = table.rows.iter().filter(|r| r.epsilon == 0.1).map(|r| format!("n={}: {}", r.n, r.p_hat)).collect();
    let ok = slope.map_or(false, |s| (-1.7..=-0.4).contains(&s));
    outcome(ok && monotone, format!("slope {slope:?} at eps=0.1 ({}), monotone in eps: {monotone}", p.join(", ")))
}

fn sidestepping() -> Outcome {
    let model = typical_side_ensemble(vec![50, 100]);
    let mut worst = 0.0f64;
    for n in [50usize, 100] {
        for (k, mean, se) in ensemble_traces(&model, n, 6, 400_000, 5) {
            let target = typical_side_expected_trace(n, k);
            let z = if se > 0.0 { (mean - target).abs() / se } else { f64::INFINITY };
            worst = worst.max(z);
        }
    }
    let planted = planted_model(3.0, 5.0, 1, vec![(4.0, 1.0)], vec![50, 100, 200, 400]).expect("model");
    let report = sidestep_demo(&planted, 1, &[(Complex::new(4.0, 0.0), 1.0)], 0.5, 20_000, 6).expect("demo");
    outcome(
        worst <= 4.0 && report.slopes_ok,
        format!(
            "typical-side max |z| {worst:.2}; planted j=1 exponent {:?}, Eout exponent {:?}",
            report.exponents[0], report.e_out_exponent
        ),
    )
}

fn determinism() -> Outcome {
    let model = ModelSpec::new(ModelKind::Permutation, Graph::bouquet(2, 0)).expect("model");
    let plan = ExperimentPlan { model: model.clone(), n_grid: vec![10, 20], k_min: 1, k_max: 5, trials: 300, master_seed: 99, nu: 2.0, r: 2 };
    let run = |threads| {
        with_threads(threads, || {
            let t = trace_csv(&mc_expected_trace(&plan).expect("plan"));
            let a = nonalon_csv(&mc_nonalon_probability(&model, &[12, 24], &[0.0, 0.1], 200, 5, None).expect("nonalon"));
            t + &a
        })
        .expect("pool")
    };
    let one = run(1);
    let again = run(1);
    let four = run(4);
    outcome(one == again && one == four, format!("{} bytes, identical across runs and 1/4 threads: {}", one.len(), one == four))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: Vec<(usize, &str, Option<u64>, fn() -> Outcome)> = vec![
        (1, "Ihara identity", Some(10), ihara),
        (2, "trace-walk identity", Some(30), trace_walk),
        (3, "new/old decomposition", None, new_old),
        (4, "exact order-zero formula", Some(60), broder_shamir),
        (5, "permutation-model expectation", None, permutation_expectation),
        (6, "automorphism identity", None, automorphisms),
        (7, "mu1 versus order", None, mu1_order),
        (8, "tangle-power formulas", None, tau_formulas),
        (9, "certified-trace sandwich", None, certified_sandwich),
        (10, "leading trace coefficient", Some(300), leading_coefficient),
        (11, "non-Alon probability scaling", Some(1800), nonalon_scaling),
        (12, "sidestepping warm-up", None, sidestepping),
        (13, "determinism", None, determinism),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| x == &id.to_string()) {
            continue;
        }
        let o = timed(limit.map(Duration::from_secs), f);
        println!("{} criterion {id} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
