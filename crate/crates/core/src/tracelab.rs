//! Monte-Carlo trace experiments, exact order-zero walk probabilities and
//! `1/n` expansion fits.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::covers::{falling_factorial, sample_cover, ModelSpec};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph};
use crate::nblang::certified_trace;
use crate::spectra::{alon_threshold, new_adjacency_spectrum};
use crate::walks::{nb_traces, snbc_counts_by_order, Walk};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub nu: f64,
    pub r: usize,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("n grid must be nonempty and strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(Error::InvalidArgument(format!("bad k range {}..={}", self.k_min, self.k_max)));
        }
        for &n in &self.n_grid {
            self.model.kind.check_n(n)?;
        }
        Ok(())
    }

    pub fn ks(&self) -> std::ops::RangeInclusive<usize> {
        self.k_min..=self.k_max
    }
}

/// Seed of one trial; a splitmix64 mix of `(master, n, trial)`.
pub fn trial_seed(master: u64, n: usize, trial: usize) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ n as u64) ^ trial as u64)
}

/// Runs `f` on a pool of `threads` workers (0 means the rayon default).
pub fn with_threads<T: Send, F: FnOnce() -> T + Send>(threads: usize, f: F) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(f))
}

/// Statistic evaluated on each sampled cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistic {
    Trace,
    CertifiedTrace,
    /// SNBC walks whose visited subgraph has exactly this order.
    SnbcOrder(usize),
}

/// Progress callback: `(trial index, trials, n)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize, usize) + Sync);

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub rows: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

impl TraceTable {
    pub fn get(&self, n: usize, k: usize) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.n == n && r.k == k)
    }
}

/// Mean and standard error from exact integer sums.
fn integer_moments(values: &[u64]) -> (f64, f64) {
    let n = values.len() as u128;
    let s: u128 = values.iter().map(|&v| v as u128).sum();
    let ss: u128 = values.iter().map(|&v| (v as u128) * (v as u128)).sum();
    let mean = s as f64 / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let num = n * ss - s * s;
    let var = num as f64 / (n as f64 * (n - 1) as f64);
    (mean, (var / n as f64).sqrt())
}

fn statistic_values(plan: &ExperimentPlan, stat: Statistic, n: usize, seed: u64) -> Result<Vec<u64>> {
    let cover = sample_cover(&plan.model, n, seed)?;
    let g = &cover.total;
    match stat {
        Statistic::Trace => Ok(nb_traces(g, plan.k_max)[plan.k_min - 1..].to_vec()),
        Statistic::CertifiedTrace => plan.ks().map(|k| certified_trace(g, k, plan.nu, plan.r)).collect(),
        Statistic::SnbcOrder(m) => plan.ks().map(|k| snbc_counts_by_order(g, k, m + 1).map(|(c, _)| c[m])).collect(),
    }
}

/// Monte-Carlo mean and standard error of a statistic for every `(n, k)`.
pub fn mc_statistic(plan: &ExperimentPlan, stat: Statistic, progress: Option<Progress<'_>>) -> Result<TraceTable> {
    plan.validate()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &n in &plan.n_grid {
        if 4 * plan.k_max > n {
            warnings.push(format!("k = {} exceeds n/4 for n = {n}", plan.k_max));
        }
        let per_trial: Vec<Vec<u64>> = (0..plan.trials)
            .into_par_iter()
            .map(|t| {
                if let Some(p) = progress {
                    p(t + 1, plan.trials, n);
                }
                statistic_values(plan, stat, n, trial_seed(plan.master_seed, n, t))
            })
            .collect::<Result<_>>()?;
        for (j, k) in plan.ks().enumerate() {
            let column: Vec<u64> = per_trial.iter().map(|v| v[j]).collect();
            let (mean, stderr) = integer_moments(&column);
            rows.push(TraceRow { n, k, mean, stderr });
        }
    }
    Ok(TraceTable { rows, warnings })
}

pub fn mc_expected_trace(plan: &ExperimentPlan) -> Result<TraceTable> {
    mc_statistic(plan, Statistic::Trace, None)
}

/// `c₀(k) = Σ_{k'|k} Trace(H_B^{k'})`.
pub fn divisor_trace_sum(b: &Graph, k: usize) -> u64 {
    let tr = nb_traces(b, k);
    (1..=k).filter(|d| k % d == 0).map(|d| tr[d - 1]).sum()
}

/// Traversal counts `a(f_j)` of each whole-loop of a bouquet along a walk, in loop order.
fn loop_multiplicities(b: &Graph, w: &Walk) -> Vec<usize> {
    let orient = b.orientation();
    orient.iter().map(|&f| w.edges.iter().filter(|&&e| e == f || e == b.inv(f)).count()).collect()
}

fn check_bouquet_walk(b: &Graph, w: &Walk, n: usize) -> Result<()> {
    if b.vertex_count() != 1 || b.has_half_loops() {
        return Err(Error::PreconditionViolated("base must be a bouquet of whole-loops".into()));
    }
    if !w.is_snbc(b) {
        return Err(Error::NotNonBacktracking);
    }
    if w.len() > n {
        return Err(Error::LengthExceedsDegree { k: w.len(), n });
    }
    Ok(())
}

/// Probability, in the permutation model, that the lift of `w` from a fixed
/// vertex visits a cycle of length `k = |w|`: `(n-1)_{k-1} / Π_j (n)_{a_j}`.
pub fn broder_shamir_exact(b: &Graph, w: &Walk, n: usize) -> Result<BigRational> {
    check_bouquet_walk(b, w, n)?;
    let k = w.len();
    let num = falling_factorial(n - 1, k - 1);
    let den = loop_multiplicities(b, w).into_iter().fold(BigInt::one(), |acc, a| acc * falling_factorial(n, a));
    Ok(BigRational::new(num, den))
}

/// `c₁(w) = -Σ_{j₁<j₂} a_{j₁} a_{j₂}`, the `1/n²` coefficient of [`broder_shamir_exact`].
pub fn broder_shamir_c1(b: &Graph, w: &Walk) -> BigInt {
    let a = loop_multiplicities(b, w);
    let mut s = BigInt::zero();
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            s += BigInt::from(a[i] * a[j]);
        }
    }
    -s
}

/// Exhaustive average over all permutation assignments of the event in [`broder_shamir_exact`].
pub fn broder_shamir_oracle(b: &Graph, w: &Walk, n: usize) -> Result<BigRational> {
    check_bouquet_walk(b, w, n)?;
    let orient = b.orientation();
    let loops = orient.len();
    let perms = all_permutations(n);
    let total = perms.len().pow(loops as u32);
    let mut hits = 0u64;
    let mut choice = vec![0usize; loops];
    for _ in 0..total {
        let sigma = |e: EdgeId, i: usize| -> usize {
            let j = orient.iter().position(|&f| f == e || f == b.inv(e)).expect("bouquet edge");
            let p = &perms[choice[j]];
            if e == orient[j] {
                p[i]
            } else {
                p.iter().position(|&x| x == i).expect("permutation")
            }
        };
        let mut seen = vec![false; n];
        let mut i = 0;
        let mut ok = true;
        for &e in &w.edges {
            if seen[i] {
                ok = false;
                break;
            }
            seen[i] = true;
            i = sigma(e, i);
        }
        if ok && i == 0 {
            hits += 1;
        }
        for c in choice.iter_mut() {
            *c += 1;
            if *c < perms.len() {
                break;
            }
            *c = 0;
        }
    }
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(total)))
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(i: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            rec(i + 1, p, out);
            p.swap(i, j);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct KCoefficients {
    pub k: usize,
    /// `c_0(k), …, c_{r-1}(k)`.
    pub coefficients: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionEstimate {
    pub order: usize,
    pub per_k: BTreeMap<usize, KCoefficients>,
    pub fit_window: String,
}

/// Largest condition number of a weighted expansion design.
pub const MAX_EXPANSION_CONDITION: f64 = 1e8;

/// Weighted least squares of `f(k, n)` against `1, 1/n, …, 1/n^{r-1}` for each `k`.
///
/// Weights are `1/stderr²`; rows with zero standard error get unit weight
/// when every row of that `k` is exact.
pub fn fit_expansion_table(table: &TraceTable, r: usize) -> Result<ExpansionEstimate> {
    if r == 0 {
        return Err(Error::InvalidArgument("expansion order must be at least 1".into()));
    }
    let mut by_k: BTreeMap<usize, Vec<&TraceRow>> = BTreeMap::new();
    for row in &table.rows {
        by_k.entry(row.k).or_default().push(row);
    }
    let mut per_k = BTreeMap::new();
    let mut ns: Vec<usize> = Vec::new();
    for (&k, rows) in &by_k {
        if rows.len() < r + 2 {
            return Err(Error::InsufficientGrid { needed: r + 2, got: rows.len() });
        }
        let exact = rows.iter().all(|x| x.stderr == 0.0);
        let positive_min = rows.iter().map(|x| x.stderr).filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = rows
            .iter()
            .map(|x| {
                if exact {
                    1.0
                } else {
                    1.0 / x.stderr.max(positive_min).powi(2)
                }
            })
            .collect();
        let mut design = DMatrix::<f64>::zeros(rows.len(), r);
        let mut rhs = DVector::<f64>::zeros(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let sw = w[i].sqrt();
            for j in 0..r {
                design[(i, j)] = sw / (row.n as f64).powi(j as i32);
            }
            rhs[i] = sw * row.mean;
        }
        let mut scale = vec![1.0; r];
        for (j, s) in scale.iter_mut().enumerate() {
            *s = design.column(j).norm();
            if *s > 0.0 {
                let c = *s;
                design.column_mut(j).iter_mut().for_each(|x| *x /= c);
            }
        }
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition > MAX_EXPANSION_CONDITION {
            return Err(Error::IllConditioned(condition));
        }
        let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::DomainError(e.to_string()))?;
        let coefficients: Vec<f64> = (0..r).map(|j| sol[j] / scale[j]).collect();
        let gram = design.transpose() * &design;
        let inv = gram.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        let covariance = (0..r).map(|a| (0..r).map(|b| inv[(a, b)] / (scale[a] * scale[b])).collect()).collect();
        per_k.insert(k, KCoefficients { k, coefficients, covariance, condition });
        if ns.is_empty() {
            ns = rows.iter().map(|x| x.n).collect();
        }
    }
    let fit_window = format!(
        "n in {{{}}}, k in {{{}}}",
        ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        per_k.keys().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
    );
    Ok(ExpansionEstimate { order: r, per_k, fit_window })
}

/// Runs the plan and fits an expansion with `plan.r` coefficients.
pub fn fit_expansion(plan: &ExperimentPlan, stat: Statistic) -> Result<ExpansionEstimate> {
    if plan.n_grid.len() < plan.r + 2 {
        return Err(Error::InsufficientGrid { needed: plan.r + 2, got: plan.n_grid.len() });
    }
    fit_expansion_table(&mc_statistic(plan, stat, None)?, plan.r)
}

/// Least-squares slope of `ln y` against `ln x` over points with `y > 0`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonAlonRow {
    pub n: usize,
    pub epsilon: f64,
    pub hits: usize,
    pub p_hat: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonAlonTable {
    pub rows: Vec<NonAlonRow>,
    /// Log-log slope of `p̂(n)` for each `ε`, when at least two `p̂` are positive.
    pub slopes: Vec<(f64, Option<f64>)>,
}

/// Fraction of covers with a new eigenvalue beyond `2√(d-1) + ε`.
///
/// All `ε` share the same samples, so `p̂` is nonincreasing in `ε` at each `n`.
pub fn mc_nonalon_probability(
    model: &ModelSpec,
    n_grid: &[usize],
    epsilons: &[f64],
    trials: usize,
    seed: u64,
    progress: Option<Progress<'_>>,
) -> Result<NonAlonTable> {
    let d = model.base.regular_degree().filter(|&d| d >= 3).ok_or(Error::NotRegularBase)?;
    if trials == 0 || n_grid.is_empty() || epsilons.is_empty() {
        return Err(Error::InvalidArgument("need trials, an n grid and an epsilon grid".into()));
    }
    let threshold = alon_threshold(d);
    let mut rows = Vec::new();
    for &n in n_grid {
        model.kind.check_n(n)?;
        let radii: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                if let Some(p) = progress {
                    p(t + 1, trials, n);
                }
                let cover = sample_cover(model, n, trial_seed(seed, n, t))?;
                let (_, _, new) = new_adjacency_spectrum(&cover, false)?;
                Ok(new.iter().fold(0.0f64, |a, x| a.max(x.abs())))
            })
            .collect::<Result<_>>()?;
        for &eps in epsilons {
            let hits = radii.iter().filter(|&&rho| rho > threshold + eps).count();
            let p = hits as f64 / trials as f64;
            let stderr = (p * (1.0 - p) / trials as f64).sqrt();
            rows.push(NonAlonRow { n, epsilon: eps, hits, p_hat: p, stderr });
        }
    }
    let slopes = epsilons
        .iter()
        .map(|&eps| {
            let pts: Vec<(f64, f64)> =
                rows.iter().filter(|r| r.epsilon == eps).map(|r| (r.n as f64, r.p_hat)).collect();
            (eps, loglog_slope(&pts))
        })
        .collect();
    Ok(NonAlonTable { rows, slopes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub mean: f64,
    pub stderr: f64,
    /// `(d-1)^k k^{2r} / n^r`.
    pub bound: f64,
    pub ratio: f64,
    pub within: bool,
}

/// Mean number of SNBC walks of length `k` whose visited subgraph has order at least `r`.
pub fn snbc_large_order_tail(
    model: &ModelSpec,
    n: usize,
    k: usize,
    r: usize,
    trials: usize,
    seed: u64,
    constant: f64,
) -> Result<TailReport> {
    if 2 * k > n {
        return Err(Error::PreconditionViolated(format!("k = {k} exceeds n/2 = {}", n / 2)));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let d = model.base.regular_degree().ok_or(Error::NotRegularBase)?;
    let values: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cover = sample_cover(model, n, trial_seed(seed, n, t))?;
            Ok(snbc_counts_by_order(&cover.total, k, r)?.1)
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = integer_moments(&values);
    let bound = ((d - 1) as f64).powi(k as i32) * (k as f64).powi(2 * r as i32) / (n as f64).powi(r as i32);
    let ratio = mean / bound;
    Ok(TailReport { mean, stderr, bound, ratio, within: ratio <= constant })
}
