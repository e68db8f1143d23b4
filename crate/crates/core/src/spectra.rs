//! Adjacency and Hashimoto spectra, the new/old split, and the Ihara identity.

use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_traits::One;
use serde::Serialize;
use rand::{Rng, SeedableRng};

use crate::covers::CoordinatizedCover;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::poly;

/// Default cap on directed edges for the dense Ihara check.
pub const DEFAULT_IHARA_BOUND: usize = 200;
/// Agreement tolerance between the two new-spectrum computations.
pub const CROSS_CHECK_TOL: f64 = 1e-7;

pub fn adjacency_matrix(g: &Graph) -> DMatrix<i64> {
    let n = g.vertex_count();
    let mut a = DMatrix::<i64>::zeros(n, n);
    for e in g.edges() {
        a[(e.tail, e.head)] += 1;
    }
    a
}

pub fn adjacency_f64(g: &Graph) -> DMatrix<f64> {
    adjacency_matrix(g).map(|x| x as f64)
}

/// The non-backtracking (Hashimoto) matrix of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct HashimotoMatrix {
    pub matrix: DMatrix<i64>,
}

impl HashimotoMatrix {
    pub fn new(g: &Graph) -> HashimotoMatrix {
        let m = g.directed_edge_count();
        let mut h = DMatrix::<i64>::zeros(m, m);
        for (e, succ) in g.nb_successors().into_iter().enumerate() {
            for f in succ {
                h[(e, f)] = 1;
            }
        }
        HashimotoMatrix { matrix: h }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.size()).map(|i| self.matrix.row(i).iter().copied().collect()).collect()
    }

    /// `Trace(H^k)` for `k = 1..=kmax` by repeated dense multiplication.
    pub fn power_traces(&self, kmax: usize) -> Vec<i128> {
        let h = self.matrix.map(|x| x as i128);
        let mut p = h.clone();
        let mut out = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            if k > 1 {
                p = &p * &h;
            }
            out.push(p.trace());
        }
        out
    }
}

pub fn hashimoto(g: &Graph) -> HashimotoMatrix {
    HashimotoMatrix::new(g)
}

/// All eigenvalues of a real square matrix.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    if let Some(s) = m.clone().try_schur(f64::EPSILON, 5_000) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    // Unshifted structure (permutation-like blocks) can stall QR; conjugate it away.
    let n = m.nrows();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..8 {
        let r = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = r.qr().q();
        let conj = q.transpose() * m * &q;
        if let Some(s) = conj.try_schur(f64::EPSILON, 20_000) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
    }
    panic!("Schur iteration failed to converge on a {n}x{n} matrix")
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Hashimoto eigenvalues sorted by modulus (descending), then real and imaginary part.
pub fn hashimoto_eigenvalues(g: &Graph) -> Vec<Complex<f64>> {
    let mut v = complex_eigenvalues(&hashimoto(g).matrix.map(|x| x as f64));
    sort_complex(&mut v);
    v
}

pub fn sort_complex(v: &mut [Complex<f64>]) {
    v.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

/// Strongly connected components of the line graph that carry a cycle.
fn cyclic_components(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    // Iterative Tarjan.
    let m = succ.len();
    let mut index = vec![usize::MAX; m];
    let mut low = vec![0; m];
    let mut on_stack = vec![false; m];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut comps = Vec::new();
    for s in 0..m {
        if index[s] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(s, 0)];
        index[s] = next_index;
        low[s] = next_index;
        next_index += 1;
        stack.push(s);
        on_stack[s] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i];
                *i += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    low[p] = low[p].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    let cyclic = comp.len() > 1 || succ[v].contains(&v);
                    if cyclic {
                        comps.push(comp);
                    }
                }
            }
        }
    }
    comps
}

/// Perron eigenvalue of `H_G`, or 0 when `H_G` is nilpotent.
///
/// Computed per strongly connected component of the line graph, where the
/// Perron root is simple.
pub fn mu1(g: &Graph) -> f64 {
    let succ = g.nb_successors();
    let mut best = 0.0f64;
    for comp in cyclic_components(&succ) {
        let k = comp.len();
        let mut pos = vec![usize::MAX; succ.len()];
        for (i, &e) in comp.iter().enumerate() {
            pos[e] = i;
        }
        let mut sub = DMatrix::<f64>::zeros(k, k);
        for (i, &e) in comp.iter().enumerate() {
            for &f in &succ[e] {
                if pos[f] != usize::MAX {
                    sub[(i, pos[f])] = 1.0;
                }
            }
        }
        let rho = perron_root(&sub);
        best = best.max(rho);
    }
    best
}

/// Spectral radius of a square nonnegative matrix.
pub fn perron_root(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].abs(),
        _ => complex_eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub adjacency_all: Vec<f64>,
    pub adjacency_old: Vec<f64>,
    pub adjacency_new: Vec<f64>,
    #[serde(skip)]
    pub hashimoto_all: Vec<Complex<f64>>,
    pub mu1: f64,
    pub new_spectral_radius: f64,
    pub d: Option<usize>,
}

/// Removes from sorted `all` the nearest element to each entry of `old`.
pub fn multiset_difference(all: &[f64], old: &[f64]) -> Vec<f64> {
    let mut used = vec![false; all.len()];
    for &x in old {
        let mut best = None;
        let mut best_dist = f64::INFINITY;
        for (i, &y) in all.iter().enumerate() {
            if !used[i] && (x - y).abs() < best_dist {
                best_dist = (x - y).abs();
                best = Some(i);
            }
        }
        if let Some(i) = best {
            used[i] = true;
        }
    }
    all.iter().zip(&used).filter(|(_, &u)| !u).map(|(&x, _)| x).collect()
}

/// Orthonormal basis (as columns) of functions summing to zero on each fibre.
pub fn new_function_basis(base_vertices: usize, n: usize) -> DMatrix<f64> {
    let cols = base_vertices * n.saturating_sub(1);
    let mut q = DMatrix::<f64>::zeros(base_vertices * n, cols);
    let mut c = 0;
    for v in 0..base_vertices {
        for j in 1..n {
            let norm = ((j * (j + 1)) as f64).sqrt();
            for i in 0..j {
                q[(v * n + i, c)] = 1.0 / norm;
            }
            q[(v * n + j, c)] = -(j as f64) / norm;
            c += 1;
        }
    }
    q
}

/// New adjacency eigenvalues by multiset difference, optionally cross-checked on the new subspace.
pub fn new_adjacency_spectrum(cover: &CoordinatizedCover, cross_check: bool) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let a = adjacency_f64(&cover.total);
    let all = symmetric_eigenvalues(&a);
    let old = symmetric_eigenvalues(&adjacency_f64(&cover.base));
    let new = multiset_difference(&all, &old);
    if cross_check {
        let q = new_function_basis(cover.base.vertex_count(), cover.n);
        let restricted = q.transpose() * &a * &q;
        let direct = symmetric_eigenvalues(&restricted);
        if direct.len() != new.len() {
            return Err(Error::CrossCheckFailed(format!(
                "{} new eigenvalues by difference, {} on the new subspace",
                new.len(),
                direct.len()
            )));
        }
        let scale = all.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (x, y) in new.iter().zip(&direct) {
            if (x - y).abs() > CROSS_CHECK_TOL * scale {
                return Err(Error::CrossCheckFailed(format!("new eigenvalue {x} vs {y}")));
            }
        }
    }
    Ok((all, old, new))
}

pub fn new_old_spectrum(cover: &CoordinatizedCover) -> Result<SpectrumReport> {
    let (all, old, new) = new_adjacency_spectrum(cover, true)?;
    let new_spectral_radius = new.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(SpectrumReport {
        adjacency_all: all,
        adjacency_old: old,
        adjacency_new: new,
        hashimoto_all: hashimoto_eigenvalues(&cover.total),
        mu1: mu1(&cover.total),
        new_spectral_radius,
        d: cover.base.regular_degree(),
    })
}

/// The Alon threshold `2√(d-1)`.
pub fn alon_threshold(d: usize) -> f64 {
    2.0 * ((d - 1) as f64).sqrt()
}

pub fn non_alon_count(report: &SpectrumReport, epsilon: f64) -> Result<usize> {
    let d = report.d.filter(|&d| d >= 3).ok_or(Error::NotRegularBase)?;
    Ok(count_beyond(&report.adjacency_new, alon_threshold(d) + epsilon))
}

pub fn count_beyond(values: &[f64], threshold: f64) -> usize {
    values.iter().filter(|x| x.abs() > threshold).count()
}

/// Maps a Hashimoto bound `μ` to the adjacency bound `μ + (d-1)/μ`.
///
/// Values of `μ` at or below `√(d-1)` correspond to the complex regime, whose
/// adjacency eigenvalues all lie within `2√(d-1)`.
pub fn hashimoto_to_adjacency_bound(d: usize, mu: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::DomainError(format!("degree {d} < 3")));
    }
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::DomainError(format!("bound {mu} must be finite and nonnegative")));
    }
    let q = (d - 1) as f64;
    if mu <= q.sqrt() {
        return Ok(2.0 * q.sqrt());
    }
    Ok(mu + q / mu)
}

/// Inverse of [`hashimoto_to_adjacency_bound`] on the real branch `μ ≥ √(d-1)`.
pub fn adjacency_to_hashimoto_bound(d: usize, lambda: f64) -> Result<f64> {
    if d < 3 {
        return Err(Error::DomainError(format!("degree {d} < 3")));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::DomainError(format!("bound {lambda} must be finite and nonnegative")));
    }
    let q = (d - 1) as f64;
    if lambda <= 2.0 * q.sqrt() {
        return Ok(q.sqrt());
    }
    Ok((lambda + (lambda * lambda - 4.0 * q).sqrt()) / 2.0)
}

/// Outcome of checking the Ihara determinantal identity.
#[derive(Debug, Clone, PartialEq)]
pub struct IharaOutcome {
    pub holds: bool,
    pub max_abs_residual: f64,
    /// Both sides after clearing any negative power of `u² - 1`.
    pub lhs: Vec<BigInt>,
    pub rhs: Vec<BigInt>,
}

/// Checks `det(uI - H) = det(u²I - uA + D - I) (u+1)^{o1} (u²-1)^{o2-n}` by coefficients.
pub fn ihara_check(g: &Graph) -> Result<IharaOutcome> {
    ihara_check_bounded(g, DEFAULT_IHARA_BOUND)
}

pub fn ihara_check_bounded(g: &Graph, bound: usize) -> Result<IharaOutcome> {
    let m = g.directed_edge_count();
    if m > bound {
        return Err(Error::SizeBoundExceeded(format!("{m} directed edges exceeds the dense bound {bound}")));
    }
    let n = g.vertex_count();
    let h = hashimoto(g).rows();
    let charpoly_h = poly::charpoly(&h);
    // det(u²I - uA + Q) = charpoly of [[A, -Q], [I, 0]]
    let a = g.adjacency_counts();
    let deg = g.degrees();
    let mut block = vec![vec![0i64; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            block[i][j] = a[i][j];
        }
        block[i][n + i] = -(deg[i] as i64 - 1);
        block[n + i][i] = 1;
    }
    let quad = poly::charpoly(&block);
    let o1 = g.half_loop_count();
    let o2 = g.edge_count() - o1;
    let big = |v: i64| BigInt::from(v);
    let u_plus_1 = vec![BigInt::one(), BigInt::one()];
    let u2_minus_1 = vec![big(-1), big(0), big(1)];
    let mut rhs = poly::mul(&quad, &poly::pow(&u_plus_1, o1));
    let mut lhs = charpoly_h;
    if o2 >= n {
        rhs = poly::mul(&rhs, &poly::pow(&u2_minus_1, o2 - n));
    } else {
        lhs = poly::mul(&lhs, &poly::pow(&u2_minus_1, n - o2));
    }
    let residual = poly::relative_residual(&lhs, &rhs);
    Ok(IharaOutcome { holds: residual < 1e-8 && lhs.len() == rhs.len(), max_abs_residual: residual, lhs, rhs })
}
