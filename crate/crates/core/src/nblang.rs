//! Non-backtracking word counts, counting automata, wordings, polyexponential
//! fits, certificates and certified traces.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix, DVector};

use crate::bgraph::BGraph;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, Morphism};
use crate::spectra::{complex_eigenvalues, mu1};
use crate::tangles::{vlg_mu1_below, TANGLE_TOL};
use crate::walks::{for_each_snbc, visited_order, vlg, EdgeLengths, Suppression, DEFAULT_BUDGET};

/// Number of non-backtracking words of `k` letters from `e` to `e_prime`.
pub fn nbwalk_count(b: &Graph, e: EdgeId, e_prime: EdgeId, k: usize) -> Result<u128> {
    b.check_edge(e)?;
    b.check_edge(e_prime)?;
    if k == 0 {
        return Err(Error::InvalidArgument("word length must be at least 1".into()));
    }
    let succ = b.nb_successors();
    let mut row = vec![0u128; b.directed_edge_count()];
    row[e] = 1;
    for _ in 1..k {
        let mut next = vec![0u128; row.len()];
        for (f, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &g in &succ[f] {
                next[g] = next[g]
                    .checked_add(c)
                    .ok_or_else(|| Error::DomainError(format!("word count overflows at length {k}")))?;
            }
        }
        row = next;
    }
    Ok(row[e_prime])
}

/// A deterministic automaton with multiplicities: `transitions[q][q']` counts letters from `q` to `q'`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountAutomaton {
    pub states: usize,
    pub transitions: Vec<Vec<u64>>,
    pub initial: usize,
    pub accepting: Vec<usize>,
}

impl CountAutomaton {
    pub fn new(states: usize, transitions: Vec<Vec<u64>>, initial: usize, accepting: Vec<usize>) -> Result<Self> {
        if transitions.len() != states || transitions.iter().any(|r| r.len() != states) {
            return Err(Error::InvalidArgument("transition matrix must be states x states".into()));
        }
        if initial >= states || accepting.iter().any(|&q| q >= states) {
            return Err(Error::InvalidArgument("state index out of range".into()));
        }
        Ok(CountAutomaton { states, transitions, initial, accepting })
    }

    /// States are the directed edges of `b`; words are non-backtracking walks starting with `start`.
    pub fn from_line_graph(b: &Graph, start: EdgeId) -> Result<Self> {
        b.check_edge(start)?;
        let m = b.directed_edge_count();
        let mut t = vec![vec![0u64; m]; m];
        for (e, succ) in b.nb_successors().into_iter().enumerate() {
            for f in succ {
                t[e][f] += 1;
            }
        }
        CountAutomaton::new(m, t, start, (0..m).collect())
    }

    /// `f(k) = Σ_{q ∈ F} (A^k)_{q₀,q}`.
    pub fn count(&self, k: usize) -> Result<u128> {
        let mut row = vec![0u128; self.states];
        row[self.initial] = 1;
        for _ in 0..k {
            let mut next = vec![0u128; self.states];
            for (q, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for (q2, &t) in self.transitions[q].iter().enumerate() {
                    if t > 0 {
                        next[q2] = c
                            .checked_mul(t as u128)
                            .and_then(|x| next[q2].checked_add(x))
                            .ok_or_else(|| Error::DomainError(format!("count overflows at length {k}")))?;
                    }
                }
            }
            row = next;
        }
        Ok(self.accepting.iter().map(|&q| row[q]).sum())
    }

    /// States reachable from the initial state and co-reachable to an accepting one.
    pub fn trim(&self) -> Vec<usize> {
        let reach = |start: Vec<usize>, forward: bool| {
            let mut seen = vec![false; self.states];
            let mut stack = start;
            for &q in &stack {
                seen[q] = true;
            }
            while let Some(q) = stack.pop() {
                for q2 in 0..self.states {
                    let t = if forward { self.transitions[q][q2] } else { self.transitions[q2][q] };
                    if t > 0 && !seen[q2] {
                        seen[q2] = true;
                        stack.push(q2);
                    }
                }
            }
            seen
        };
        let fwd = reach(vec![self.initial], true);
        let bwd = reach(self.accepting.clone(), false);
        (0..self.states).filter(|&q| fwd[q] && bwd[q]).collect()
    }
}

/// Eigenvalues of the transition matrix on the trimmed automaton; empty for the empty language.
pub fn language_eigenvalues(m: &CountAutomaton) -> Vec<Complex<f64>> {
    let live = m.trim();
    let mat = DMatrix::<f64>::from_fn(live.len(), live.len(), |i, j| m.transitions[live[i]][live[j]] as f64);
    let mut ev = complex_eigenvalues(&mat);
    crate::spectra::sort_complex(&mut ev);
    ev
}

/// A `B`-wording of `t`: one non-empty word of `B` directed edges per directed edge of `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wording {
    pub t: Graph,
    pub words: Vec<Vec<EdgeId>>,
}

impl Wording {
    pub fn validate(&self, b: &Graph) -> Result<()> {
        let t = &self.t;
        let bad = |msg: String| Err(Error::InvalidWording(msg));
        if self.words.len() != t.directed_edge_count() {
            return bad(format!("{} words for {} edges", self.words.len(), t.directed_edge_count()));
        }
        let mut start_vertex = vec![None; t.vertex_count()];
        for e in 0..t.directed_edge_count() {
            let w = &self.words[e];
            if w.is_empty() {
                return bad(format!("empty word on edge {e}"));
            }
            for &x in w {
                b.check_edge(x).map_err(|_| Error::InvalidWording(format!("letter {x} is not a B edge")))?;
            }
            if w.windows(2).any(|p| b.head(p[0]) != b.tail(p[1]) || p[1] == b.inv(p[0])) {
                return bad(format!("word on edge {e} is not a non-backtracking walk"));
            }
            let rev: Vec<EdgeId> = self.words[t.inv(e)].iter().rev().map(|&x| b.inv(x)).collect();
            if *w != rev {
                return bad(format!("word on edge {e} is not the reverse of its inverse"));
            }
            if t.is_half_loop(e) && (w.len() != 1 || !b.is_half_loop(w[0])) {
                return bad(format!("half-loop {e} must map to a single half-loop letter"));
            }
            let s = b.tail(w[0]);
            match start_vertex[t.tail(e)] {
                None => start_vertex[t.tail(e)] = Some(s),
                Some(v) if v != s => return bad(format!("words at vertex {} start at different B vertices", t.tail(e))),
                _ => {}
            }
        }
        if start_vertex.iter().any(Option::is_none) {
            return bad("isolated vertex carries no B vertex".into());
        }
        Ok(())
    }

    pub fn lengths(&self) -> EdgeLengths {
        EdgeLengths(self.words.iter().map(Vec::len).collect())
    }
}

/// The realization `S_{/B}`: `vlg(t, |W|)` with the `i`-th edge of each path over the `i`-th letter.
pub fn realize_wording(w: &Wording, b: &Graph) -> Result<BGraph> {
    w.validate(b)?;
    let v = vlg(&w.t, &w.lengths())?;
    let s = &v.graph;
    let mut vertex_map = vec![usize::MAX; s.vertex_count()];
    let mut edge_map = vec![usize::MAX; s.directed_edge_count()];
    for (e, path) in v.paths.iter().enumerate() {
        for (i, &se) in path.iter().enumerate() {
            let letter = w.words[e][i];
            edge_map[se] = letter;
            vertex_map[s.tail(se)] = b.tail(letter);
            vertex_map[s.head(se)] = b.head(letter);
        }
    }
    BGraph::new(v.graph, Morphism { vertex_map, edge_map }, b)
}

/// The wording a `B`-graph induces on a suppression of its underlying graph.
pub fn induced_wording(s: &BGraph, sup: &Suppression) -> Wording {
    let words = sup.paths.iter().map(|p| p.iter().map(|&e| s.projection.edge_map[e]).collect()).collect();
    Wording { t: sup.graph.clone(), words }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyexpFit {
    pub bases: Vec<Complex<f64>>,
    /// `polynomials[i][j]` multiplies `k^j · bases[i]^k`.
    pub polynomials: Vec<Vec<Complex<f64>>>,
    pub residual: f64,
    /// `max_k |f(k) - fit(k)|^{1/k}` over the upper half of the window.
    pub growth: f64,
    pub condition: f64,
}

impl PolyexpFit {
    pub fn eval(&self, k: usize) -> Complex<f64> {
        let mut s = Complex::new(0.0, 0.0);
        for (mu, p) in self.bases.iter().zip(&self.polynomials) {
            let z = mu.powu(k as u32);
            for (j, c) in p.iter().enumerate() {
                s += c * z * (k as f64).powi(j as i32);
            }
        }
        s
    }
}

/// Condition number above which a fit is refused.
pub const MAX_FIT_CONDITION: f64 = 1e10;

/// Least-squares fit of `f(k) ≈ Σ_i p_i(k) μ_i^k` with `deg p_i ≤ degree`.
///
/// Bases closer than `1e-9` are merged. Columns are normalized before the
/// SVD solve; the condition number is that of the normalized design.
pub fn fit_polyexponential(samples: &[(usize, f64)], candidate_bases: &[Complex<f64>], degree: usize) -> Result<PolyexpFit> {
    let mut bases: Vec<Complex<f64>> = Vec::new();
    for &z in candidate_bases {
        if !bases.iter().any(|b| (b - z).norm() < 1e-9) {
            bases.push(z);
        }
    }
    let ncols = bases.len() * (degree + 1);
    let need = ncols + 4;
    if samples.len() < need {
        return Err(Error::InsufficientGrid { needed: need, got: samples.len() });
    }
    let rows = samples.len();
    let mut design = DMatrix::<Complex<f64>>::zeros(rows, ncols);
    for (r, &(k, _)) in samples.iter().enumerate() {
        for (i, mu) in bases.iter().enumerate() {
            let z = mu.powu(k as u32);
            for j in 0..=degree {
                design[(r, i * (degree + 1) + j)] = z * (k as f64).powi(j as i32);
            }
        }
    }
    let mut scale = vec![1.0; ncols];
    for c in 0..ncols {
        let m = design.column(c).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if m > 0.0 {
            scale[c] = m;
            design.column_mut(c).iter_mut().for_each(|z| *z /= m);
        }
    }
    let rhs = DVector::<Complex<f64>>::from_iterator(rows, samples.iter().map(|&(_, f)| Complex::new(f, 0.0)));
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &x| a.max(x));
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_FIT_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::DomainError(e.to_string()))?;
    let polynomials: Vec<Vec<Complex<f64>>> = (0..bases.len())
        .map(|i| (0..=degree).map(|j| sol[i * (degree + 1) + j] / scale[i * (degree + 1) + j]).collect())
        .collect();
    let mut fit = PolyexpFit { bases, polynomials, residual: 0.0, growth: 0.0, condition };
    let mut ks: Vec<usize> = samples.iter().map(|s| s.0).collect();
    ks.sort_unstable();
    let k_mid = ks[ks.len() / 2];
    for &(k, f) in samples {
        let r = (Complex::new(f, 0.0) - fit.eval(k)).norm();
        fit.residual = fit.residual.max(r);
        if k > 0 && k >= k_mid {
            fit.growth = fit.growth.max(r.powf(1.0 / k as f64));
        }
    }
    Ok(fit)
}

/// A minimal length vector certifying `μ₁(vlg(t, ξ)) < ν`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub t: Graph,
    pub xi: EdgeLengths,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSet {
    pub t: Graph,
    pub nu: f64,
    pub search_bound: usize,
    /// Non-half-loop orbits of `t`, the coordinates of each vector.
    pub coordinates: Vec<EdgeId>,
    pub certificates: Vec<Certificate>,
}

impl CertificateSet {
    pub fn vectors(&self) -> Vec<Vec<usize>> {
        self.certificates.iter().map(|c| c.xi.along(&self.coordinates)).collect()
    }

    /// Whether `k` (listed along `coordinates`) dominates some certificate.
    pub fn covers(&self, k: &[usize]) -> bool {
        self.vectors().iter().any(|xi| xi.iter().zip(k).all(|(a, b)| a <= b))
    }
}

pub const MAX_CERTIFICATE_BOUND: usize = 12;
/// Largest number of box points a certificate search will visit.
pub const MAX_CERTIFICATE_BOX: usize = 3_000_000;

/// The membership table of `{k in [1, bound]^n : μ₁(vlg(t, k)) < ν}`, in row-major order.
pub fn certificate_box(t: &Graph, nu: f64, bound: usize) -> Result<(Vec<EdgeId>, Vec<bool>)> {
    if bound > MAX_CERTIFICATE_BOUND {
        return Err(Error::BoundTooLarge(format!("search bound {bound} exceeds {MAX_CERTIFICATE_BOUND}")));
    }
    let coords: Vec<EdgeId> = t.orientation().into_iter().filter(|&e| !t.is_half_loop(e)).collect();
    let n = coords.len();
    let size = bound
        .checked_pow(n as u32)
        .filter(|&s| s <= MAX_CERTIFICATE_BOX)
        .ok_or_else(|| Error::BoundTooLarge(format!("box {bound}^{n} is too large")))?;
    let mut inside = vec![false; size];
    if n == 0 {
        let k = EdgeLengths(vec![1; t.directed_edge_count()]);
        inside[0] = vlg_mu1_below(t, &k, nu);
        return Ok((coords, inside));
    }
    // The set is an upper set, so along the last coordinate it is a ray found by bisection.
    let lines = size / bound;
    for line in 0..lines {
        let mut prefix = Vec::with_capacity(n);
        let mut x = line;
        for _ in 0..n - 1 {
            prefix.push(x % bound + 1);
            x /= bound;
        }
        prefix.reverse();
        let below = |last: usize| {
            let mut vals = prefix.clone();
            vals.push(last);
            vlg_mu1_below(t, &EdgeLengths::from_orbits(t, &coords, &vals), nu)
        };
        let (mut lo, mut hi) = (1usize, bound + 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if below(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        for last in lo..=bound {
            inside[line * bound + last - 1] = true;
        }
    }
    Ok((coords, inside))
}

fn box_index(k: &[usize], bound: usize) -> usize {
    k.iter().fold(0, |acc, &x| acc * bound + (x - 1))
}

fn box_point(mut idx: usize, n: usize, bound: usize) -> Vec<usize> {
    let mut k = vec![0; n];
    for i in (0..n).rev() {
        k[i] = idx % bound + 1;
        idx /= bound;
    }
    k
}

/// Minimal elements of `{k ≤ bound : μ₁(vlg(t, k)) < ν}`, complete within the box.
pub fn certificates(t: &Graph, nu: f64, search_bound: usize) -> Result<CertificateSet> {
    if !t.is_connected() || !t.is_pruned() {
        return Err(Error::PreconditionViolated("t must be connected and pruned".into()));
    }
    let (coords, inside) = certificate_box(t, nu, search_bound)?;
    let n = coords.len();
    let mut certs = Vec::new();
    for (idx, &inn) in inside.iter().enumerate() {
        if !inn {
            continue;
        }
        let k = box_point(idx, n, search_bound);
        let minimal = (0..n).all(|i| {
            if k[i] == 1 {
                return true;
            }
            let mut d = k.clone();
            d[i] -= 1;
            !inside[box_index(&d, search_bound)]
        });
        if minimal {
            certs.push(Certificate { t: t.clone(), xi: EdgeLengths::from_orbits(t, &coords, &k) });
        }
    }
    Ok(CertificateSet { t: t.clone(), nu, search_bound, coordinates: coords, certificates: certs })
}

/// Recomputes the box and checks it equals the union of the up-sets of the certificates.
pub fn verify_certificate_decomposition(set: &CertificateSet) -> Result<bool> {
    let (_, inside) = certificate_box(&set.t, set.nu, set.search_bound)?;
    let n = set.coordinates.len();
    Ok(inside.iter().enumerate().all(|(idx, &inn)| inn == set.covers(&box_point(idx, n, set.search_bound))))
}

/// Closed SNBC walks of length `k` whose visited subgraph has `μ₁ < ν` and order `< r`.
pub fn certified_trace(g: &Graph, k: usize, nu: f64, r: usize) -> Result<u64> {
    certified_trace_bounded(g, k, nu, r, DEFAULT_BUDGET)
}

pub fn certified_trace_bounded(g: &Graph, k: usize, nu: f64, r: usize, budget: u64) -> Result<u64> {
    if r == 0 {
        return Ok(0);
    }
    let mut cache: HashMap<Vec<EdgeId>, bool> = HashMap::new();
    let mut count = 0u64;
    let mut err = None;
    for_each_snbc(g, k, budget, |walk| {
        if err.is_some() {
            return;
        }
        // Order-zero visited subgraphs are cycles with mu1 = 1.
        let ord = visited_order(g, walk);
        if ord >= r as i64 || ord == 0 {
            count += u64::from(ord == 0 && 1.0 < nu - TANGLE_TOL);
            return;
        }
        let mut orbits: Vec<EdgeId> = walk.iter().map(|&e| e.min(g.inv(e))).collect();
        orbits.sort_unstable();
        orbits.dedup();
        let ok = match cache.get(&orbits) {
            Some(&ok) => ok,
            None => {
                let ok = match g.edge_induced(&orbits) {
                    Ok((s, _)) => mu1(&s) < nu - TANGLE_TOL,
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                };
                cache.insert(orbits, ok);
                ok
            }
        };
        if ok {
            count += 1;
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(count),
    }
}
