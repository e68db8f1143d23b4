//! Tangles, bounded catalogs of minimal tangles, and tangle-power formulas.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;

use crate::covers::CoordinatizedCover;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, Morphism};
use crate::iso::find_embedding;
use crate::spectra::{self, mu1, perron_root};
use crate::walks::{beads, suppress_beads, vlg, EdgeLengths};

/// Absolute tolerance with which `μ₁ = ν` counts as a tangle.
pub const TANGLE_TOL: f64 = 1e-10;
/// Largest edge bound accepted by [`enumerate_minimal_tangles`].
pub const MAX_EDGE_BOUND: usize = 14;
/// Largest core (bead-free) vertex count the enumerator will generate.
pub const MAX_CORE_VERTICES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangleQuery {
    pub nu: f64,
    pub r: usize,
}

impl TangleQuery {
    pub fn new(nu: f64, r: usize) -> Result<TangleQuery> {
        if !(nu > 1.0) || !nu.is_finite() {
            return Err(Error::InvalidArgument(format!("nu must exceed 1, got {nu}")));
        }
        if r < 1 {
            return Err(Error::InvalidArgument("r must be at least 1".into()));
        }
        Ok(TangleQuery { nu, r })
    }
}

/// Connected, pruned, `μ₁ ≥ ν` (up to [`TANGLE_TOL`]) and order below `r`.
pub fn is_tangle(psi: &Graph, q: &TangleQuery) -> bool {
    psi.is_connected() && psi.is_pruned() && psi.order() < q.r as i64 && mu1(psi) >= q.nu - TANGLE_TOL
}

/// `M(x)[e][e'] = x^{k(e')}` for non-backtracking successors `e'` of `e` in `t`.
fn weighted_line_matrix(t: &Graph, k: &EdgeLengths, x: f64) -> DMatrix<f64> {
    let m = t.directed_edge_count();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for (e, succ) in t.nb_successors().into_iter().enumerate() {
        for f in succ {
            mat[(e, f)] = x.powi(k.0[f] as i32);
        }
    }
    mat
}

/// `ρ(M(1/ν))`; below 1 exactly when `μ₁(vlg(t, k)) < ν`.
pub fn vlg_weighted_radius(t: &Graph, k: &EdgeLengths, nu: f64) -> f64 {
    perron_root(&weighted_line_matrix(t, k, 1.0 / nu))
}

/// `μ₁` of the variable-length graph without building it.
///
/// Closed non-backtracking walks in the VLG correspond to those in `t`
/// weighted by total length, so `μ₁ = 1/x` where `ρ(M(x)) = 1`.
pub fn vlg_mu1(t: &Graph, k: &EdgeLengths) -> f64 {
    let at = |x: f64| perron_root(&weighted_line_matrix(t, k, x));
    if at(1.0) < 1.0 - 1e-12 {
        // No cycles reachable: H is nilpotent.
        return if at(1.0) == 0.0 { 0.0 } else { mu1(&vlg(t, k).expect("valid lengths").graph) };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    1.0 / (0.5 * (lo + hi))
}

/// Whether `μ₁(vlg(t, k)) < ν - TANGLE_TOL`, using the weighted radius away from ties.
pub fn vlg_mu1_below(t: &Graph, k: &EdgeLengths, nu: f64) -> bool {
    let rho = vlg_weighted_radius(t, k, nu);
    if (rho - 1.0).abs() > 1e-7 {
        return rho < 1.0;
    }
    vlg_mu1(t, k) < nu - TANGLE_TOL
}

/// Canonical string of an edge-labelled multigraph under vertex relabeling.
///
/// Each orbit becomes `(min end, max end, kind, label)` with kind 0 for
/// half-loops; the lexicographically least sorted list over all vertex
/// permutations (restricted to degree-compatible ones) is the form.
pub fn canonical_form(t: &Graph, labels: &EdgeLengths) -> String {
    let nv = t.vertex_count();
    let deg = t.degrees_prime();
    let half: Vec<usize> = (0..nv)
        .map(|v| (0..t.directed_edge_count()).filter(|&e| t.is_half_loop(e) && t.tail(e) == v).count())
        .collect();
    let loops: Vec<usize> = (0..nv)
        .map(|v| t.orientation().iter().filter(|&&e| t.is_whole_loop(e) && t.tail(e) == v).count())
        .collect();
    let inv_key = |v: usize| (std::cmp::Reverse(deg[v]), half[v], loops[v]);
    let mut verts: Vec<usize> = (0..nv).collect();
    verts.sort_by_key(|&v| inv_key(v));
    // Blocks of equal invariants may be permuted among themselves.
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for &v in &verts {
        match blocks.last_mut() {
            Some(b) if inv_key(b[0]) == inv_key(v) => b.push(v),
            _ => blocks.push(vec![v]),
        }
    }
    let orbits: Vec<(usize, usize, usize, usize)> = t
        .orientation()
        .into_iter()
        .map(|e| (t.tail(e), t.head(e), usize::from(!t.is_half_loop(e)), labels.0[e]))
        .collect();
    let mut best: Option<Vec<(usize, usize, usize, usize)>> = None;
    let mut pos = vec![0usize; nv];
    let mut perms_per_block: Vec<Vec<Vec<usize>>> = blocks.iter().map(|b| permutations(b)).collect();
    let mut choice = vec![0usize; blocks.len()];
    loop {
        let mut next = 0;
        for (bi, perms) in perms_per_block.iter().enumerate() {
            for &v in &perms[choice[bi]] {
                pos[v] = next;
                next += 1;
            }
        }
        let mut enc: Vec<(usize, usize, usize, usize)> = orbits
            .iter()
            .map(|&(a, b, kind, l)| {
                let (x, y) = (pos[a], pos[b]);
                (x.min(y), x.max(y), kind, l)
            })
            .collect();
        enc.sort_unstable();
        if best.as_ref().map_or(true, |b| enc < *b) {
            best = Some(enc);
        }
        // Advance the mixed-radix counter over block permutations.
        let mut i = 0;
        loop {
            if i == choice.len() {
                perms_per_block.clear();
                break;
            }
            choice[i] += 1;
            if choice[i] < perms_per_block[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if perms_per_block.is_empty() {
            break;
        }
    }
    let best = best.unwrap_or_default();
    let mut s = format!("{nv}");
    for (a, b, kind, l) in best {
        s.push_str(&format!("|{a},{b},{kind},{l}"));
    }
    s
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Canonical form of a plain graph: suppress all beads and label edges by length.
pub fn graph_canonical_form(g: &Graph) -> String {
    let is_bead = beads(g);
    let comps = g.component_count();
    let set: Vec<usize> = (0..g.vertex_count()).filter(|&v| is_bead[v]).collect();
    if comps == 1 && set.len() == g.vertex_count() {
        return format!("cycle{}", g.vertex_count());
    }
    match suppress_beads(g, &set) {
        Ok(sup) => canonical_form(&sup.graph, &sup.lengths),
        Err(_) => canonical_form(g, &EdgeLengths(vec![1; g.directed_edge_count()])),
    }
}

/// Connected graphs in which every vertex has `deg' ≥ 3`, with `v` vertices and order `m`.
pub fn enumerate_cores(v: usize, m: usize) -> Vec<Graph> {
    enumerate_connected_graphs(v, m + v, 3, true)
}

/// Connected graphs with `v` vertices, `orbits` edges and every `deg' ≥ min_degree`, up to isomorphism.
///
/// Generated with non-increasing `deg'` along vertex ids (every isomorphism
/// class has such a labelling) and deduplicated by canonical form.
pub fn enumerate_connected_graphs(v: usize, orbits: usize, min_degree: usize, half_loops: bool) -> Vec<Graph> {
    let min_degree = if v > 1 { min_degree.max(1) } else { min_degree };
    if v == 0 || min_degree * v > 2 * orbits {
        return Vec::new();
    }
    // Slots grouped by their smallest vertex: half-loop, whole-loop, then edges to larger vertices.
    #[derive(Clone, Copy)]
    enum Slot {
        Half(usize),
        Loop(usize),
        Edge(usize, usize),
    }
    let mut slots = Vec::new();
    let mut last_slot_of = vec![0usize; v];
    for a in 0..v {
        if half_loops {
            slots.push(Slot::Half(a));
        }
        slots.push(Slot::Loop(a));
        for b in a + 1..v {
            slots.push(Slot::Edge(a, b));
        }
        last_slot_of[a] = slots.len() - 1;
    }
    let max_deg = 2 * orbits - min_degree * (v - 1);
    let mut counts = vec![0usize; slots.len()];
    let mut deg = vec![0usize; v];
    let mut seen = HashSet::new();
    let mut out = Vec::new();

    struct Ctx<'a> {
        slots: &'a [Slot],
        last_slot_of: &'a [usize],
        max_deg: usize,
        min_degree: usize,
        v: usize,
    }

    fn rec(
        i: usize,
        remaining: usize,
        cx: &Ctx<'_>,
        counts: &mut [usize],
        deg: &mut [usize],
        seen: &mut HashSet<String>,
        out: &mut Vec<Graph>,
    ) {
        if i == cx.slots.len() {
            if remaining != 0 {
                return;
            }
            let mut b = GraphBuilder::new(cx.v);
            for (s, &c) in cx.slots.iter().zip(counts.iter()) {
                for _ in 0..c {
                    match *s {
                        Slot::Half(a) => {
                            b.add_half_loop(a);
                        }
                        Slot::Loop(a) => {
                            b.add_edge(a, a);
                        }
                        Slot::Edge(a, c2) => {
                            b.add_edge(a, c2);
                        }
                    }
                }
            }
            let g = b.build();
            if !g.is_connected() {
                return;
            }
            let key = canonical_form(&g, &EdgeLengths(vec![1; g.directed_edge_count()]));
            if seen.insert(key) {
                out.push(g);
            }
            return;
        }
        let (a, b, per) = match cx.slots[i] {
            Slot::Half(a) | Slot::Loop(a) => (a, a, 2),
            Slot::Edge(a, b) => (a, b, 1),
        };
        for c in 0..=remaining {
            let add_a = per * c;
            let add_b = if a == b { 0 } else { c };
            if deg[a] + add_a > cx.max_deg || deg[b] + add_b > cx.max_deg {
                break;
            }
            deg[a] += add_a;
            deg[b] += add_b;
            counts[i] = c;
            let finishing = cx.last_slot_of[a] == i;
            let ok = !finishing || (deg[a] >= cx.min_degree && (a == 0 || deg[a] <= deg[a - 1]));
            if ok {
                rec(i + 1, remaining - c, cx, counts, deg, seen, out);
            }
            deg[a] -= add_a;
            deg[b] -= add_b;
            counts[i] = 0;
        }
    }
    let cx = Ctx { slots: &slots, last_slot_of: &last_slot_of, max_deg, min_degree, v };
    rec(0, orbits, &cx, &mut counts, &mut deg, &mut seen, &mut out);
    out
}

/// Largest core vertex count needed for order `m` within `edge_bound` edges.
fn core_vertex_limit(m: usize, edge_bound: usize) -> usize {
    (2 * m).min(edge_bound.saturating_sub(m))
}

/// Calls `f(t, lengths)` for every length vector on `t` with total at most `bound`.
fn for_each_length_vector<F: FnMut(&EdgeLengths)>(t: &Graph, bound: usize, mut f: F) {
    let orient = t.orientation();
    let free: Vec<usize> = orient.iter().copied().filter(|&e| !t.is_half_loop(e)).collect();
    let fixed = orient.len() - free.len();
    if orient.len() > bound {
        return;
    }
    let mut values = vec![1usize; free.len()];
    let budget = bound - fixed;
    fn rec<F: FnMut(&[usize])>(i: usize, left: usize, values: &mut Vec<usize>, f: &mut F) {
        if i == values.len() {
            f(values);
            return;
        }
        let rest = values.len() - i - 1;
        let mut l = 1;
        while l + rest <= left {
            values[i] = l;
            rec(i + 1, left - l, values, f);
            l += 1;
        }
    }
    rec(0, budget, &mut values, &mut |vals: &[usize]| {
        f(&EdgeLengths::from_orbits(t, &free, vals));
    });
}

/// All connected pruned graphs with at most `max_edges` edges, up to isomorphism.
pub fn enumerate_pruned_connected(max_edges: usize) -> Result<Vec<Graph>> {
    let mut out: Vec<Graph> = (1..=max_edges).map(Graph::cycle).collect();
    for m in 1..max_edges {
        let vmax = core_vertex_limit(m, max_edges);
        if vmax > MAX_CORE_VERTICES {
            return Err(Error::BoundTooLarge(format!("order {m} needs cores with {vmax} vertices")));
        }
        let mut seen = HashSet::new();
        for v in 1..=vmax {
            for t in enumerate_cores(v, m) {
                for_each_length_vector(&t, max_edges, |k| {
                    if seen.insert(canonical_form(&t, k)) {
                        out.push(vlg(&t, k).expect("valid lengths").graph);
                    }
                });
            }
        }
    }
    Ok(out)
}

/// Minimal tangles up to a size bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TangleCatalog {
    pub query: TangleQuery,
    pub edge_bound: usize,
    pub tangles: Vec<Graph>,
    pub mu1_values: Vec<f64>,
    /// Completeness holds only for tangles with at most this many edges.
    pub complete_up_to: usize,
}

/// Whether some connected component of the pruned graph is a tangle.
fn contains_tangle_component(g: &Graph, q: &TangleQuery) -> bool {
    let p = g.prune();
    if p.vertex_count() == 0 {
        return false;
    }
    let comp = p.components();
    (0..p.component_count()).any(|c| {
        let keep_v: Vec<bool> = comp.iter().map(|&x| x == c).collect();
        let keep_e: Vec<bool> = (0..p.directed_edge_count()).map(|e| comp[p.tail(e)] == c).collect();
        let (sub, _) = p.subgraph(&keep_v, &keep_e).expect("component subgraph");
        is_tangle(&sub, q)
    })
}

/// A tangle is minimal when deleting any edge leaves no tangle behind.
fn is_minimal_tangle(psi: &Graph, q: &TangleQuery) -> bool {
    psi.orientation().into_iter().all(|e| {
        let mut keep_e = vec![true; psi.directed_edge_count()];
        keep_e[e] = false;
        keep_e[psi.inv(e)] = false;
        let keep_v = vec![true; psi.vertex_count()];
        let (sub, _) = psi.subgraph(&keep_v, &keep_e).expect("edge deletion");
        !contains_tangle_component(&sub, q)
    })
}

pub fn enumerate_minimal_tangles(q: &TangleQuery, edge_bound: usize) -> Result<TangleCatalog> {
    if edge_bound > MAX_EDGE_BOUND {
        return Err(Error::BoundTooLarge(format!("edge bound {edge_bound} exceeds {MAX_EDGE_BOUND}")));
    }
    // Order-0 graphs are cycles with μ₁ = 1 < ν, so tangles have order 1..r-1.
    let orders: Vec<usize> = (1..q.r.min(edge_bound)).filter(|&m| (2 * m + 1) as f64 + TANGLE_TOL >= q.nu).collect();
    for &m in &orders {
        let vmax = core_vertex_limit(m, edge_bound);
        if vmax > MAX_CORE_VERTICES {
            return Err(Error::BoundTooLarge(format!("order {m} needs cores with {vmax} vertices")));
        }
    }
    let mut found: BTreeMap<(usize, String), (Graph, f64)> = BTreeMap::new();
    for m in orders {
        let vmax = core_vertex_limit(m, edge_bound);
        for v in 1..=vmax {
            for t in enumerate_cores(v, m) {
                for_each_length_vector(&t, edge_bound, |k| {
                    if vlg_mu1_below(&t, k, q.nu) {
                        return;
                    }
                    let key = canonical_form(&t, k);
                    let edges = k.total(&t);
                    if found.contains_key(&(edges, key.clone())) {
                        return;
                    }
                    let g = vlg(&t, k).expect("valid lengths").graph;
                    if is_tangle(&g, q) && is_minimal_tangle(&g, q) {
                        let mu = mu1(&g);
                        found.insert((edges, key), (g, mu));
                    }
                });
            }
        }
    }
    let (tangles, mu1_values) = found.into_values().unzip();
    Ok(TangleCatalog { query: *q, edge_bound, tangles, mu1_values, complete_up_to: edge_bound })
}

#[derive(Debug, Clone, PartialEq)]
pub enum TangleVerdict {
    Yes { witness: Graph, embedding: Morphism },
    NoUpToBound(usize),
}

pub fn has_tangles(g: &Graph, q: &TangleQuery, catalog: &TangleCatalog) -> Result<TangleVerdict> {
    if catalog.query != *q {
        return Err(Error::CatalogMismatch);
    }
    let (pruned, incl) = g.prune_with_map();
    for psi in &catalog.tangles {
        if let Some(m) = find_embedding(psi, &pruned, None) {
            debug_assert!(is_tangle(psi, q));
            return Ok(TangleVerdict::Yes { witness: psi.clone(), embedding: m.then(&incl) });
        }
    }
    Ok(TangleVerdict::NoUpToBound(catalog.complete_up_to))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauVariant {
    M,
    MPrime,
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `m(d) = ⌊(√(d-1) - 1)/2⌋ + 1` and `m'(d) = ⌊√(d-1) - 1⌋ + 1`, in integer arithmetic.
pub fn tau_tang_formula(d: usize, variant: TauVariant) -> Result<usize> {
    if d < 3 {
        return Err(Error::DomainError(format!("degree {d} < 3")));
    }
    // For s = ⌊√(d-1)⌋: ⌊(√(d-1) - 1)/2⌋ = ⌊(s - 1)/2⌋.
    let s = isqrt(d - 1);
    Ok(match variant {
        TauVariant::M => (s - 1) / 2 + 1,
        TauVariant::MPrime => s,
    })
}

/// Extremal `μ₁` values among connected pruned graphs of order `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mu1OrderExtremes {
    pub bound_general: f64,
    pub witness_general: Graph,
    pub bound_no_whole_loops: f64,
    pub witness_no_whole_loops: Graph,
}

impl Mu1OrderExtremes {
    /// Largest deviation of the witnesses' `μ₁` from the bounds.
    pub fn verify(&self) -> f64 {
        let a = (mu1(&self.witness_general) - self.bound_general).abs();
        let b = (mu1(&self.witness_no_whole_loops) - self.bound_no_whole_loops).abs();
        a.max(b)
    }
}

pub fn mu1_order_extremes(m: usize) -> Mu1OrderExtremes {
    Mu1OrderExtremes {
        bound_general: (2 * m + 1) as f64,
        witness_general: Graph::bouquet(m + 1, 0),
        bound_no_whole_loops: (m + 1) as f64,
        witness_no_whole_loops: Graph::dipole(m + 2),
    }
}

/// Comparison of a predicted new eigenvalue with the observed new spectral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct NonAlonCheck {
    pub predicted: f64,
    pub observed: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Whether a cover containing `s` has new spectral radius at least `μ₁(s) + (d-1)/μ₁(s) - ε`.
pub fn tangle_forces_nonalon_check(s: &Graph, cover: &CoordinatizedCover, epsilon: f64) -> Result<NonAlonCheck> {
    let d = cover.base.regular_degree().filter(|&d| d >= 3).ok_or(Error::NotRegularBase)?;
    let mu = mu1(s);
    if mu < ((d - 1) as f64).sqrt() {
        return Err(Error::PreconditionViolated(format!("mu1(s) = {mu} < sqrt(d-1)")));
    }
    if find_embedding(s, &cover.total, None).is_none() {
        return Err(Error::SubgraphNotPresent);
    }
    let predicted = spectra::hashimoto_to_adjacency_bound(d, mu)?;
    let (_, _, new) = spectra::new_adjacency_spectrum(cover, false)?;
    let observed = new.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let margin = observed - (predicted - epsilon);
    Ok(NonAlonCheck { predicted, observed, margin, holds: margin >= 0.0 })
}
