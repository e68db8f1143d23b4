//! Injective embeddings and isomorphisms of small multigraphs.
//!
//! The search maps a pattern into a host one ι-orbit at a time, extending from
//! already placed vertices, with optional integer labels on vertices and
//! directed edges that must agree.

use std::ops::ControlFlow;

use crate::bgraph::OrderedBGraph;
use crate::error::{Error, Result};
use crate::graph::{check_morphism, EdgeId, Graph, Morphism, VertexId};

/// Default cap on the pattern size for isomorphism queries.
pub const DEFAULT_EDGE_BOUND: usize = 16;

/// Vertex and directed-edge labels that an embedding must preserve.
#[derive(Debug, Clone, Copy)]
pub struct Labels<'a> {
    pub vertex: &'a [usize],
    pub edge: &'a [usize],
}

impl<'a> Labels<'a> {
    /// Labels induced by a projection to a base graph.
    pub fn from_projection(p: &'a Morphism) -> Labels<'a> {
        Labels { vertex: &p.vertex_map, edge: &p.edge_map }
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Root(VertexId),
    /// Map the orbit of this pattern edge; its tail is already placed.
    Edge(EdgeId),
}

struct Search<'a> {
    pattern: &'a Graph,
    host: &'a Graph,
    plabels: Option<Labels<'a>>,
    hlabels: Option<Labels<'a>>,
    steps: Vec<Step>,
    host_out: Vec<Vec<EdgeId>>,
    pdeg: Vec<usize>,
    hdeg: Vec<usize>,
    vmap: Vec<VertexId>,
    emap: Vec<EdgeId>,
    vused: Vec<bool>,
    eused: Vec<bool>,
}

const UNSET: usize = usize::MAX;

impl<'a> Search<'a> {
    fn new(pattern: &'a Graph, host: &'a Graph, plabels: Option<Labels<'a>>, hlabels: Option<Labels<'a>>) -> Self {
        let pdeg = pattern.degrees();
        let steps = plan(pattern, &pdeg);
        Search {
            pattern,
            host,
            plabels,
            hlabels,
            steps,
            host_out: host.out_edges(),
            pdeg,
            hdeg: host.degrees(),
            vmap: vec![UNSET; pattern.vertex_count()],
            emap: vec![UNSET; pattern.directed_edge_count()],
            vused: vec![false; host.vertex_count()],
            eused: vec![false; host.directed_edge_count()],
        }
    }

    fn vertex_ok(&self, pv: VertexId, hv: VertexId) -> bool {
        if self.vused[hv] || self.hdeg[hv] < self.pdeg[pv] {
            return false;
        }
        match (self.plabels, self.hlabels) {
            (Some(p), Some(h)) => p.vertex[pv] == h.vertex[hv],
            _ => true,
        }
    }

    fn edge_ok(&self, pe: EdgeId, he: EdgeId) -> bool {
        if self.eused[he] {
            return false;
        }
        let p = self.pattern;
        let h = self.host;
        if p.is_half_loop(pe) != h.is_half_loop(he) || p.is_self_loop(pe) != h.is_self_loop(he) {
            return false;
        }
        match (self.plabels, self.hlabels) {
            (Some(pl), Some(hl)) => pl.edge[pe] == hl.edge[he],
            _ => true,
        }
    }

    fn run<F: FnMut(&Morphism) -> ControlFlow<()>>(&mut self, depth: usize, f: &mut F) -> ControlFlow<()> {
        if depth == self.steps.len() {
            let m = Morphism { vertex_map: self.vmap.clone(), edge_map: self.emap.clone() };
            return f(&m);
        }
        match self.steps[depth] {
            Step::Root(pv) => {
                for hv in 0..self.host.vertex_count() {
                    if !self.vertex_ok(pv, hv) {
                        continue;
                    }
                    self.vmap[pv] = hv;
                    self.vused[hv] = true;
                    let r = self.run(depth + 1, f);
                    self.vused[hv] = false;
                    self.vmap[pv] = UNSET;
                    r?;
                }
            }
            Step::Edge(pe) => {
                let pt = self.pattern.tail(pe);
                let ph = self.pattern.head(pe);
                let pr = self.pattern.inv(pe);
                let ht = self.vmap[pt];
                let head_fixed = self.vmap[ph];
                for idx in 0..self.host_out[ht].len() {
                    let he = self.host_out[ht][idx];
                    if !self.edge_ok(pe, he) {
                        continue;
                    }
                    let hh = self.host.head(he);
                    let hr = self.host.inv(he);
                    if pr != pe && !self.edge_ok(pr, hr) {
                        continue;
                    }
                    let placing_head = head_fixed == UNSET;
                    if placing_head {
                        if !self.vertex_ok(ph, hh) {
                            continue;
                        }
                        self.vmap[ph] = hh;
                        self.vused[hh] = true;
                    } else if hh != head_fixed {
                        continue;
                    }
                    self.emap[pe] = he;
                    self.emap[pr] = hr;
                    self.eused[he] = true;
                    self.eused[hr] = true;
                    let r = self.run(depth + 1, f);
                    self.eused[he] = false;
                    self.eused[hr] = false;
                    self.emap[pe] = UNSET;
                    self.emap[pr] = UNSET;
                    if placing_head {
                        self.vused[hh] = false;
                        self.vmap[ph] = UNSET;
                    }
                    r?;
                }
            }
        }
        ControlFlow::Continue(())
    }
}

/// Visits components in turn, rooting each at a vertex of maximum degree and
/// then adding edges in breadth-first order from placed vertices.
fn plan(p: &Graph, deg: &[usize]) -> Vec<Step> {
    let out = p.out_edges();
    let mut placed = vec![false; p.vertex_count()];
    let mut orbit_done = vec![false; p.directed_edge_count()];
    let comp = p.components();
    let ncomp = p.component_count();
    let mut steps = Vec::new();
    for c in 0..ncomp {
        let root = (0..p.vertex_count())
            .filter(|&v| comp[v] == c)
            .max_by_key(|&v| (deg[v], std::cmp::Reverse(v)))
            .expect("components are nonempty");
        steps.push(Step::Root(root));
        placed[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            // Self-loops first: they only constrain, never branch on a new vertex.
            let mut edges: Vec<EdgeId> = out[v].clone();
            edges.sort_by_key(|&e| (!p.is_self_loop(e), e));
            for e in edges {
                if orbit_done[e] {
                    continue;
                }
                orbit_done[e] = true;
                orbit_done[p.inv(e)] = true;
                steps.push(Step::Edge(e));
                let h = p.head(e);
                if !placed[h] {
                    placed[h] = true;
                    queue.push_back(h);
                }
            }
        }
    }
    steps
}

/// Calls `f` on every injective label-preserving morphism `pattern -> host`.
pub fn for_each_embedding<F>(
    pattern: &Graph,
    host: &Graph,
    labels: Option<(Labels<'_>, Labels<'_>)>,
    mut f: F,
) where
    F: FnMut(&Morphism) -> ControlFlow<()>,
{
    let (pl, hl) = match labels {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    if pattern.vertex_count() > host.vertex_count() || pattern.directed_edge_count() > host.directed_edge_count() {
        return;
    }
    let mut s = Search::new(pattern, host, pl, hl);
    let _ = s.run(0, &mut f);
}

pub fn count_embeddings(pattern: &Graph, host: &Graph, labels: Option<(Labels<'_>, Labels<'_>)>) -> u64 {
    let mut count = 0u64;
    for_each_embedding(pattern, host, labels, |_| {
        count += 1;
        ControlFlow::Continue(())
    });
    count
}

pub fn find_embedding(pattern: &Graph, host: &Graph, labels: Option<(Labels<'_>, Labels<'_>)>) -> Option<Morphism> {
    let mut found = None;
    for_each_embedding(pattern, host, labels, |m| {
        found = Some(m.clone());
        ControlFlow::Break(())
    });
    found
}

/// Extra structure an isomorphism must respect.
#[derive(Debug, Clone, Copy)]
pub enum IsoMode<'a> {
    Plain,
    /// Both graphs carry projections to a common base.
    BGraph(&'a Morphism, &'a Morphism),
    /// Both graphs carry orderings; the isomorphism must respect them.
    Ordered(&'a OrderedBGraph, &'a OrderedBGraph),
}

fn same_shape(g1: &Graph, g2: &Graph) -> bool {
    g1.vertex_count() == g2.vertex_count()
        && g1.directed_edge_count() == g2.directed_edge_count()
        && g1.edge_count() == g2.edge_count()
}

/// Finds an isomorphism `g1 -> g2` respecting `mode`.
pub fn find_isomorphism(g1: &Graph, g2: &Graph, mode: IsoMode<'_>) -> Result<Option<Morphism>> {
    find_isomorphism_bounded(g1, g2, mode, DEFAULT_EDGE_BOUND)
}

pub fn find_isomorphism_bounded(g1: &Graph, g2: &Graph, mode: IsoMode<'_>, edge_bound: usize) -> Result<Option<Morphism>> {
    for g in [g1, g2] {
        if g.edge_count() > edge_bound {
            return Err(Error::SizeBoundExceeded(format!(
                "{} edges exceeds the isomorphism bound {edge_bound}",
                g.edge_count()
            )));
        }
    }
    if !same_shape(g1, g2) {
        return Ok(None);
    }
    match mode {
        IsoMode::Plain => Ok(find_embedding(g1, g2, None)),
        IsoMode::BGraph(p1, p2) => Ok(find_embedding(
            g1,
            g2,
            Some((Labels::from_projection(p1), Labels::from_projection(p2))),
        )),
        IsoMode::Ordered(o1, o2) => Ok(ordered_isomorphism(o1, o2)),
    }
}

/// The unique order-preserving candidate, if it is an isomorphism.
pub fn ordered_isomorphism(o1: &OrderedBGraph, o2: &OrderedBGraph) -> Option<Morphism> {
    let (g1, g2) = (&o1.graph, &o2.graph);
    if !same_shape(g1, g2) || o1.oriented_edges.len() != o2.oriented_edges.len() {
        return None;
    }
    let mut vertex_map = vec![0; g1.vertex_count()];
    for (a, b) in o1.vertex_order.iter().zip(&o2.vertex_order) {
        vertex_map[*a] = *b;
    }
    let mut edge_map = vec![0; g1.directed_edge_count()];
    for (&a, &b) in o1.oriented_edges.iter().zip(&o2.oriented_edges) {
        if g1.is_half_loop(a) != g2.is_half_loop(b) {
            return None;
        }
        edge_map[a] = b;
        edge_map[g1.inv(a)] = g2.inv(b);
    }
    let m = Morphism { vertex_map, edge_map };
    check_morphism(g1, g2, &m).ok()?;
    if let (Some(p1), Some(p2)) = (&o1.projection, &o2.projection) {
        let agrees = (0..g1.vertex_count()).all(|v| p1.vertex_map[v] == p2.vertex_map[m.vertex_map[v]])
            && (0..g1.directed_edge_count()).all(|e| p1.edge_map[e] == p2.edge_map[m.edge_map[e]]);
        if !agrees {
            return None;
        }
    }
    Some(m)
}

/// Number of automorphisms, optionally respecting a projection.
pub fn automorphism_count(g: &Graph, projection: Option<&Morphism>) -> u64 {
    match projection {
        Some(p) => {
            let l = Labels::from_projection(p);
            count_embeddings(g, g, Some((l, l)))
        }
        None => count_embeddings(g, g, None),
    }
}
