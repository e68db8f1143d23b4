//! Multigraphs with an orientation-reversing edge involution.
//!
//! Directed edges carry dense ids `0..m`. The involution pairs each directed
//! edge with its reverse; a fixed point is a half-loop.

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub tail: VertexId,
    pub head: VertexId,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    vertex_count: usize,
    edges: Vec<DirectedEdge>,
    involution: Vec<EdgeId>,
}

/// How a morphism sits over its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphismKind {
    Plain,
    Etale,
    /// Locally bijective; carries the common fibre size when all fibres agree.
    Covering(Option<usize>),
}

/// Vertex and directed-edge maps between two graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morphism {
    pub vertex_map: Vec<VertexId>,
    pub edge_map: Vec<EdgeId>,
}

impl Morphism {
    pub fn identity(g: &Graph) -> Morphism {
        Morphism {
            vertex_map: (0..g.vertex_count()).collect(),
            edge_map: (0..g.directed_edge_count()).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Morphism) -> Morphism {
        Morphism {
            vertex_map: self.vertex_map.iter().map(|&v| other.vertex_map[v]).collect(),
            edge_map: self.edge_map.iter().map(|&e| other.edge_map[e]).collect(),
        }
    }
}

impl Graph {
    /// Validates and builds a graph.
    pub fn new(vertex_count: usize, edges: Vec<DirectedEdge>, involution: Vec<EdgeId>) -> Result<Graph> {
        let m = edges.len();
        if involution.len() != m {
            return Err(Error::NotInvolution(format!(
                "involution has {} entries for {} edges",
                involution.len(),
                m
            )));
        }
        for (id, e) in edges.iter().enumerate() {
            for v in [e.tail, e.head] {
                if v >= vertex_count {
                    return Err(Error::InvalidVertex { vertex: v, count: vertex_count });
                }
            }
            let j = involution[id];
            if j >= m {
                return Err(Error::NotInvolution(format!("edge {id} maps to missing edge {j}")));
            }
            if involution[j] != id {
                return Err(Error::NotInvolution(format!("edge {id} -> {j} -> {}", involution[j])));
            }
        }
        for (id, e) in edges.iter().enumerate() {
            let r = edges[involution[id]];
            if r.head != e.tail || r.tail != e.head {
                return Err(Error::NotOrientationReversing(id));
            }
        }
        Ok(Graph { vertex_count, edges, involution })
    }

    /// Builds from `(tail, head)` pairs.
    pub fn from_parts(vertex_count: usize, edges: &[(VertexId, VertexId)], involution: Vec<EdgeId>) -> Result<Graph> {
        let edges = edges.iter().map(|&(tail, head)| DirectedEdge { tail, head }).collect();
        Graph::new(vertex_count, edges, involution)
    }

    pub fn empty() -> Graph {
        Graph { vertex_count: 0, edges: Vec::new(), involution: Vec::new() }
    }

    /// One vertex carrying `whole_loops` whole-loops (ids `2i`, `2i+1`) then `half_loops` half-loops.
    pub fn bouquet(whole_loops: usize, half_loops: usize) -> Graph {
        let mut b = GraphBuilder::new(1);
        for _ in 0..whole_loops {
            b.add_edge(0, 0);
        }
        for _ in 0..half_loops {
            b.add_half_loop(0);
        }
        b.build()
    }

    /// Cycle of length `k >= 1`; `cycle(1)` is a single whole-loop and `cycle(2)` a digon.
    pub fn cycle(k: usize) -> Graph {
        assert!(k >= 1, "cycle length must be positive");
        let mut b = GraphBuilder::new(k);
        for i in 0..k {
            b.add_edge(i, (i + 1) % k);
        }
        b.build()
    }

    /// Path with `len` edges on `len + 1` vertices.
    pub fn path(len: usize) -> Graph {
        let mut b = GraphBuilder::new(len + 1);
        for i in 0..len {
            b.add_edge(i, i + 1);
        }
        b.build()
    }

    /// Two branch vertices `0` and `1` joined by three internally disjoint paths.
    pub fn theta(l1: usize, l2: usize, l3: usize) -> Graph {
        let mut b = GraphBuilder::new(2);
        for len in [l1, l2, l3] {
            assert!(len >= 1, "theta arm lengths must be positive");
            b.add_path(0, 1, len);
        }
        b.build()
    }

    /// Two vertices joined by `count` parallel edges.
    pub fn dipole(count: usize) -> Graph {
        let mut b = GraphBuilder::new(2);
        for _ in 0..count {
            b.add_edge(0, 1);
        }
        b.build()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn directed_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn involution(&self) -> &[EdgeId] {
        &self.involution
    }

    pub fn tail(&self, e: EdgeId) -> VertexId {
        self.edges[e].tail
    }

    pub fn head(&self, e: EdgeId) -> VertexId {
        self.edges[e].head
    }

    pub fn inv(&self, e: EdgeId) -> EdgeId {
        self.involution[e]
    }

    pub fn is_half_loop(&self, e: EdgeId) -> bool {
        self.involution[e] == e
    }

    pub fn is_whole_loop(&self, e: EdgeId) -> bool {
        self.involution[e] != e && self.edges[e].tail == self.edges[e].head
    }

    pub fn is_self_loop(&self, e: EdgeId) -> bool {
        self.edges[e].tail == self.edges[e].head
    }

    pub fn half_loop_count(&self) -> usize {
        (0..self.edges.len()).filter(|&e| self.is_half_loop(e)).count()
    }

    pub fn has_half_loops(&self) -> bool {
        (0..self.edges.len()).any(|e| self.is_half_loop(e))
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v < self.vertex_count {
            Ok(())
        } else {
            Err(Error::InvalidVertex { vertex: v, count: self.vertex_count })
        }
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e < self.edges.len() {
            Ok(())
        } else {
            Err(Error::InvalidEdge { edge: e, count: self.edges.len() })
        }
    }

    /// The canonical orientation: the smaller id of each ι-orbit, in increasing order.
    pub fn orientation(&self) -> Vec<EdgeId> {
        (0..self.edges.len()).filter(|&e| self.involution[e] >= e).collect()
    }

    /// Number of undirected edges (ι-orbits).
    pub fn edge_count(&self) -> usize {
        self.orientation().len()
    }

    /// `#E - #V`.
    pub fn order(&self) -> i64 {
        self.edge_count() as i64 - self.vertex_count as i64
    }

    /// Number of directed edges with head `v`; a half-loop counts once.
    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self.degrees()[v])
    }

    /// Like [`Graph::degree`] but a half-loop counts twice.
    pub fn degree_prime(&self, v: VertexId) -> Result<usize> {
        self.check_vertex(v)?;
        Ok(self.degrees_prime()[v])
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count];
        for e in &self.edges {
            d[e.head] += 1;
        }
        d
    }

    pub fn degrees_prime(&self) -> Vec<usize> {
        let mut d = self.degrees();
        for (id, e) in self.edges.iter().enumerate() {
            if self.involution[id] == id {
                d[e.head] += 1;
            }
        }
        d
    }

    /// The common degree if the graph is regular and nonempty.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degrees();
        let first = *d.first()?;
        d.iter().all(|&x| x == first).then_some(first)
    }

    /// Directed edges leaving each vertex, in id order.
    pub fn out_edges(&self) -> Vec<Vec<EdgeId>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for (id, e) in self.edges.iter().enumerate() {
            out[e.tail].push(id);
        }
        out
    }

    /// Edges `e'` with `t(e') = h(e)` and `e' != ι e`, for each `e`.
    pub fn nb_successors(&self) -> Vec<Vec<EdgeId>> {
        let out = self.out_edges();
        (0..self.edges.len())
            .map(|e| {
                out[self.edges[e].head]
                    .iter()
                    .copied()
                    .filter(|&f| f != self.involution[e])
                    .collect()
            })
            .collect()
    }

    pub fn is_pruned(&self) -> bool {
        self.degrees().iter().all(|&d| d >= 2)
    }

    /// Connected component index of every vertex, numbered by smallest vertex.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.vertex_count];
        let out = self.out_edges();
        let mut next = 0;
        for s in 0..self.vertex_count {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &e in &out[v] {
                    let h = self.edges[e].head;
                    if comp[h] == usize::MAX {
                        comp[h] = next;
                        stack.push(h);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().copied().max().map_or(0, |c| c + 1)
    }

    /// True for graphs with exactly one component; the empty graph is not connected.
    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Subgraph on the kept vertices and kept directed edges, relabeled in increasing id order.
    ///
    /// Kept edges must come in ι-closed sets with kept endpoints. Returns the
    /// subgraph together with the inclusion morphism into `self`.
    pub fn subgraph(&self, keep_vertex: &[bool], keep_edge: &[bool]) -> Result<(Graph, Morphism)> {
        let mut vnew = vec![usize::MAX; self.vertex_count];
        let mut vold = Vec::new();
        for v in 0..self.vertex_count {
            if keep_vertex[v] {
                vnew[v] = vold.len();
                vold.push(v);
            }
        }
        let mut enew = vec![usize::MAX; self.edges.len()];
        let mut eold = Vec::new();
        for e in 0..self.edges.len() {
            if keep_edge[e] {
                if !keep_edge[self.involution[e]] {
                    return Err(Error::NotInvolution(format!("edge {e} kept without its reverse")));
                }
                let de = self.edges[e];
                if !keep_vertex[de.tail] || !keep_vertex[de.head] {
                    return Err(Error::InvalidVertex { vertex: de.tail, count: vold.len() });
                }
                enew[e] = eold.len();
                eold.push(e);
            }
        }
        let edges = eold
            .iter()
            .map(|&e| DirectedEdge { tail: vnew[self.edges[e].tail], head: vnew[self.edges[e].head] })
            .collect();
        let involution = eold.iter().map(|&e| enew[self.involution[e]]).collect();
        let g = Graph::new(vold.len(), edges, involution)?;
        Ok((g, Morphism { vertex_map: vold, edge_map: eold }))
    }

    /// Subgraph spanned by a set of directed edges (closed under ι) and their endpoints.
    pub fn edge_induced(&self, edges: &[EdgeId]) -> Result<(Graph, Morphism)> {
        let mut keep_e = vec![false; self.edges.len()];
        let mut keep_v = vec![false; self.vertex_count];
        for &e in edges {
            self.check_edge(e)?;
            keep_e[e] = true;
            keep_e[self.involution[e]] = true;
            keep_v[self.edges[e].tail] = true;
            keep_v[self.edges[e].head] = true;
        }
        self.subgraph(&keep_v, &keep_e)
    }

    /// Removes vertices of degree at most one until none remain.
    pub fn prune(&self) -> Graph {
        self.prune_with_map().0
    }

    pub fn prune_with_map(&self) -> (Graph, Morphism) {
        let mut alive_v = vec![true; self.vertex_count];
        let mut alive_e = vec![true; self.edges.len()];
        let mut deg = self.degrees();
        let out = self.out_edges();
        let mut stack: Vec<VertexId> = (0..self.vertex_count).filter(|&v| deg[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if !alive_v[v] {
                continue;
            }
            alive_v[v] = false;
            for &e in &out[v] {
                if !alive_e[e] {
                    continue;
                }
                let r = self.involution[e];
                alive_e[e] = false;
                alive_e[r] = false;
                let h = self.edges[e].head;
                if h != v {
                    deg[h] -= 1;
                    if alive_v[h] && deg[h] <= 1 {
                        stack.push(h);
                    }
                }
            }
        }
        self.subgraph(&alive_v, &alive_e).expect("pruning keeps an ι-closed subgraph")
    }

    /// Disjoint union; `other` is relabeled after `self`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let nv = self.vertex_count;
        let ne = self.edges.len();
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| DirectedEdge { tail: e.tail + nv, head: e.head + nv }));
        let mut involution = self.involution.clone();
        involution.extend(other.involution.iter().map(|&e| e + ne));
        Graph { vertex_count: nv + other.vertex_count, edges, involution }
    }

    /// Integer adjacency matrix (row-major) counting directed edges `v -> v'`.
    pub fn adjacency_counts(&self) -> Vec<Vec<i64>> {
        let mut a = vec![vec![0i64; self.vertex_count]; self.vertex_count];
        for e in &self.edges {
            a[e.tail][e.head] += 1;
        }
        a
    }
}

/// Incremental construction with automatic ι pairing.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    vertex_count: usize,
    edges: Vec<DirectedEdge>,
    involution: Vec<EdgeId>,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> GraphBuilder {
        GraphBuilder { vertex_count, edges: Vec::new(), involution: Vec::new() }
    }

    pub fn add_vertex(&mut self) -> VertexId {
        self.vertex_count += 1;
        self.vertex_count - 1
    }

    /// Adds `u -> v` and its reverse; returns the id of `u -> v` (the reverse is the next id).
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> EdgeId {
        let id = self.edges.len();
        self.edges.push(DirectedEdge { tail: u, head: v });
        self.edges.push(DirectedEdge { tail: v, head: u });
        self.involution.push(id + 1);
        self.involution.push(id);
        id
    }

    pub fn add_half_loop(&mut self, v: VertexId) -> EdgeId {
        let id = self.edges.len();
        self.edges.push(DirectedEdge { tail: v, head: v });
        self.involution.push(id);
        id
    }

    /// Adds a path of `len` edges from `u` to `v` through fresh interior vertices.
    pub fn add_path(&mut self, u: VertexId, v: VertexId, len: usize) {
        let mut prev = u;
        for step in 0..len {
            let next = if step + 1 == len { v } else { self.add_vertex() };
            self.add_edge(prev, next);
            prev = next;
        }
    }

    pub fn build(self) -> Graph {
        Graph::new(self.vertex_count, self.edges, self.involution).expect("builder output is valid")
    }
}

/// Classifies a candidate morphism.
pub fn check_morphism(source: &Graph, target: &Graph, m: &Morphism) -> Result<MorphismKind> {
    if m.vertex_map.len() != source.vertex_count() || m.edge_map.len() != source.directed_edge_count() {
        return Err(Error::NotAMorphism("map sizes do not match the source".into()));
    }
    if let Some(&v) = m.vertex_map.iter().find(|&&v| v >= target.vertex_count()) {
        return Err(Error::NotAMorphism(format!("vertex image {v} out of range")));
    }
    if let Some(&e) = m.edge_map.iter().find(|&&e| e >= target.directed_edge_count()) {
        return Err(Error::NotAMorphism(format!("edge image {e} out of range")));
    }
    for e in 0..source.directed_edge_count() {
        let f = m.edge_map[e];
        if target.tail(f) != m.vertex_map[source.tail(e)] || target.head(f) != m.vertex_map[source.head(e)] {
            return Err(Error::NotAMorphism(format!("edge {e} does not respect tails and heads")));
        }
        if target.inv(f) != m.edge_map[source.inv(e)] {
            return Err(Error::NotAMorphism(format!("edge {e} does not commute with the involution")));
        }
    }
    // For each source vertex, compare outgoing edges with those of its image.
    let src_out = source.out_edges();
    let tgt_out = target.out_edges();
    let mut injective = true;
    let mut surjective = true;
    let mut seen = vec![usize::MAX; target.directed_edge_count()];
    for v in 0..source.vertex_count() {
        let mut hits = 0;
        for &e in &src_out[v] {
            let f = m.edge_map[e];
            if seen[f] == v {
                injective = false;
            } else {
                seen[f] = v;
                hits += 1;
            }
        }
        if hits < tgt_out[m.vertex_map[v]].len() {
            surjective = false;
        }
    }
    // Heads at v are the ι-images of tails at v, so tail-side injectivity covers both sides.
    if !injective {
        return Ok(MorphismKind::Plain);
    }
    if !surjective {
        return Ok(MorphismKind::Etale);
    }
    let mut fibre = vec![0usize; target.vertex_count()];
    for &w in &m.vertex_map {
        fibre[w] += 1;
    }
    let degree = fibre.first().copied().filter(|&d| fibre.iter().all(|&x| x == d));
    Ok(MorphismKind::Covering(degree))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let g = Graph::from_parts(1, &[(0, 0), (0, 0)], vec![1, 0]).unwrap();
        assert_eq!(g, Graph::bouquet(1, 0));
        let h = Graph::from_parts(1, &[(0, 0)], vec![0]).unwrap();
        assert_eq!(h, Graph::bouquet(0, 1));
        let bad = Graph::from_parts(2, &[(0, 1)], vec![0]);
        assert_eq!(bad, Err(Error::NotOrientationReversing(0)));
        let not_inv = Graph::from_parts(1, &[(0, 0), (0, 0), (0, 0)], vec![1, 2, 0]);
        assert!(matches!(not_inv, Err(Error::NotInvolution(_))));
    }

    #[test]
    fn bouquet_degrees_and_order() {
        let b = Graph::bouquet(2, 0);
        assert_eq!(b.directed_edge_count(), 4);
        assert_eq!(b.degree(0), Ok(4));
        let h = Graph::bouquet(0, 3);
        assert_eq!(h.degree(0), Ok(3));
        assert_eq!(h.degree_prime(0), Ok(6));
        assert_eq!(Graph::bouquet(0, 0).order(), -1);
        assert_eq!(Graph::bouquet(4, 0).order(), 3);
        assert_eq!(Graph::dipole(3).order(), 1);
        assert_eq!(Graph::path(4).order(), -1);
        assert_eq!(Graph::path(1).degree(0), Ok(1));
        assert!(Graph::bouquet(1, 0).degree(1).is_err());
    }

    #[test]
    fn pruning() {
        assert!(Graph::cycle(5).is_pruned());
        assert!(!Graph::bouquet(0, 1).is_pruned());
        assert!(Graph::bouquet(2, 0).is_pruned());
        assert_eq!(Graph::path(5).prune(), Graph::empty());
        let mut b = GraphBuilder::new(3);
        b.add_edge(0, 1);
        b.add_edge(1, 2);
        b.add_edge(2, 0);
        let tip = b.add_vertex();
        b.add_edge(2, tip);
        let tip2 = b.add_vertex();
        b.add_edge(tip, tip2);
        let g = b.build();
        let p = g.prune();
        assert_eq!(p, Graph::cycle(3));
        assert_eq!(p.prune(), p);
    }

    #[test]
    fn identity_is_covering_of_degree_one() {
        let g = Graph::theta(1, 2, 3);
        assert_eq!(check_morphism(&g, &g, &Morphism::identity(&g)), Ok(MorphismKind::Covering(Some(1))));
    }

    #[test]
    fn morphism_rejects_bad_maps() {
        let b = Graph::bouquet(1, 0);
        let c = Graph::cycle(2);
        // Swapping the two loop directions on one edge but not its reverse breaks ι.
        let m = Morphism { vertex_map: vec![0, 0], edge_map: vec![0, 0, 0, 1] };
        assert!(matches!(check_morphism(&c, &b, &m), Err(Error::NotAMorphism(_))));
        let ok = Morphism { vertex_map: vec![0, 0], edge_map: vec![0, 1, 0, 1] };
        assert_eq!(check_morphism(&c, &b, &ok), Ok(MorphismKind::Covering(Some(2))));
    }
}
