//! Walks, strictly non-backtracking closed (SNBC) walk enumeration, visited
//! subgraphs, bead suppression, homotopy types, and variable-length graphs.

use std::collections::{BTreeMap, HashMap};

use crate::bgraph::OrderedBGraph;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, GraphBuilder, Morphism, VertexId};

/// Default number of DFS states an enumeration may visit.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Walk {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<EdgeId>,
}

impl Walk {
    /// Walk starting at `start` along `edges`.
    pub fn new(g: &Graph, start: VertexId, edges: Vec<EdgeId>) -> Result<Walk> {
        g.check_vertex(start)?;
        let mut vertices = vec![start];
        for (i, &e) in edges.iter().enumerate() {
            g.check_edge(e)?;
            let at = *vertices.last().expect("nonempty");
            if g.tail(e) != at {
                return Err(Error::InvalidWalk(format!("step {i}: edge {e} does not leave vertex {at}")));
            }
            vertices.push(g.head(e));
        }
        Ok(Walk { vertices, edges })
    }

    /// Walk along nonempty `edges`, starting at the tail of the first.
    pub fn from_edges(g: &Graph, edges: Vec<EdgeId>) -> Result<Walk> {
        let first = *edges.first().ok_or_else(|| Error::InvalidWalk("empty edge list".into()))?;
        g.check_edge(first)?;
        Walk::new(g, g.tail(first), edges)
    }

    /// Walk through a vertex sequence, taking the first edge id joining each consecutive pair.
    pub fn from_vertex_sequence(g: &Graph, seq: &[VertexId]) -> Result<Walk> {
        let out = g.out_edges();
        let mut edges = Vec::new();
        for w in seq.windows(2) {
            let e = out
                .get(w[0])
                .and_then(|o| o.iter().copied().find(|&e| g.head(e) == w[1]))
                .ok_or_else(|| Error::InvalidWalk(format!("no edge {} -> {}", w[0], w[1])))?;
            edges.push(e);
        }
        Walk::new(g, seq[0], edges)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }

    pub fn is_non_backtracking(&self, g: &Graph) -> bool {
        self.edges.windows(2).all(|w| g.inv(w[0]) != w[1])
    }

    pub fn is_snbc(&self, g: &Graph) -> bool {
        !self.edges.is_empty()
            && self.is_closed()
            && self.is_non_backtracking(g)
            && g.inv(*self.edges.last().expect("nonempty")) != self.edges[0]
    }
}

/// Calls `f` on the edge sequence of every SNBC walk of length `k`, in
/// lexicographic order of edge ids. Returns the number of walks.
pub fn for_each_snbc<F: FnMut(&[EdgeId])>(g: &Graph, k: usize, budget: u64, mut f: F) -> Result<u64> {
    if k == 0 {
        return Ok(0);
    }
    let succ = g.nb_successors();
    let mut path = Vec::with_capacity(k);
    let mut visited = 0u64;
    let mut count = 0u64;
    for e0 in 0..g.directed_edge_count() {
        path.clear();
        path.push(e0);
        // Stack of next-successor indices per depth.
        let mut idx = vec![0usize; k];
        loop {
            let depth = path.len();
            if depth == k {
                let last = path[k - 1];
                if succ[last].contains(&e0) {
                    count += 1;
                    f(&path);
                }
                path.pop();
                if path.is_empty() {
                    break;
                }
                continue;
            }
            let top = path[depth - 1];
            if idx[depth - 1] < succ[top].len() {
                let next = succ[top][idx[depth - 1]];
                idx[depth - 1] += 1;
                visited += 1;
                if visited > budget {
                    return Err(Error::BudgetExceeded(format!("more than {budget} enumeration states")));
                }
                idx[depth] = 0;
                path.push(next);
            } else {
                path.pop();
                if path.is_empty() {
                    break;
                }
            }
        }
    }
    Ok(count)
}

pub fn enumerate_snbc(g: &Graph, k: usize) -> Result<Vec<Walk>> {
    enumerate_snbc_bounded(g, k, DEFAULT_BUDGET)
}

pub fn enumerate_snbc_bounded(g: &Graph, k: usize, budget: u64) -> Result<Vec<Walk>> {
    let mut out = Vec::new();
    for_each_snbc(g, k, budget, |edges| {
        out.push(Walk::from_edges(g, edges.to_vec()).expect("enumerated walks are valid"));
    })?;
    Ok(out)
}

pub fn snbc_count(g: &Graph, k: usize) -> Result<u64> {
    for_each_snbc(g, k, DEFAULT_BUDGET, |_| {})
}

/// `Trace(H^k)` for `k = 1..=kmax` by depth-first counting of closed non-backtracking walks.
pub fn nb_traces(g: &Graph, kmax: usize) -> Vec<u64> {
    let succ = g.nb_successors();
    let mut counts = vec![0u64; kmax];
    if kmax == 0 {
        return counts;
    }
    let mut stack: Vec<(EdgeId, usize)> = Vec::new();
    for e0 in 0..g.directed_edge_count() {
        // (edge, depth) with depth = number of edges on the path ending at `edge`.
        stack.push((e0, 1));
        while let Some((e, depth)) = stack.pop() {
            if succ[e].contains(&e0) {
                counts[depth - 1] += 1;
            }
            if depth < kmax {
                for &f in &succ[e] {
                    stack.push((f, depth + 1));
                }
            }
        }
    }
    counts
}

/// The subgraph traversed by a walk, relabeled in first-encounter order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitedSubgraph {
    /// Vertex and edge ids follow the first-encounter orders.
    pub ordered: OrderedBGraph,
    /// Host vertex of each subgraph vertex.
    pub host_vertices: Vec<VertexId>,
    /// Host directed edge of each subgraph directed edge.
    pub host_edges: Vec<EdgeId>,
    /// The walk in subgraph edge ids.
    pub walk_edges: Vec<EdgeId>,
}

pub fn visited_subgraph(g: &Graph, w: &Walk, projection: Option<&Morphism>) -> VisitedSubgraph {
    let mut vnew: HashMap<VertexId, VertexId> = HashMap::new();
    let mut host_vertices = Vec::new();
    let mut enew: HashMap<EdgeId, EdgeId> = HashMap::new();
    let mut host_edges = Vec::new();
    let mut oriented = Vec::new();
    let touch_vertex = |v: VertexId, vnew: &mut HashMap<VertexId, VertexId>, hv: &mut Vec<VertexId>| {
        *vnew.entry(v).or_insert_with(|| {
            hv.push(v);
            hv.len() - 1
        })
    };
    touch_vertex(w.vertices[0], &mut vnew, &mut host_vertices);
    let mut walk_edges = Vec::with_capacity(w.edges.len());
    for &e in &w.edges {
        touch_vertex(g.tail(e), &mut vnew, &mut host_vertices);
        touch_vertex(g.head(e), &mut vnew, &mut host_vertices);
        if !enew.contains_key(&e) {
            let id = host_edges.len();
            enew.insert(e, id);
            host_edges.push(e);
            oriented.push(id);
            let r = g.inv(e);
            if r != e {
                enew.insert(r, id + 1);
                host_edges.push(r);
            }
        }
        walk_edges.push(enew[&e]);
    }
    let edges: Vec<(usize, usize)> = host_edges.iter().map(|&e| (vnew[&g.tail(e)], vnew[&g.head(e)])).collect();
    let inv = host_edges.iter().map(|&e| enew[&g.inv(e)]).collect();
    let graph = Graph::from_parts(host_vertices.len(), &edges, inv).expect("visited subgraph is a graph");
    let proj = projection.map(|p| Morphism {
        vertex_map: host_vertices.iter().map(|&v| p.vertex_map[v]).collect(),
        edge_map: host_edges.iter().map(|&e| p.edge_map[e]).collect(),
    });
    let vertex_order = (0..host_vertices.len()).collect();
    VisitedSubgraph {
        ordered: OrderedBGraph { graph, projection: proj, vertex_order, oriented_edges: oriented },
        host_vertices,
        host_edges,
        walk_edges,
    }
}

/// `#E - #V` of the subgraph visited by a closed walk given as an edge sequence.
pub fn visited_order(g: &Graph, edges: &[EdgeId]) -> i64 {
    let mut orbits: Vec<EdgeId> = edges.iter().map(|&e| e.min(g.inv(e))).collect();
    orbits.sort_unstable();
    orbits.dedup();
    let mut verts: Vec<VertexId> = edges.iter().map(|&e| g.tail(e)).collect();
    verts.sort_unstable();
    verts.dedup();
    orbits.len() as i64 - verts.len() as i64
}

/// SNBC counts split by visited-subgraph order: `(counts for 0..r, count with order >= r)`.
pub fn snbc_counts_by_order(g: &Graph, k: usize, r: usize) -> Result<(Vec<u64>, u64)> {
    let mut counts = vec![0u64; r];
    let mut ge = 0u64;
    for_each_snbc(g, k, DEFAULT_BUDGET, |edges| {
        let ord = visited_order(g, edges);
        if ord >= 0 && (ord as usize) < r {
            counts[ord as usize] += 1;
        } else {
            ge += 1;
        }
    })?;
    Ok((counts, ge))
}

/// Per-directed-edge lengths, equal on ι-pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeLengths(pub Vec<usize>);

impl EdgeLengths {
    pub fn validate(&self, t: &Graph) -> Result<()> {
        if self.0.len() != t.directed_edge_count() {
            return Err(Error::InvalidArgument(format!(
                "{} lengths for {} directed edges",
                self.0.len(),
                t.directed_edge_count()
            )));
        }
        for e in 0..t.directed_edge_count() {
            let k = self.0[e];
            if k == 0 || k != self.0[t.inv(e)] {
                return Err(Error::InvalidArgument(format!("bad length {k} on edge {e}")));
            }
            if t.is_half_loop(e) && k != 1 {
                return Err(Error::HalfLoopLengthNotOne(e));
            }
        }
        Ok(())
    }

    /// Builds lengths from values listed along `orientation`.
    pub fn from_orbits(t: &Graph, orientation: &[EdgeId], values: &[usize]) -> EdgeLengths {
        let mut v = vec![1; t.directed_edge_count()];
        for (&e, &k) in orientation.iter().zip(values) {
            v[e] = k;
            v[t.inv(e)] = k;
        }
        EdgeLengths(v)
    }

    pub fn along(&self, orientation: &[EdgeId]) -> Vec<usize> {
        orientation.iter().map(|&e| self.0[e]).collect()
    }

    pub fn total(&self, t: &Graph) -> usize {
        t.orientation().iter().map(|&e| self.0[e]).sum()
    }
}

/// Result of suppressing a bead set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suppression {
    pub graph: Graph,
    pub lengths: EdgeLengths,
    /// The beaded path (in source edge ids) behind each directed edge of `graph`.
    pub paths: Vec<Vec<EdgeId>>,
    /// Source vertex of each vertex of `graph`.
    pub vertex_map: Vec<VertexId>,
}

/// Vertices of degree two not incident to a self-loop.
pub fn beads(s: &Graph) -> Vec<bool> {
    let deg = s.degrees();
    let mut on_loop = vec![false; s.vertex_count()];
    for e in 0..s.directed_edge_count() {
        if s.is_self_loop(e) {
            on_loop[s.tail(e)] = true;
        }
    }
    (0..s.vertex_count()).map(|v| deg[v] == 2 && !on_loop[v]).collect()
}

pub fn suppress_beads(s: &Graph, bead_set: &[VertexId]) -> Result<Suppression> {
    let is_bead_vertex = beads(s);
    let mut in_set = vec![false; s.vertex_count()];
    for &v in bead_set {
        s.check_vertex(v)?;
        if !is_bead_vertex[v] {
            return Err(Error::NotProperBeadSet(format!("vertex {v} is not a bead")));
        }
        in_set[v] = true;
    }
    let comp = s.components();
    let ncomp = s.component_count();
    for c in 0..ncomp {
        if (0..s.vertex_count()).filter(|&v| comp[v] == c).all(|v| in_set[v]) {
            return Err(Error::NotProperBeadSet("a cycle component lies entirely in the bead set".into()));
        }
    }
    let out = s.out_edges();
    let mut vmap_new = vec![usize::MAX; s.vertex_count()];
    let mut vertex_map = Vec::new();
    for v in 0..s.vertex_count() {
        if !in_set[v] {
            vmap_new[v] = vertex_map.len();
            vertex_map.push(v);
        }
    }
    let mut paths: Vec<Vec<EdgeId>> = Vec::new();
    let mut first_edge_to_path: HashMap<EdgeId, usize> = HashMap::new();
    for e in 0..s.directed_edge_count() {
        if in_set[s.tail(e)] {
            continue;
        }
        let mut p = vec![e];
        let mut last = e;
        while in_set[s.head(last)] {
            let v = s.head(last);
            let next = out[v]
                .iter()
                .copied()
                .find(|&f| f != s.inv(last))
                .expect("a bead has two edges");
            p.push(next);
            last = next;
        }
        first_edge_to_path.insert(e, paths.len());
        paths.push(p);
    }
    let edges: Vec<(usize, usize)> = paths
        .iter()
        .map(|p| (vmap_new[s.tail(p[0])], vmap_new[s.head(*p.last().expect("nonempty"))]))
        .collect();
    let inv: Vec<usize> = paths
        .iter()
        .map(|p| first_edge_to_path[&s.inv(*p.last().expect("nonempty"))])
        .collect();
    let lengths = EdgeLengths(paths.iter().map(|p| p.len()).collect());
    let graph = Graph::from_parts(vertex_map.len(), &edges, inv)?;
    Ok(Suppression { graph, lengths, paths, vertex_map })
}

/// An ordered graph `T` obtained as the reduction of a walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomotopyType {
    pub ordered: OrderedBGraph,
}

impl HomotopyType {
    pub fn graph(&self) -> &Graph {
        &self.ordered.graph
    }

    pub fn key(&self) -> String {
        self.ordered.key()
    }

    /// Lengths listed in the edge order of `T`.
    pub fn lengths_in_order(&self, k: &EdgeLengths) -> Vec<usize> {
        k.along(&self.ordered.oriented_edges)
    }

    /// The ordered graph built from a plain graph with its id order.
    pub fn from_graph(t: Graph) -> HomotopyType {
        HomotopyType { ordered: OrderedBGraph::with_id_order(t, None) }
    }
}

/// Homotopy type of a closed non-backtracking walk with its edge lengths.
///
/// Every bead of the visited subgraph is suppressed except the first vertex of
/// the walk. `T` inherits the first-encounter orders: a directed edge of `T` is
/// oriented, and ranked, by the first traversal of its beaded path.
pub fn homotopy_type(g: &Graph, w: &Walk) -> Result<(HomotopyType, EdgeLengths)> {
    if !w.is_non_backtracking(g) {
        return Err(Error::NotNonBacktracking);
    }
    if !w.is_closed() || w.is_empty() {
        return Err(Error::InvalidWalk("homotopy types are defined here for closed walks".into()));
    }
    let vs = visited_subgraph(g, w, None);
    homotopy_type_of_visited(&vs)
}

pub fn homotopy_type_of_visited(vs: &VisitedSubgraph) -> Result<(HomotopyType, EdgeLengths)> {
    let s = &vs.ordered.graph;
    let is_bead = beads(s);
    let bead_set: Vec<VertexId> = (1..s.vertex_count()).filter(|&v| is_bead[v]).collect();
    let sup = suppress_beads(s, &bead_set)?;
    let mut loc = vec![(usize::MAX, 0usize); s.directed_edge_count()];
    for (r, p) in sup.paths.iter().enumerate() {
        for (i, &e) in p.iter().enumerate() {
            loc[e] = (r, i);
        }
    }
    let rg = &sup.graph;
    let mut seen = vec![false; rg.directed_edge_count()];
    let mut oriented = Vec::new();
    for &e in &vs.walk_edges {
        let (r, pos) = loc[e];
        if pos == 0 && !seen[r] {
            seen[r] = true;
            seen[rg.inv(r)] = true;
            oriented.push(r);
        }
    }
    let ordered = OrderedBGraph::new(rg.clone(), None, (0..rg.vertex_count()).collect(), oriented)?;
    let (canon, _vnew, enew) = ordered.canonical_relabel_with_maps();
    let mut lengths = vec![0; rg.directed_edge_count()];
    for (r, &t) in enew.iter().enumerate() {
        lengths[t] = sup.lengths.0[r];
    }
    Ok((HomotopyType { ordered: canon }, EdgeLengths(lengths)))
}

/// Number of traversals, in either direction, of each edge of the walk's homotopy type, in edge order.
pub fn traversal_counts(vs: &VisitedSubgraph) -> Result<Vec<usize>> {
    let s = &vs.ordered.graph;
    let is_bead = beads(s);
    let bead_set: Vec<VertexId> = (1..s.vertex_count()).filter(|&v| is_bead[v]).collect();
    let sup = suppress_beads(s, &bead_set)?;
    let r = &sup.graph;
    let mut starts = vec![usize::MAX; s.directed_edge_count()];
    for (i, p) in sup.paths.iter().enumerate() {
        starts[p[0]] = i;
    }
    let mut orbit_rank = vec![usize::MAX; r.directed_edge_count()];
    let mut counts: Vec<usize> = Vec::new();
    for &e in &vs.walk_edges {
        let i = starts[e];
        if i == usize::MAX {
            continue;
        }
        if orbit_rank[i] == usize::MAX {
            orbit_rank[i] = counts.len();
            orbit_rank[r.inv(i)] = counts.len();
            counts.push(0);
        }
        counts[orbit_rank[i]] += 1;
    }
    Ok(counts)
}

/// A variable-length graph built on `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vlg {
    pub graph: Graph,
    /// The newly introduced bead vertices.
    pub beads: Vec<VertexId>,
    /// Path in `graph` realizing each directed edge of `t`.
    pub paths: Vec<Vec<EdgeId>>,
}

/// Replaces each edge of length `l` by a path of `l` edges through `l - 1` new beads.
///
/// Vertices of `t` keep their ids; orbits are expanded in increasing id order.
pub fn vlg(t: &Graph, k: &EdgeLengths) -> Result<Vlg> {
    k.validate(t)?;
    let mut b = GraphBuilder::new(t.vertex_count());
    let mut paths = vec![Vec::new(); t.directed_edge_count()];
    let mut beads = Vec::new();
    for e in t.orientation() {
        if t.is_half_loop(e) {
            paths[e] = vec![b.add_half_loop(t.tail(e))];
            continue;
        }
        let len = k.0[e];
        let mut forward = Vec::with_capacity(len);
        let mut prev = t.tail(e);
        for step in 0..len {
            let next = if step + 1 == len {
                t.head(e)
            } else {
                let v = b.add_vertex();
                beads.push(v);
                v
            };
            forward.push(b.add_edge(prev, next));
            prev = next;
        }
        paths[t.inv(e)] = forward.iter().rev().map(|&f| f + 1).collect();
        paths[e] = forward;
    }
    Ok(Vlg { graph: b.build(), beads, paths })
}

/// Filter on the edge lengths of a homotopy type, listed in edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LengthFilter {
    Any,
    Exact(Vec<usize>),
    AtLeast(Vec<usize>),
}

impl LengthFilter {
    pub fn accepts(&self, lengths: &[usize]) -> bool {
        match self {
            LengthFilter::Any => true,
            LengthFilter::Exact(v) => v.as_slice() == lengths,
            LengthFilter::AtLeast(v) => v.len() == lengths.len() && v.iter().zip(lengths).all(|(a, b)| b >= a),
        }
    }
}

/// SNBC walks of length `k` of homotopy type `t` whose lengths pass `filter`.
pub fn snbc_by_type(g: &Graph, k: usize, t: &HomotopyType, filter: &LengthFilter) -> Result<u64> {
    let key = t.key();
    let mut count = 0u64;
    let mut err = None;
    for_each_snbc(g, k, DEFAULT_BUDGET, |edges| {
        if err.is_some() {
            return;
        }
        let w = Walk::from_edges(g, edges.to_vec()).expect("valid walk");
        match homotopy_type(g, &w) {
            Ok((ht, lens)) => {
                if ht.key() == key && filter.accepts(&ht.lengths_in_order(&lens)) {
                    count += 1;
                }
            }
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(count),
    }
}

/// One row of a walk census.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CensusKey {
    pub order: i64,
    pub type_key: String,
    pub lengths: Vec<usize>,
}

/// SNBC walks of length `k` grouped by order, homotopy type, and lengths.
pub fn walk_census(g: &Graph, k: usize, budget: u64) -> Result<BTreeMap<CensusKey, u64>> {
    let mut out: BTreeMap<CensusKey, u64> = BTreeMap::new();
    for_each_snbc(g, k, budget, |edges| {
        let w = Walk::from_edges(g, edges.to_vec()).expect("valid walk");
        let vs = visited_subgraph(g, &w, None);
        let (ht, lens) = homotopy_type_of_visited(&vs).expect("SNBC walks have homotopy types");
        let key = CensusKey {
            order: vs.ordered.graph.order(),
            lengths: ht.lengths_in_order(&lens),
            type_key: ht.key(),
        };
        *out.entry(key).or_insert(0) += 1;
    })?;
    Ok(out)
}

/// Unordered shape of a connected pruned graph after suppressing all beads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Cycle,
    FigureEight,
    Barbell,
    Theta,
    Other,
}

pub fn classify_shape(s: &Graph) -> Shape {
    let is_bead = beads(s);
    if s.vertex_count() > 0 && is_bead.iter().all(|&b| b) || (s.vertex_count() == 1 && s.edge_count() == 1 && !s.has_half_loops()) {
        return Shape::Cycle;
    }
    let set: Vec<VertexId> = (0..s.vertex_count()).filter(|&v| is_bead[v]).collect();
    let Ok(sup) = suppress_beads(s, &set) else { return Shape::Other };
    let t = &sup.graph;
    if t.has_half_loops() {
        return Shape::Other;
    }
    let loops = t.orientation().iter().filter(|&&e| t.is_whole_loop(e)).count();
    match (t.vertex_count(), t.edge_count(), loops) {
        (1, 2, 2) => Shape::FigureEight,
        (2, 3, 2) => Shape::Barbell,
        (2, 3, 0) => Shape::Theta,
        _ => Shape::Other,
    }
}
