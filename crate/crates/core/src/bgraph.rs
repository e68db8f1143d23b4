//! Graphs over a base graph, optionally with vertex and edge orderings.

use crate::error::{Error, Result};
use crate::graph::{check_morphism, EdgeId, Graph, Morphism, MorphismKind, VertexId};

/// A graph together with a projection onto a base graph `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BGraph {
    pub graph: Graph,
    pub projection: Morphism,
}

impl BGraph {
    pub fn new(graph: Graph, projection: Morphism, base: &Graph) -> Result<BGraph> {
        check_morphism(&graph, base, &projection)?;
        Ok(BGraph { graph, projection })
    }

    pub fn kind(&self, base: &Graph) -> Result<MorphismKind> {
        check_morphism(&self.graph, base, &self.projection)
    }

    pub fn is_etale(&self, base: &Graph) -> Result<bool> {
        Ok(!matches!(self.kind(base)?, MorphismKind::Plain))
    }
}

/// An ordered graph, optionally over a base graph.
///
/// `vertex_order` lists every vertex once. `oriented_edges` lists one directed
/// edge of each ι-orbit (the orientation), in edge order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedBGraph {
    pub graph: Graph,
    pub projection: Option<Morphism>,
    pub vertex_order: Vec<VertexId>,
    pub oriented_edges: Vec<EdgeId>,
}

impl OrderedBGraph {
    pub fn new(
        graph: Graph,
        projection: Option<Morphism>,
        vertex_order: Vec<VertexId>,
        oriented_edges: Vec<EdgeId>,
    ) -> Result<OrderedBGraph> {
        let mut seen = vec![false; graph.vertex_count()];
        for &v in &vertex_order {
            graph.check_vertex(v)?;
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("vertex {v} repeated in order")));
            }
        }
        if vertex_order.len() != graph.vertex_count() {
            return Err(Error::InvalidArgument("vertex order misses vertices".into()));
        }
        let mut covered = vec![false; graph.directed_edge_count()];
        for &e in &oriented_edges {
            graph.check_edge(e)?;
            if covered[e] || covered[graph.inv(e)] {
                return Err(Error::InvalidArgument(format!("edge orbit of {e} repeated in order")));
            }
            covered[e] = true;
            covered[graph.inv(e)] = true;
        }
        if oriented_edges.len() != graph.edge_count() {
            return Err(Error::InvalidArgument("edge order misses edges".into()));
        }
        Ok(OrderedBGraph { graph, projection, vertex_order, oriented_edges })
    }

    /// Default ordering: ids in increasing order, canonical orientation.
    pub fn with_id_order(graph: Graph, projection: Option<Morphism>) -> OrderedBGraph {
        let vertex_order = (0..graph.vertex_count()).collect();
        let oriented_edges = graph.orientation();
        OrderedBGraph { graph, projection, vertex_order, oriented_edges }
    }

    pub fn bgraph(&self) -> Option<BGraph> {
        self.projection
            .as_ref()
            .map(|p| BGraph { graph: self.graph.clone(), projection: p.clone() })
    }

    /// Relabels so that vertex and edge ids follow the orderings.
    ///
    /// The `j`-th oriented edge receives the next free id and its reverse (if
    /// distinct) the id after it.
    pub fn canonical_relabel(&self) -> OrderedBGraph {
        self.canonical_relabel_with_maps().0
    }

    /// [`OrderedBGraph::canonical_relabel`] together with the old-to-new vertex and edge maps.
    pub fn canonical_relabel_with_maps(&self) -> (OrderedBGraph, Vec<VertexId>, Vec<EdgeId>) {
        let g = &self.graph;
        let mut vnew = vec![0; g.vertex_count()];
        for (i, &v) in self.vertex_order.iter().enumerate() {
            vnew[v] = i;
        }
        let mut order = Vec::with_capacity(g.directed_edge_count());
        for &e in &self.oriented_edges {
            order.push(e);
            if g.inv(e) != e {
                order.push(g.inv(e));
            }
        }
        let mut enew = vec![0; g.directed_edge_count()];
        for (i, &e) in order.iter().enumerate() {
            enew[e] = i;
        }
        let edges: Vec<(usize, usize)> = order.iter().map(|&e| (vnew[g.tail(e)], vnew[g.head(e)])).collect();
        let inv = order.iter().map(|&e| enew[g.inv(e)]).collect();
        let graph = Graph::from_parts(g.vertex_count(), &edges, inv).expect("relabeling preserves validity");
        let projection = self.projection.as_ref().map(|p| {
            let mut vm = vec![0; g.vertex_count()];
            for v in 0..g.vertex_count() {
                vm[vnew[v]] = p.vertex_map[v];
            }
            Morphism { vertex_map: vm, edge_map: order.iter().map(|&e| p.edge_map[e]).collect() }
        });
        let oriented_edges = self.oriented_edges.iter().map(|&e| enew[e]).collect();
        let relabeled =
            OrderedBGraph { graph, projection, vertex_order: (0..g.vertex_count()).collect(), oriented_edges };
        (relabeled, vnew, enew)
    }

    /// Deterministic key; equal keys exactly when an ordered isomorphism exists
    /// (projections included when present).
    pub fn key(&self) -> String {
        let c = self.canonical_relabel();
        let g = &c.graph;
        let mut s = format!("v{}", g.vertex_count());
        if let Some(p) = &c.projection {
            s.push_str(":[");
            s.push_str(&p.vertex_map.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            s.push(']');
        }
        for &e in &c.oriented_edges {
            let kind = if g.is_half_loop(e) { 'h' } else { '>' };
            s.push_str(&format!(";{}{}{}", g.tail(e), kind, g.head(e)));
            if let Some(p) = &c.projection {
                s.push_str(&format!("@{}", p.edge_map[e]));
            }
        }
        s
    }
}
