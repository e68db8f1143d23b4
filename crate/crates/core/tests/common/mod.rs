#![allow(dead_code)]

use std::collections::HashSet;
use std::ops::ControlFlow;

use nbcover::bgraph::BGraph;
use nbcover::covers::{CoordinatizedCover, PermutationAssignment};
use nbcover::graph::{check_morphism, MorphismKind};
use nbcover::iso::{for_each_embedding, Labels};
use nbcover::tangles::enumerate_connected_graphs;
use nbcover::{Graph, GraphBuilder, Morphism};
use rand::Rng;

/// A random multigraph on at most `max_vertices` vertices with loops, half-loops and parallel edges.
pub fn random_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> Graph {
    let nv = rng.gen_range(1..=max_vertices);
    let mut b = GraphBuilder::new(nv);
    for _ in 0..rng.gen_range(0..=nv + 4) {
        let u = rng.gen_range(0..nv);
        let v = if rng.gen_bool(0.15) { u } else { rng.gen_range(0..nv) };
        b.add_edge(u, v);
    }
    for _ in 0..rng.gen_range(0..=2) {
        b.add_half_loop(rng.gen_range(0..nv));
    }
    b.build()
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        q[x] = i;
    }
    q
}

/// Every permutation-model cover of a half-loop-free base of degree `n`.
pub fn all_covers(base: &Graph, n: usize) -> Vec<CoordinatizedCover> {
    let orient = base.orientation();
    let perms = permutations(n);
    let mut out = Vec::new();
    let mut choice = vec![0usize; orient.len()];
    loop {
        let mut sigma = vec![Vec::new(); base.directed_edge_count()];
        for (j, &e) in orient.iter().enumerate() {
            let p = &perms[choice[j]];
            sigma[base.inv(e)] = invert(p);
            sigma[e] = p.clone();
        }
        out.push(CoordinatizedCover::new(base, PermutationAssignment { n, sigma }).unwrap());
        let mut i = 0;
        loop {
            if i == choice.len() {
                return out;
            }
            choice[i] += 1;
            if choice[i] < perms.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Connected étale `B`-graphs without half-loops having `1..=max_edges` edges.
///
/// The first edge of each graph is sent to base edge 0, so labelings that
/// differ by a symmetry of a bouquet base appear once.
pub fn etale_bgraphs(base: &Graph, max_edges: usize) -> Vec<BGraph> {
    let mut out = Vec::new();
    let m = base.directed_edge_count();
    for e in 1..=max_edges {
        for v in 1..=e + 1 {
            for s in enumerate_connected_graphs(v, e, 0, false) {
                let orient = s.orientation();
                let mut labels = vec![0usize; orient.len()];
                loop {
                    let mut edge_map = vec![0; s.directed_edge_count()];
                    for (j, &x) in orient.iter().enumerate() {
                        edge_map[x] = labels[j];
                        edge_map[s.inv(x)] = base.inv(labels[j]);
                    }
                    let mut vertex_map = vec![usize::MAX; s.vertex_count()];
                    for x in 0..s.directed_edge_count() {
                        vertex_map[s.tail(x)] = base.tail(edge_map[x]);
                    }
                    if vertex_map.iter().all(|&x| x != usize::MAX) {
                        let p = Morphism { vertex_map, edge_map };
                        if matches!(check_morphism(&s, base, &p), Ok(k) if k != MorphismKind::Plain) {
                            out.push(BGraph { graph: s.clone(), projection: p });
                        }
                    }
                    let mut i = 1;
                    loop {
                        if i >= labels.len() {
                            break;
                        }
                        labels[i] += 1;
                        if labels[i] < m {
                            break;
                        }
                        labels[i] = 0;
                        i += 1;
                    }
                    if i >= labels.len() {
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Number of distinct `B`-subgraphs of the cover that are images of `s`.
pub fn distinct_images(s: &BGraph, cover: &CoordinatizedCover) -> u64 {
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let labels = (Labels::from_projection(&s.projection), Labels::from_projection(&cover.projection));
    for_each_embedding(&s.graph, &cover.total, Some(labels), |m| {
        let mut edges = m.edge_map.clone();
        edges.sort_unstable();
        let mut key = m.vertex_map.clone();
        key.sort_unstable();
        key.push(usize::MAX);
        key.extend(edges);
        seen.insert(key);
        ControlFlow::Continue(())
    });
    seen.len() as u64
}

/// `Trace(A^k)` by integer matrix powers.
pub fn adjacency_trace(g: &Graph, k: usize) -> i128 {
    let a = g.adjacency_counts();
    let n = a.len();
    let mut p: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    for _ in 0..k {
        let mut q = vec![vec![0i128; n]; n];
        for i in 0..n {
            for l in 0..n {
                if p[i][l] == 0 {
                    continue;
                }
                for j in 0..n {
                    q[i][j] += p[i][l] * a[l][j] as i128;
                }
            }
        }
        p = q;
    }
    (0..n).map(|i| p[i][i]).sum()
}
