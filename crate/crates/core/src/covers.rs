//! Coordinatized covers and the six basic random models.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bgraph::{BGraph, OrderedBGraph};
use crate::error::{Error, Result};
use crate::graph::{check_morphism, DirectedEdge, EdgeId, Graph, Morphism, MorphismKind};
use crate::iso::{for_each_embedding, Labels};

/// `sigma[e][i]` is the image of `i` under the permutation attached to directed edge `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationAssignment {
    pub n: usize,
    pub sigma: Vec<Vec<usize>>,
}

impl PermutationAssignment {
    /// Checks permutation shape, `σ(ιe) = σ(e)⁻¹`, and involutions on half-loops.
    pub fn validate(&self, base: &Graph) -> Result<()> {
        let n = self.n;
        if self.sigma.len() != base.directed_edge_count() {
            return Err(Error::InvalidArgument(format!(
                "assignment has {} permutations for {} directed edges",
                self.sigma.len(),
                base.directed_edge_count()
            )));
        }
        for (e, p) in self.sigma.iter().enumerate() {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::InvalidArgument(format!("sigma({e}) is not a permutation of [{n}]")));
            }
        }
        for e in 0..base.directed_edge_count() {
            let p = &self.sigma[e];
            let q = &self.sigma[base.inv(e)];
            if (0..n).any(|i| q[p[i]] != i) {
                return Err(Error::InvalidArgument(format!("sigma(inv {e}) is not sigma({e}) inverse")));
            }
        }
        Ok(())
    }

    /// The identity assignment of degree `n`.
    pub fn identity(base: &Graph, n: usize) -> PermutationAssignment {
        PermutationAssignment { n, sigma: vec![(0..n).collect(); base.directed_edge_count()] }
    }
}

/// A degree-`n` cover with vertices `(v, i) ↦ v·n + i` and directed edges `(e, i) ↦ e·n + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinatizedCover {
    pub base: Graph,
    pub n: usize,
    pub assignment: PermutationAssignment,
    pub total: Graph,
    pub projection: Morphism,
}

impl CoordinatizedCover {
    pub fn new(base: &Graph, assignment: PermutationAssignment) -> Result<CoordinatizedCover> {
        assignment.validate(base)?;
        let n = assignment.n;
        let m = base.directed_edge_count();
        let mut edges = Vec::with_capacity(m * n);
        let mut involution = Vec::with_capacity(m * n);
        for e in 0..m {
            let s = &assignment.sigma[e];
            for (i, &si) in s.iter().enumerate() {
                edges.push(DirectedEdge { tail: base.tail(e) * n + i, head: base.head(e) * n + si });
                involution.push(base.inv(e) * n + si);
            }
        }
        let total = Graph::new(base.vertex_count() * n, edges, involution)?;
        let projection = Morphism {
            vertex_map: (0..base.vertex_count() * n).map(|x| x / n.max(1)).collect(),
            edge_map: (0..m * n).map(|x| x / n.max(1)).collect(),
        };
        Ok(CoordinatizedCover { base: base.clone(), n, assignment, total, projection })
    }

    pub fn vertex(&self, v: usize, i: usize) -> usize {
        v * self.n + i
    }

    pub fn edge(&self, e: EdgeId, i: usize) -> EdgeId {
        e * self.n + i
    }

    pub fn as_bgraph(&self) -> BGraph {
        BGraph { graph: self.total.clone(), projection: self.projection.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Permutation,
    PermInvolutionEven,
    PermInvolutionOdd,
    Cycle,
    CycleInvolutionEven,
    CycleInvolutionOdd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Permutation,
        ModelKind::PermInvolutionEven,
        ModelKind::PermInvolutionOdd,
        ModelKind::Cycle,
        ModelKind::CycleInvolutionEven,
        ModelKind::CycleInvolutionOdd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Permutation => "perm",
            ModelKind::PermInvolutionEven => "perm-inv-even",
            ModelKind::PermInvolutionOdd => "perm-inv-odd",
            ModelKind::Cycle => "cycle",
            ModelKind::CycleInvolutionEven => "cycle-inv-even",
            ModelKind::CycleInvolutionOdd => "cycle-inv-odd",
        }
    }

    pub fn allows_half_loops(self) -> bool {
        !matches!(self, ModelKind::Permutation | ModelKind::Cycle)
    }

    pub fn uses_full_cycles(self) -> bool {
        matches!(self, ModelKind::Cycle | ModelKind::CycleInvolutionEven | ModelKind::CycleInvolutionOdd)
    }

    /// `Some(true)` for even kinds, `Some(false)` for odd kinds.
    pub fn parity(self) -> Option<bool> {
        match self {
            ModelKind::PermInvolutionEven | ModelKind::CycleInvolutionEven => Some(true),
            ModelKind::PermInvolutionOdd | ModelKind::CycleInvolutionOdd => Some(false),
            _ => None,
        }
    }

    pub fn check_n(self, n: usize) -> Result<()> {
        match self.parity() {
            Some(even) if (n % 2 == 0) != even => Err(Error::ParityMismatch {
                model: self.name(),
                needed: if even { "even" } else { "odd" },
                n,
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub base: Graph,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, base: Graph) -> Result<ModelSpec> {
        if !kind.allows_half_loops() && base.has_half_loops() {
            return Err(Error::HalfLoopsForbidden(kind.name()));
        }
        Ok(ModelSpec { kind, base })
    }
}

/// Random stream dedicated to one oriented edge.
pub fn edge_stream(seed: u64, edge: EdgeId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(edge as u64);
    rng
}

fn uniform_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// A uniformly random `n`-cycle: a random arrangement read as a cyclic order.
fn uniform_full_cycle<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let order = uniform_permutation(n, rng);
    let mut s = vec![0; n];
    for j in 0..n {
        s[order[j]] = order[(j + 1) % n];
    }
    s
}

/// Perfect matching (even `n`) or matching with one fixed point (odd `n`).
fn uniform_matching<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut s: Vec<usize> = (0..n).collect();
    let mut rest: Vec<usize> = (0..n).collect();
    if n % 2 == 1 {
        let fixed = rng.gen_range(0..n);
        rest.remove(fixed);
    }
    rest.shuffle(rng);
    for pair in rest.chunks(2) {
        s[pair[0]] = pair[1];
        s[pair[1]] = pair[0];
    }
    s
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut q = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        q[x] = i;
    }
    q
}

/// Draws a cover; deterministic in `(model, n, seed)`.
pub fn sample_cover(model: &ModelSpec, n: usize, seed: u64) -> Result<CoordinatizedCover> {
    let base = &model.base;
    let kind = model.kind;
    if !kind.allows_half_loops() && base.has_half_loops() {
        return Err(Error::HalfLoopsForbidden(kind.name()));
    }
    kind.check_n(n)?;
    let m = base.directed_edge_count();
    let mut sigma = vec![Vec::new(); m];
    for e in base.orientation() {
        let mut rng = edge_stream(seed, e);
        if base.is_half_loop(e) {
            sigma[e] = uniform_matching(n, &mut rng);
        } else {
            let p = if kind.uses_full_cycles() && base.is_whole_loop(e) {
                uniform_full_cycle(n, &mut rng)
            } else {
                uniform_permutation(n, &mut rng)
            };
            sigma[base.inv(e)] = invert(&p);
            sigma[e] = p;
        }
    }
    CoordinatizedCover::new(base, PermutationAssignment { n, sigma })
}

/// Vertex-fibre and directed-edge-fibre sizes of a map to `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibreCounts {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

pub fn fibre_counts(projection: &Morphism, base: &Graph) -> FibreCounts {
    let mut a = vec![0; base.directed_edge_count()];
    let mut b = vec![0; base.vertex_count()];
    for &e in &projection.edge_map {
        a[e] += 1;
    }
    for &v in &projection.vertex_map {
        b[v] += 1;
    }
    FibreCounts { a, b }
}

/// Number of ordered `B`-subgraphs of `g` isomorphic to `s`.
///
/// Ordered graphs have no nontrivial automorphisms, so these are in bijection
/// with injective `B`-graph morphisms `s -> g`.
pub fn count_ordered_embeddings(s: &OrderedBGraph, g: &CoordinatizedCover) -> Result<u64> {
    if s.graph.edge_count() > crate::iso::DEFAULT_EDGE_BOUND {
        return Err(Error::SizeBoundExceeded(format!("{} edges", s.graph.edge_count())));
    }
    let proj = s
        .projection
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("ordered graph needs a projection to B".into()))?;
    check_morphism(&s.graph, &g.base, proj)?;
    let mut count = 0u64;
    for_each_embedding(
        &s.graph,
        &g.total,
        Some((Labels::from_projection(proj), Labels::from_projection(&g.projection))),
        |_| {
            count += 1;
            ControlFlow::Continue(())
        },
    );
    Ok(count)
}

/// `n (n-1) ... (n-k+1)`.
pub fn falling_factorial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for j in 0..k {
        if j >= n {
            return BigInt::zero();
        }
        acc *= BigInt::from(n - j);
    }
    acc
}

/// Exact permutation-model expectation of [`count_ordered_embeddings`].
pub fn expected_ordered_embeddings_exact(s: &OrderedBGraph, base: &Graph, n: usize, kind: ModelKind) -> Result<BigRational> {
    if kind != ModelKind::Permutation {
        return Err(Error::ModelUnsupported(format!("exact expectation for {kind}")));
    }
    if base.has_half_loops() {
        return Err(Error::HalfLoopsForbidden(kind.name()));
    }
    let proj = s
        .projection
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("ordered graph needs a projection to B".into()))?;
    match check_morphism(&s.graph, base, proj)? {
        MorphismKind::Plain => return Err(Error::NotEtale("S does not map etale to B".into())),
        MorphismKind::Etale | MorphismKind::Covering(_) => {}
    }
    let fc = fibre_counts(proj, base);
    if fc.b.iter().any(|&b| b > n) {
        return Ok(BigRational::zero());
    }
    let mut num = BigInt::one();
    for &b in &fc.b {
        num *= falling_factorial(n, b);
    }
    let mut den = BigInt::one();
    for e in base.orientation() {
        den *= falling_factorial(n, fc.a[e]);
    }
    Ok(BigRational::new(num, den))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Occurrence {
    Yes,
    No,
    Unknown,
}

/// Whether `s` embeds with positive probability for all large admissible `n`.
///
/// Étaleness is necessary in every model. Beyond that, each base edge imposes
/// its own constraint because the models are edge-independent: a partial
/// injection extends to a uniform permutation always; to a perfect matching
/// when no lift is a half-loop; to a near-perfect matching when at most one
/// lift is a half-loop; to a full `n`-cycle when the lifts over that loop close
/// up no cycle.
pub fn occurs_in_model(s: &BGraph, model: &ModelSpec) -> Result<Occurrence> {
    let base = &model.base;
    if matches!(s.kind(base)?, MorphismKind::Plain) {
        return Ok(Occurrence::No);
    }
    let g = &s.graph;
    let p = &s.projection;
    for f in base.orientation() {
        let lifts: Vec<EdgeId> = (0..g.directed_edge_count()).filter(|&e| p.edge_map[e] == f).collect();
        let half = lifts.iter().filter(|&&e| g.is_half_loop(e)).count();
        if base.is_half_loop(f) {
            let allowed = match model.kind.parity() {
                Some(false) => 1,
                Some(true) => 0,
                None => return Ok(Occurrence::No),
            };
            if half > allowed {
                return Ok(Occurrence::No);
            }
        } else if model.kind.uses_full_cycles() && base.is_whole_loop(f) && closes_cycle(g, &lifts) {
            return Ok(Occurrence::No);
        }
    }
    Ok(Occurrence::Yes)
}

/// Whether the partial injection `tail ↦ head` given by `lifts` contains a cycle.
fn closes_cycle(g: &Graph, lifts: &[EdgeId]) -> bool {
    let mut next = vec![usize::MAX; g.vertex_count()];
    for &e in lifts {
        next[g.tail(e)] = g.head(e);
    }
    for &e in lifts {
        let start = g.tail(e);
        let mut v = next[start];
        let mut steps = 0;
        while v != usize::MAX && steps <= lifts.len() {
            if v == start {
                return true;
            }
            v = next[v];
            steps += 1;
        }
    }
    false
}
