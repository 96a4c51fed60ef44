//! Graphs, backbones, k-trees and their clique-tree decompositions.
//!
//! Vertices are dense indices `0..n`. Edges are stored normalized as `(min, max)`.
//! A [`KTree`] is identified by its edge set; the creation order it carries is a
//! witness of how it can be grown from a k-clique, and several orders describe the
//! same k-tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

pub type Vertex = usize;
pub type Edge = (Vertex, Vertex);

/// Normalizes an unordered pair to `(min, max)`.
#[inline]
pub fn edge(u: Vertex, v: Vertex) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// A vertex set kept sorted ascending, so equal sets compare and hash equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clique(Vec<Vertex>);

impl Clique {
    pub fn new(members: impl IntoIterator<Item = Vertex>) -> Self {
        let mut v: Vec<Vertex> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Clique(v)
    }

    /// Wraps a vector the caller guarantees is sorted and duplicate-free.
    pub(crate) fn from_sorted(v: Vec<Vertex>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        Clique(v)
    }

    pub fn members(&self) -> &[Vertex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn without(&self, v: Vertex) -> Clique {
        let mut out = Vec::with_capacity(self.0.len());
        out.extend(self.0.iter().copied().filter(|&u| u != v));
        Clique(out)
    }

    pub fn with(&self, v: Vertex) -> Clique {
        let pos = match self.0.binary_search(&v) {
            Ok(_) => return self.clone(),
            Err(pos) => pos,
        };
        let mut out = Vec::with_capacity(self.0.len() + 1);
        out.extend_from_slice(&self.0[..pos]);
        out.push(v);
        out.extend_from_slice(&self.0[pos..]);
        Clique(out)
    }

    pub fn is_subset_of(&self, other: &Clique) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    pub fn intersection_len(&self, other: &Clique) -> usize {
        self.0.iter().filter(|&&v| other.contains(v)).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Simple undirected graph with optional edge weights.
#[derive(Clone, Debug)]
pub struct UndirectedGraph {
    n: usize,
    edges: BTreeSet<Edge>,
    weights: BTreeMap<Edge, f64>,
    adjacency: Vec<bool>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex".into()));
        }
        let mut g = UndirectedGraph {
            n,
            edges: BTreeSet::new(),
            weights: BTreeMap::new(),
            adjacency: vec![false; n * n],
        };
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) has an endpoint outside 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            if !g.edges.insert(edge(u, v)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            g.adjacency[u * n + v] = true;
            g.adjacency[v * n + u] = true;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        UndirectedGraph::new(n.max(1), edges).expect("complete graph is well formed")
    }

    /// Attaches weights; every weighted pair must be an edge.
    pub fn with_weights(mut self, weights: impl IntoIterator<Item = (Edge, f64)>) -> Result<Self> {
        for ((u, v), w) in weights {
            let e = edge(u, v);
            if !self.edges.contains(&e) {
                return Err(Error::InvalidGraph(format!("weight given for non-edge ({u}, {v})")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidGraph(format!("weight of ({u}, {v}) is not finite")));
            }
            self.weights.insert(e, w);
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && v < self.n && self.adjacency[u * self.n + v]
    }

    pub fn weight(&self, u: Vertex, v: Vertex) -> Option<f64> {
        self.weights.get(&edge(u, v)).copied()
    }

    pub fn weights(&self) -> &BTreeMap<Edge, f64> {
        &self.weights
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n).filter(move |&u| self.adjacency[v * self.n + u])
    }

    pub fn is_clique(&self, vertices: &[Vertex]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &u)| vertices[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }

    /// All cliques with exactly `size` vertices, in lexicographic order.
    pub fn cliques_of_size(&self, size: usize) -> Vec<Clique> {
        let mut out = Vec::new();
        if size == 0 || size > self.n {
            return out;
        }
        let mut current = Vec::with_capacity(size);
        let all: Vec<Vertex> = (0..self.n).collect();
        self.extend_cliques(&all, size, &mut current, &mut out);
        out
    }

    fn extend_cliques(&self, candidates: &[Vertex], size: usize, current: &mut Vec<Vertex>, out: &mut Vec<Clique>) {
        if current.len() == size {
            out.push(Clique::from_sorted(current.clone()));
            return;
        }
        let needed = size - current.len();
        for (i, &v) in candidates.iter().enumerate() {
            if candidates.len() - i < needed {
                break;
            }
            let next: Vec<Vertex> = candidates[i + 1..].iter().copied().filter(|&u| self.has_edge(v, u)).collect();
            current.push(v);
            self.extend_cliques(&next, size, current, out);
            current.pop();
        }
    }
}

/// The designated spanning tree a solution must keep.
#[derive(Clone, Debug)]
pub struct BackboneTree {
    n: usize,
    edges: Vec<Edge>,
    degree_bound: usize,
    adjacency: Vec<Vec<Vertex>>,
}

impl BackboneTree {
    /// Checks endpoints only; tree shape and degree are checked by [`validate_backbone`].
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>, degree_bound: usize) -> Result<Self> {
        if degree_bound == 0 {
            return Err(Error::InvalidBackbone("degree bound must be at least 1".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidBackbone(format!("edge ({u}, {v}) has an endpoint outside 0..{n}")));
            }
            if u == v {
                return Err(Error::InvalidBackbone(format!("self-loop at vertex {u}")));
            }
            if !set.insert(edge(u, v)) {
                return Err(Error::InvalidBackbone(format!("duplicate edge ({u}, {v})")));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &set {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(BackboneTree { n, edges: set.into_iter().collect(), degree_bound, adjacency })
    }

    /// The Hamiltonian path `0 - 1 - ... - (n-1)` with degree bound 2.
    pub fn path(n: usize) -> Self {
        BackboneTree::new(n, (1..n).map(|v| (v - 1, v)), 2).expect("path is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackboneViolation {
    SizeMismatch { graph: usize, backbone: usize },
    EdgeCount { expected: usize, found: usize },
    NotInHost(Vertex, Vertex),
    Disconnected { unreached: Vertex },
    DegreeExceeded { vertex: Vertex, degree: usize, bound: usize },
}

impl fmt::Display for BackboneViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackboneViolation::SizeMismatch { graph, backbone } => {
                write!(f, "backbone has {backbone} vertices but the graph has {graph}")
            }
            BackboneViolation::EdgeCount { expected, found } => {
                write!(f, "spanning tree needs {expected} edges, backbone has {found}")
            }
            BackboneViolation::NotInHost(u, v) => write!(f, "backbone edge ({u}, {v}) is not an edge of the graph"),
            BackboneViolation::Disconnected { unreached } => {
                write!(f, "backbone is not connected: vertex {unreached} is unreachable from 0")
            }
            BackboneViolation::DegreeExceeded { vertex, degree, bound } => {
                write!(f, "vertex {vertex} has degree {degree} > {bound}")
            }
        }
    }
}

impl std::error::Error for BackboneViolation {}

/// Checks that `h` is a spanning tree of `g` whose degree respects its bound.
/// Returns the first violated invariant.
pub fn validate_backbone(g: &UndirectedGraph, h: &BackboneTree) -> std::result::Result<(), BackboneViolation> {
    if g.n() != h.n() {
        return Err(BackboneViolation::SizeMismatch { graph: g.n(), backbone: h.n() });
    }
    let expected = h.n().saturating_sub(1);
    if h.edges().len() != expected {
        return Err(BackboneViolation::EdgeCount { expected, found: h.edges().len() });
    }
    if let Some(&(u, v)) = h.edges().iter().find(|&&(u, v)| !g.has_edge(u, v)) {
        return Err(BackboneViolation::NotInHost(u, v));
    }
    // n - 1 edges plus connectivity implies acyclic.
    let mut seen = vec![false; h.n()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &v in h.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    if let Some(unreached) = seen.iter().position(|&s| !s) {
        return Err(BackboneViolation::Disconnected { unreached });
    }
    for v in 0..h.n() {
        if h.degree(v) > h.degree_bound() {
            return Err(BackboneViolation::DegreeExceeded { vertex: v, degree: h.degree(v), bound: h.degree_bound() });
        }
    }
    Ok(())
}

/// One step of growing a k-tree: `vertex` is created adjacent to `precursors`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Creation {
    pub vertex: Vertex,
    pub precursors: Vec<Vertex>,
}

impl Creation {
    pub fn new(vertex: Vertex, precursors: impl IntoIterator<Item = Vertex>) -> Self {
        let mut precursors: Vec<Vertex> = precursors.into_iter().collect();
        precursors.sort_unstable();
        Creation { vertex, precursors }
    }
}

/// A spanning k-tree together with one creation order that produces it.
///
/// The first `k` entries of the creation order form the initial k-clique with
/// nested precursors `{} ⊂ {v1} ⊂ {v1,v2} ⊂ ...`; every later entry attaches a new
/// vertex to an existing k-clique.
#[derive(Clone, Debug)]
pub struct KTree {
    n: usize,
    k: usize,
    edges: BTreeSet<Edge>,
    creation_order: Vec<Creation>,
}

impl PartialEq for KTree {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.edges == other.edges
    }
}

impl Eq for KTree {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KTreeViolation {
    TooFewVertices { n: usize, k: usize },
    EdgeCount { expected: usize, found: usize },
    OrderLength { expected: usize, found: usize },
    VertexOutOfRange(Vertex),
    VertexRepeated(Vertex),
    InitialPrecursors { vertex: Vertex },
    BaseSize { vertex: Vertex, size: usize },
    BaseNotClique { vertex: Vertex },
    EdgeMismatch,
}

impl fmt::Display for KTreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KTreeViolation::TooFewVertices { n, k } => write!(f, "{n} vertices cannot hold a {k}-tree"),
            KTreeViolation::EdgeCount { expected, found } => {
                write!(f, "edge count {found} != {expected}")
            }
            KTreeViolation::OrderLength { expected, found } => {
                write!(f, "creation order has {found} entries, expected {expected}")
            }
            KTreeViolation::VertexOutOfRange(v) => write!(f, "vertex {v} out of range"),
            KTreeViolation::VertexRepeated(v) => write!(f, "vertex {v} is created twice"),
            KTreeViolation::InitialPrecursors { vertex } => {
                write!(f, "precursors of initial-clique vertex {vertex} are not the vertices created before it")
            }
            KTreeViolation::BaseSize { vertex, size } => {
                write!(f, "vertex {vertex} is attached to {size} vertices")
            }
            KTreeViolation::BaseNotClique { vertex } => {
                write!(f, "vertex {vertex} is attached to a set that is not an existing clique")
            }
            KTreeViolation::EdgeMismatch => write!(f, "replaying the creation order does not reproduce the edge set"),
        }
    }
}

impl std::error::Error for KTreeViolation {}

/// `k(k-1)/2 + k(n-k)` for `n >= k`.
pub fn ktree_edge_count(n: usize, k: usize) -> usize {
    k * (k.saturating_sub(1)) / 2 + k * (n - k)
}

fn replay(n: usize, k: usize, order: &[Creation]) -> std::result::Result<BTreeSet<Edge>, KTreeViolation> {
    if n < k || k == 0 {
        return Err(KTreeViolation::TooFewVertices { n, k });
    }
    if order.len() != n {
        return Err(KTreeViolation::OrderLength { expected: n, found: order.len() });
    }
    let mut created = vec![false; n];
    let mut edges = BTreeSet::new();
    let mut earlier: Vec<Vertex> = Vec::with_capacity(k);
    for (j, step) in order.iter().enumerate() {
        let v = step.vertex;
        if v >= n {
            return Err(KTreeViolation::VertexOutOfRange(v));
        }
        if created[v] {
            return Err(KTreeViolation::VertexRepeated(v));
        }
        if j < k {
            let mut expect = earlier.clone();
            expect.sort_unstable();
            if step.precursors != expect {
                return Err(KTreeViolation::InitialPrecursors { vertex: v });
            }
            earlier.push(v);
        } else {
            if step.precursors.len() != k {
                return Err(KTreeViolation::BaseSize { vertex: v, size: step.precursors.len() });
            }
            let base = &step.precursors;
            let ok = base.windows(2).all(|w| w[0] < w[1])
                && base.iter().all(|&u| u < n && created[u])
                && base.iter().enumerate().all(|(i, &a)| base[i + 1..].iter().all(|&b| edges.contains(&edge(a, b))));
            if !ok {
                return Err(KTreeViolation::BaseNotClique { vertex: v });
            }
        }
        for &u in &step.precursors {
            edges.insert(edge(u, v));
        }
        created[v] = true;
    }
    Ok(edges)
}

impl KTree {
    /// Replays a creation order, failing if it does not follow the growth rules.
    pub fn from_creation_order(n: usize, k: usize, order: Vec<Creation>) -> Result<KTree> {
        let edges = replay(n, k, &order).map_err(|e| Error::InvalidKTree(e.to_string()))?;
        Ok(KTree { n, k, edges, creation_order: order })
    }

    /// Builds from an initial k-clique (in nesting order) and attachments `(vertex, base)`.
    pub fn from_attachments(
        n: usize,
        k: usize,
        initial: &[Vertex],
        attachments: impl IntoIterator<Item = (Vertex, Vec<Vertex>)>,
    ) -> Result<KTree> {
        let mut order: Vec<Creation> =
            initial.iter().enumerate().map(|(j, &v)| Creation::new(v, initial[..j].iter().copied())).collect();
        order.extend(attachments.into_iter().map(|(v, base)| Creation::new(v, base)));
        KTree::from_creation_order(n, k, order)
    }

    /// Recognizes a k-tree from its edges by repeatedly removing a vertex of
    /// degree `k` whose neighborhood is a clique.
    pub fn from_edges(n: usize, k: usize, edges: impl IntoIterator<Item = Edge>) -> Result<KTree> {
        if k == 0 || n < k {
            return Err(Error::InvalidKTree(format!("{n} vertices cannot hold a {k}-tree")));
        }
        let mut adj: Vec<BTreeSet<Vertex>> = vec![BTreeSet::new(); n];
        let mut count = 0;
        for (u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidKTree(format!("bad edge ({u}, {v})")));
            }
            if adj[u].insert(v) {
                adj[v].insert(u);
                count += 1;
            }
        }
        if count != ktree_edge_count(n, k) {
            return Err(Error::InvalidKTree(
                KTreeViolation::EdgeCount { expected: ktree_edge_count(n, k), found: count }.to_string(),
            ));
        }
        let mut alive = vec![true; n];
        let mut removed: Vec<Creation> = Vec::with_capacity(n - k);
        for _ in 0..n - k {
            let pick = (0..n).find(|&v| {
                alive[v] && adj[v].len() == k && {
                    let nb: Vec<Vertex> = adj[v].iter().copied().collect();
                    nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|b| adj[a].contains(b)))
                }
            });
            let Some(v) = pick else {
                return Err(Error::InvalidKTree("no simplicial vertex of degree k left to remove".into()));
            };
            let base: Vec<Vertex> = adj[v].iter().copied().collect();
            for &u in &base {
                adj[u].remove(&v);
            }
            adj[v].clear();
            alive[v] = false;
            removed.push(Creation::new(v, base));
        }
        let initial: Vec<Vertex> = (0..n).filter(|&v| alive[v]).collect();
        let order: Vec<Creation> = initial
            .iter()
            .enumerate()
            .map(|(j, &v)| Creation::new(v, initial[..j].iter().copied()))
            .chain(removed.into_iter().rev())
            .collect();
        KTree::from_creation_order(n, k, order)
    }

    /// Assembles a k-tree without checking it. Use [`validate_ktree`] afterwards.
    pub fn from_raw_parts(n: usize, k: usize, edges: impl IntoIterator<Item = Edge>, order: Vec<Creation>) -> KTree {
        KTree { n, k, edges: edges.into_iter().map(|(u, v)| edge(u, v)).collect(), creation_order: order }
    }

    /// Re-derives a creation order whose first `k + 1` vertices are `root_order`
    /// (the first `k` nested, the last attached to them). `root_order` must be a
    /// (k+1)-clique of this k-tree.
    pub fn reroot(&self, root_order: &[Vertex]) -> Result<KTree> {
        let (n, k) = (self.n, self.k);
        if root_order.len() != k + 1 || n <= k {
            return Err(Error::InvalidParameter(format!("root must have {} vertices", k + 1)));
        }
        let adj = self.adjacency_sets();
        let root_set: Vec<Vertex> = root_order.to_vec();
        if !root_set.iter().enumerate().all(|(i, &a)| root_set[i + 1..].iter().all(|b| adj[a].contains(b))) {
            return Err(Error::InvalidParameter("root is not a clique of the k-tree".into()));
        }
        let mut created = vec![false; n];
        let mut order: Vec<Creation> = Vec::with_capacity(n);
        for (j, &v) in root_order.iter().enumerate() {
            let pre = if j < k { root_order[..j].to_vec() } else { root_order[..k].to_vec() };
            order.push(Creation::new(v, pre));
            created[v] = true;
        }
        // Each uncreated vertex with exactly k created neighbours can be attached next.
        let mut created_nbrs: Vec<usize> =
            (0..n).map(|v| adj[v].iter().filter(|&&u| created[u]).count()).collect();
        while order.len() < n {
            let next = (0..n).find(|&v| {
                !created[v] && created_nbrs[v] == k && {
                    let base: Vec<Vertex> = adj[v].iter().copied().filter(|&u| created[u]).collect();
                    base.iter().enumerate().all(|(i, &a)| base[i + 1..].iter().all(|b| adj[a].contains(b)))
                }
            });
            let Some(v) = next else {
                return Err(Error::InvalidKTree("cannot extend the creation order from this root".into()));
            };
            let base: Vec<Vertex> = adj[v].iter().copied().filter(|&u| created[u]).collect();
            created[v] = true;
            for &u in &adj[v] {
                created_nbrs[u] += 1;
            }
            order.push(Creation::new(v, base));
        }
        let rerooted = KTree::from_creation_order(n, k, order)?;
        if rerooted.edges != self.edges {
            return Err(Error::InvalidKTree("rerooted order does not reproduce the edge set".into()));
        }
        Ok(rerooted)
    }

    fn adjacency_sets(&self) -> Vec<BTreeSet<Vertex>> {
        let mut adj = vec![BTreeSet::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].insert(v);
            adj[v].insert(u);
        }
        adj
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn sorted_edges(&self) -> Vec<Edge> {
        self.edges.iter().copied().collect()
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edges.contains(&edge(u, v))
    }

    pub fn creation_order(&self) -> &[Creation] {
        &self.creation_order
    }

    /// The first (k+1)-clique created, or `None` for the bare k-clique.
    pub fn root_clique(&self) -> Option<Clique> {
        (self.n > self.k).then(|| Clique::new(self.creation_order[..=self.k].iter().map(|c| c.vertex)))
    }

    /// Root vertices in creation order.
    pub fn root_order(&self) -> Option<Vec<Vertex>> {
        (self.n > self.k).then(|| self.creation_order[..=self.k].iter().map(|c| c.vertex).collect())
    }

    /// Attachments after the root clique: each is a `(pivot, base)` term of the objective.
    pub fn pivot_terms(&self) -> &[Creation] {
        if self.n > self.k {
            &self.creation_order[self.k + 1..]
        } else {
            &[]
        }
    }

    /// All (k+1)-cliques, root first, in creation order.
    pub fn cliques(&self) -> Vec<Clique> {
        self.creation_order
            .get(self.k..)
            .unwrap_or(&[])
            .iter()
            .map(|c| Clique::new(c.precursors.iter().copied().chain([c.vertex])))
            .collect()
    }

    pub fn contains_backbone(&self, h: &BackboneTree) -> bool {
        h.edges().iter().all(|&(u, v)| self.has_edge(u, v))
    }
}

/// Checks a k-tree's creation order and edge bookkeeping.
pub fn validate_ktree(t: &KTree) -> std::result::Result<(), KTreeViolation> {
    if t.k == 0 || t.n < t.k {
        return Err(KTreeViolation::TooFewVertices { n: t.n, k: t.k });
    }
    let expected = ktree_edge_count(t.n, t.k);
    if t.edges.len() != expected {
        return Err(KTreeViolation::EdgeCount { expected, found: t.edges.len() });
    }
    let replayed = replay(t.n, t.k, &t.creation_order)?;
    if replayed != t.edges {
        return Err(KTreeViolation::EdgeMismatch);
    }
    Ok(())
}

/// Precursor sets indexed by vertex.
pub fn derive_precursor(t: &KTree) -> Vec<Vec<Vertex>> {
    let mut out = vec![Vec::new(); t.n];
    for c in &t.creation_order {
        out[c.vertex] = c.precursors.clone();
    }
    out
}

/// Rooted tree over the (k+1)-cliques of a k-tree.
#[derive(Clone, Debug, Default)]
pub struct TreeDecomposition {
    root: Option<Clique>,
    nodes: Vec<Clique>,
    parent: BTreeMap<Clique, Clique>,
    pivot: BTreeMap<Clique, Vertex>,
}

impl TreeDecomposition {
    /// `links` are `(child, parent, pivot)` triples; the root carries its own pivot.
    pub fn from_links(root: Clique, root_pivot: Vertex, links: impl IntoIterator<Item = (Clique, Clique, Vertex)>) -> Self {
        let mut td = TreeDecomposition { root: Some(root.clone()), nodes: vec![root.clone()], ..Default::default() };
        td.pivot.insert(root, root_pivot);
        for (child, parent, pivot) in links {
            td.nodes.push(child.clone());
            td.parent.insert(child.clone(), parent);
            td.pivot.insert(child, pivot);
        }
        td
    }

    pub fn root(&self) -> Option<&Clique> {
        self.root.as_ref()
    }

    pub fn nodes(&self) -> &[Clique] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn parent(&self, node: &Clique) -> Option<&Clique> {
        self.parent.get(node)
    }

    pub fn pivot(&self, node: &Clique) -> Option<Vertex> {
        self.pivot.get(node).copied()
    }

    pub fn children(&self, node: &Clique) -> Vec<&Clique> {
        self.nodes.iter().filter(|c| self.parent.get(*c) == Some(node)).collect()
    }

    /// Checks tree shape, k-vertex overlap with parents, pivots and running intersection.
    pub fn check(&self, k: usize) -> std::result::Result<(), String> {
        let Some(root) = &self.root else {
            return if self.nodes.is_empty() { Ok(()) } else { Err("nodes without a root".into()) };
        };
        let distinct: BTreeSet<&Clique> = self.nodes.iter().collect();
        if distinct.len() != self.nodes.len() {
            return Err("duplicate node".into());
        }
        if self.parent.contains_key(root) {
            return Err("root has a parent".into());
        }
        for node in &self.nodes {
            if node.len() != k + 1 {
                return Err(format!("node {node} does not have {} vertices", k + 1));
            }
            if node == root {
                continue;
            }
            let parent = self.parent.get(node).ok_or_else(|| format!("node {node} has no parent"))?;
            if !distinct.contains(parent) {
                return Err(format!("parent of {node} is not a node"));
            }
            if node.intersection_len(parent) != k {
                return Err(format!("{node} shares {} vertices with its parent", node.intersection_len(parent)));
            }
            let fresh: Vec<Vertex> = node.iter().filter(|&v| !parent.contains(v)).collect();
            if fresh != [self.pivot(node).unwrap_or(usize::MAX)] {
                return Err(format!("pivot of {node} is not the vertex missing from its parent"));
            }
            // walk to the root; a cycle would exceed the node count
            let mut cur = node;
            let mut steps = 0;
            while let Some(p) = self.parent.get(cur) {
                cur = p;
                steps += 1;
                if steps > self.nodes.len() {
                    return Err("parent relation has a cycle".into());
                }
            }
            if cur != root {
                return Err(format!("{node} does not reach the root"));
            }
        }
        // Running intersection: the nodes holding a vertex have exactly one topmost member.
        let vertices: BTreeSet<Vertex> = self.nodes.iter().flat_map(|c| c.iter()).collect();
        for v in vertices {
            let tops = self
                .nodes
                .iter()
                .filter(|c| c.contains(v) && self.parent.get(*c).is_none_or(|p| !p.contains(v)))
                .count();
            if tops != 1 {
                return Err(format!("nodes containing vertex {v} are not connected"));
            }
        }
        Ok(())
    }
}

/// Decomposition induced by the creation order: each attached clique hangs below
/// the earliest clique containing its base.
pub fn build_tree_decomposition(t: &KTree) -> Result<TreeDecomposition> {
    validate_ktree(t).map_err(|e| Error::InvalidKTree(e.to_string()))?;
    if t.n == t.k {
        return Ok(TreeDecomposition::default());
    }
    let order = t.creation_order();
    let root = Clique::new(order[..=t.k].iter().map(|c| c.vertex));
    let mut made: Vec<Clique> = vec![root.clone()];
    let mut links = Vec::with_capacity(t.n - t.k - 1);
    for step in &order[t.k + 1..] {
        let base = Clique::new(step.precursors.iter().copied());
        let parent = made
            .iter()
            .find(|c| base.is_subset_of(c))
            .cloned()
            .ok_or_else(|| Error::InvalidKTree(format!("base of vertex {} lies in no earlier clique", step.vertex)))?;
        let child = base.with(step.vertex);
        made.push(child.clone());
        links.push((child, parent, step.vertex));
    }
    Ok(TreeDecomposition::from_links(root, order[t.k].vertex, links))
}
