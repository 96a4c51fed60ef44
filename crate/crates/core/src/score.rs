//! Clique score oracles: mutual information, weight products and explicit tables.

use std::collections::BTreeMap;
use std::ops::Add;

use dashmap::DashMap;
use rustc_hash::FxBuildHasher;

use crate::graph::{Clique, UndirectedGraph, Vertex};
use crate::info::{entropy, Distribution};

/// A clique score, where `Forbidden` absorbs every sum it takes part in.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Score {
    Forbidden,
    Value(f64),
}

impl Score {
    pub fn value(self) -> Option<f64> {
        match self {
            Score::Forbidden => None,
            Score::Value(v) => Some(v),
        }
    }

    pub fn is_forbidden(self) -> bool {
        matches!(self, Score::Forbidden)
    }
}

impl Add for Score {
    type Output = Score;

    fn add(self, rhs: Score) -> Score {
        match (self, rhs) {
            (Score::Value(a), Score::Value(b)) => Score::Value(a + b),
            _ => Score::Forbidden,
        }
    }
}

impl From<f64> for Score {
    fn from(v: f64) -> Self {
        Score::Value(v)
    }
}

/// Scores for the root clique and for each `(pivot, base)` attachment.
pub trait ScoreOracle: Sync {
    fn score(&self, pivot: Vertex, base: &Clique) -> Score;

    fn root_score(&self, root: &Clique) -> Score;
}

impl<O: ScoreOracle + ?Sized> ScoreOracle for &O {
    fn score(&self, pivot: Vertex, base: &Clique) -> Score {
        (**self).score(pivot, base)
    }

    fn root_score(&self, root: &Clique) -> Score {
        (**self).root_score(root)
    }
}

/// `f(w, C) = I(X_w; X_C)`, with the total correlation of the root as its score.
///
/// Cliques that are not cliques of the host graph are forbidden. Entropies are
/// cached per variable set, so each is estimated once.
pub struct MiOracle<'a, D: ?Sized> {
    source: &'a D,
    graph: &'a UndirectedGraph,
    k: usize,
    entropies: DashMap<Vec<Vertex>, f64, FxBuildHasher>,
}

pub fn build_mi_oracle<'a, D: Distribution + ?Sized>(s: &'a D, g: &'a UndirectedGraph, k: usize) -> MiOracle<'a, D> {
    MiOracle { source: s, graph: g, k, entropies: DashMap::with_hasher(FxBuildHasher) }
}

impl<D: Distribution + ?Sized> MiOracle<'_, D> {
    fn entropy_of(&self, vars: &[Vertex]) -> f64 {
        if let Some(h) = self.entropies.get(vars) {
            return *h;
        }
        let h = entropy(self.source, vars);
        self.entropies.insert(vars.to_vec(), h);
        h
    }

    fn in_graph(&self, members: &[Vertex]) -> bool {
        members.iter().all(|&v| v < self.graph.n()) && self.graph.is_clique(members)
    }
}

impl<D: Distribution + ?Sized> ScoreOracle for MiOracle<'_, D> {
    fn score(&self, pivot: Vertex, base: &Clique) -> Score {
        if base.len() != self.k || base.contains(pivot) {
            return Score::Forbidden;
        }
        let all = base.with(pivot);
        if !self.in_graph(all.members()) {
            return Score::Forbidden;
        }
        let mi = self.entropy_of(&[pivot]) + self.entropy_of(base.members()) - self.entropy_of(all.members());
        Score::Value(mi.max(0.0))
    }

    fn root_score(&self, root: &Clique) -> Score {
        if root.len() != self.k + 1 || !self.in_graph(root.members()) {
            return Score::Forbidden;
        }
        let singles: f64 = root.iter().map(|v| self.entropy_of(&[v])).sum();
        Score::Value((singles - self.entropy_of(root.members())).max(0.0))
    }
}

/// `f(Δ) = Π w(x, y)` over all pairs of the clique; the pivot plays no role.
///
/// A pair that is not an edge of the graph makes the clique forbidden; an edge
/// without a weight counts as 1.
pub struct WeightProductOracle {
    n: usize,
    // NaN marks a missing edge
    weights: Vec<f64>,
}

impl WeightProductOracle {
    pub fn new(graph: &UndirectedGraph) -> Self {
        let n = graph.n();
        let mut weights = vec![f64::NAN; n * n];
        for (u, v) in graph.edges() {
            let w = graph.weight(u, v).unwrap_or(1.0);
            weights[u * n + v] = w;
            weights[v * n + u] = w;
        }
        WeightProductOracle { n, weights }
    }

    fn pair(&self, u: Vertex, v: Vertex) -> f64 {
        if u < self.n && v < self.n {
            self.weights[u * self.n + v]
        } else {
            f64::NAN
        }
    }

    fn product(&self, members: &[Vertex], extra: Option<Vertex>) -> Score {
        let mut p = 1.0;
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                p *= self.pair(u, v);
            }
        }
        if let Some(w) = extra {
            for &u in members {
                p *= self.pair(u, w);
            }
        }
        if p.is_nan() {
            Score::Forbidden
        } else {
            Score::Value(p)
        }
    }
}

impl ScoreOracle for WeightProductOracle {
    fn score(&self, pivot: Vertex, base: &Clique) -> Score {
        if base.contains(pivot) {
            return Score::Forbidden;
        }
        self.product(base.members(), Some(pivot))
    }

    fn root_score(&self, root: &Clique) -> Score {
        self.product(root.members(), None)
    }
}

/// Scores listed explicitly; anything absent is forbidden.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExplicitOracle {
    k: usize,
    roots: BTreeMap<Clique, f64>,
    pivots: BTreeMap<(Vertex, Clique), f64>,
}

impl ExplicitOracle {
    pub fn new(k: usize) -> Self {
        ExplicitOracle { k, ..Default::default() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn insert_root(&mut self, root: Clique, score: f64) {
        self.roots.insert(root, score);
    }

    pub fn insert_pivot(&mut self, pivot: Vertex, base: Clique, score: f64) {
        self.pivots.insert((pivot, base), score);
    }

    pub fn roots(&self) -> &BTreeMap<Clique, f64> {
        &self.roots
    }

    pub fn pivots(&self) -> &BTreeMap<(Vertex, Clique), f64> {
        &self.pivots
    }

    /// Tabulates another oracle over every (k+1)-clique of `g`: one root entry per
    /// clique and one pivot entry per choice of pivot inside it. Forbidden values are left out.
    pub fn materialize(oracle: &(impl ScoreOracle + ?Sized), g: &UndirectedGraph, k: usize) -> Self {
        let mut out = ExplicitOracle::new(k);
        for c in g.cliques_of_size(k + 1) {
            if let Score::Value(s) = oracle.root_score(&c) {
                out.roots.insert(c.clone(), s);
            }
            for w in c.iter() {
                let base = c.without(w);
                if let Score::Value(s) = oracle.score(w, &base) {
                    out.pivots.insert((w, base), s);
                }
            }
        }
        out
    }
}

impl ScoreOracle for ExplicitOracle {
    fn score(&self, pivot: Vertex, base: &Clique) -> Score {
        self.pivots.get(&(pivot, base.clone())).map_or(Score::Forbidden, |&s| Score::Value(s))
    }

    fn root_score(&self, root: &Clique) -> Score {
        self.roots.get(root).map_or(Score::Forbidden, |&s| Score::Value(s))
    }
}
