//! Backbone-retaining maximum spanning k-tree by dynamic programming over
//! (clique, set of backbone components) states, plus the Chow-Liu baseline.
//!
//! `F(Δ, I)` is the best total score of attachments that grow from the clique `Δ`
//! and cover exactly the backbone components `I` of `H - Δ`. A transition picks the
//! branch of components handled by one child, a pivot `w` inside it and the
//! parent vertex `x` the child leaves behind:
//!
//! ```text
//! F(Δ, I) = max  F(Δ - x + w, J) + F(Δ, I - T) + f(w, Δ - x)
//! ```
//!
//! where `T ⊆ I` is the branch, `J` the components of `H - (Δ - x + w)` inside
//! `T - {w}`, and `x` must have no backbone neighbour in `T`.

use std::sync::Arc;

use dashmap::DashMap;
use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;

use crate::error::{Error, Result};
use crate::graph::{
    build_tree_decomposition, validate_backbone, BackboneTree, Clique, Creation, Edge, KTree, TreeDecomposition,
    UndirectedGraph, Vertex,
};
use crate::info::{mutual_information, Distribution};
use crate::score::{Score, ScoreOracle};
use crate::separation::{child_mask, feasible_drop_in, mask_indices, separate, ComponentMap};

/// Which sets of components one child subtree may cover.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Recurrence {
    /// Any union of components containing the lowest-indexed remaining one.
    /// Complete: every retaining k-tree is reachable.
    #[default]
    ComponentUnion,
    /// Exactly one component per child. Misses k-trees in which one child
    /// clique spans several components of its parent's separation.
    SingleComponent,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Worker threads for the root loop. `0` uses rayon's default.
    pub threads: usize,
    pub memoize: bool,
    pub recurrence: Recurrence,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { threads: 1, memoize: true, recurrence: Recurrence::default() }
    }
}

/// One attachment of the optimal k-tree with its score.
#[derive(Clone, Debug, PartialEq)]
pub struct CliqueScore {
    pub pivot: Vertex,
    pub base: Clique,
    pub score: f64,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub ktree: KTree,
    pub decomposition: TreeDecomposition,
    /// Root score plus every attachment score, summed in creation order.
    pub score: f64,
    pub root_score: f64,
    /// Attachments after the root, in creation order.
    pub clique_scores: Vec<CliqueScore>,
}

impl SolveResult {
    pub fn root(&self) -> Option<Clique> {
        self.ktree.root_clique()
    }
}

pub fn solve_retaining_mskt<O: ScoreOracle + ?Sized>(
    g: &UndirectedGraph,
    h: &BackboneTree,
    k: usize,
    f: &O,
) -> Result<SolveResult> {
    solve_with_options(g, h, k, f, &SolverOptions::default())
}

pub fn solve_with_options<O: ScoreOracle + ?Sized>(
    g: &UndirectedGraph,
    h: &BackboneTree,
    k: usize,
    f: &O,
    options: &SolverOptions,
) -> Result<SolveResult> {
    validate_backbone(g, h).map_err(|v| Error::InvalidBackbone(v.to_string()))?;
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={n}")));
    }
    if n == k {
        let initial: Vec<Vertex> = (0..n).collect();
        if !g.is_clique(&initial) {
            return Err(Error::Infeasible(format!("the {n} vertices do not form a clique of the graph")));
        }
        let ktree = KTree::from_attachments(n, k, &initial, [])?;
        return Ok(SolveResult {
            ktree,
            decomposition: TreeDecomposition::default(),
            score: 0.0,
            root_score: 0.0,
            clique_scores: Vec::new(),
        });
    }
    let bits = usize::BITS - n.leading_zeros();
    if (k as u32 + 1) * bits > 128 {
        return Err(Error::InstanceTooLarge(format!("cliques of {} vertices out of {n} cannot be keyed", k + 1)));
    }

    let dp = Dp {
        g,
        h,
        oracle: f,
        recurrence: options.recurrence,
        bits,
        separations: DashMap::with_hasher(FxBuildHasher),
        memo: options.memoize.then(|| DashMap::with_hasher(FxBuildHasher)),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .stack_size(256 << 20)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;

    pool.install(|| {
        let roots = g.cliques_of_size(k + 1);
        let totals: Vec<Result<Score>> = roots.par_iter().map(|root| dp.root_total(root)).collect();
        let mut best: Option<(usize, Score)> = None;
        for (i, total) in totals.into_iter().enumerate() {
            let total = total?;
            if !total.is_forbidden() && best.is_none_or(|(_, b)| total > b) {
                best = Some((i, total));
            }
        }
        let Some((i, _)) = best else {
            return Err(dp.infeasibility(k));
        };
        dp.assemble(&roots[i], k)
    })
}

/// Sum of the root score and all attachment scores, in creation order.
pub fn objective<O: ScoreOracle + ?Sized>(t: &KTree, f: &O) -> Score {
    let Some(root) = t.root_clique() else {
        return Score::Value(0.0);
    };
    t.pivot_terms().iter().fold(f.root_score(&root), |acc, c| {
        acc + f.score(c.vertex, &Clique::new(c.precursors.iter().copied()))
    })
}

/// Scores a k-tree that must contain the backbone.
pub fn score_ktree<O: ScoreOracle + ?Sized>(t: &KTree, h: &BackboneTree, f: &O) -> Result<Score> {
    if let Some(&(u, v)) = h.edges().iter().find(|&&(u, v)| !t.has_edge(u, v)) {
        return Err(Error::NotRetaining(u, v));
    }
    Ok(objective(t, f))
}

/// Maximum spanning tree under pairwise mutual information. Ties go to the
/// lexicographically smaller edge.
pub fn chow_liu<D: Distribution + ?Sized>(d: &D) -> Result<KTree> {
    let n = d.n_vars();
    if n < 2 {
        return Err(Error::InvalidParameter("Chow-Liu needs at least two variables".into()));
    }
    let mut weighted: Vec<(f64, Edge)> = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            weighted.push((mutual_information(d, u, &[v]), (u, v)));
        }
    }
    weighted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut sets = UnionFind::<usize>::new(n);
    let mut edges = Vec::with_capacity(n - 1);
    for (_, (u, v)) in weighted {
        if sets.union(u, v) {
            edges.push((u, v));
        }
    }
    KTree::from_edges(n, 1, edges)
}

#[derive(Clone, Copy, Debug)]
struct Choice {
    branch: u64,
    pivot: Vertex,
    drop: Vertex,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    value: Score,
    choice: Option<Choice>,
}

struct Dp<'a, O: ?Sized> {
    g: &'a UndirectedGraph,
    h: &'a BackboneTree,
    oracle: &'a O,
    recurrence: Recurrence,
    bits: u32,
    separations: DashMap<u128, Arc<ComponentMap>, FxBuildHasher>,
    memo: Option<DashMap<(u128, u64), Entry, FxBuildHasher>>,
}

impl<O: ScoreOracle + ?Sized> Dp<'_, O> {
    fn key(&self, c: &Clique) -> u128 {
        c.iter().fold(0u128, |acc, v| (acc << self.bits) | v as u128)
    }

    fn separation(&self, c: &Clique) -> Arc<ComponentMap> {
        self.separation_keyed(self.key(c), c.members())
    }

    fn separation_keyed(&self, key: u128, members: &[Vertex]) -> Arc<ComponentMap> {
        if let Some(map) = self.separations.get(&key) {
            return Arc::clone(&map);
        }
        let map = Arc::new(separate(self.h, &Clique::new(members.iter().copied())));
        self.separations.insert(key, Arc::clone(&map));
        map
    }

    fn root_total(&self, root: &Clique) -> Result<Score> {
        let rs = self.oracle.root_score(root);
        if rs.is_forbidden() {
            return Ok(Score::Forbidden);
        }
        let comps = self.separation(root);
        if comps.len() > 64 {
            return Err(Error::InstanceTooLarge(format!(
                "root {root} leaves {} backbone components (at most 64 supported)",
                comps.len()
            )));
        }
        let all = if comps.len() == 64 { u64::MAX } else { (1u64 << comps.len()) - 1 };
        Ok(rs + self.evaluate(root, all)?.value)
    }

    fn evaluate(&self, clique: &Clique, mask: u64) -> Result<Entry> {
        self.evaluate_keyed(self.key(clique), clique.members(), mask)
    }

    /// `members` must be sorted; a `Clique` is only built when the entry is missing.
    fn evaluate_keyed(&self, key: u128, members: &[Vertex], mask: u64) -> Result<Entry> {
        if mask == 0 {
            return Ok(Entry { value: Score::Value(0.0), choice: None });
        }
        let Some(memo) = &self.memo else {
            return self.compute(&Clique::new(members.iter().copied()), mask);
        };
        if let Some(e) = memo.get(&(key, mask)) {
            return Ok(*e);
        }
        let entry = self.compute(&Clique::new(members.iter().copied()), mask)?;
        memo.insert((key, mask), entry);
        Ok(entry)
    }

    fn branches(&self, mask: u64) -> Vec<u64> {
        match self.recurrence {
            Recurrence::SingleComponent => mask_indices(mask).map(|i| 1u64 << i).collect(),
            Recurrence::ComponentUnion => {
                let low = mask & mask.wrapping_neg();
                let rest = mask & !low;
                let mut out = Vec::with_capacity(1 << rest.count_ones());
                let mut sub = 0u64;
                loop {
                    out.push(sub | low);
                    if sub == rest {
                        break;
                    }
                    sub = sub.wrapping_sub(rest) & rest;
                }
                out
            }
        }
    }

    fn compute(&self, clique: &Clique, mask: u64) -> Result<Entry> {
        let comps = self.separation(clique);
        let n = self.g.n();
        let mut best = Entry { value: Score::Forbidden, choice: None };
        let mut in_region = vec![false; n];
        let mut child: Vec<Vertex> = Vec::with_capacity(clique.len());
        for branch in self.branches(mask) {
            let rest = self.evaluate(clique, mask & !branch)?.value;
            if rest.is_forbidden() {
                continue;
            }
            in_region.iter_mut().for_each(|b| *b = false);
            let mut region: Vec<Vertex> = Vec::new();
            for i in mask_indices(branch) {
                for &v in comps.component(i) {
                    in_region[v] = true;
                    region.push(v);
                }
            }
            region.sort_unstable();
            let bases: Vec<(Vertex, Clique)> = clique
                .iter()
                .filter(|&x| feasible_drop_in(self.h, x, &in_region))
                .map(|x| (x, clique.without(x)))
                .collect();
            for &w in &region {
                for (x, base) in &bases {
                    if !base.iter().all(|u| self.g.has_edge(u, w)) {
                        continue;
                    }
                    let s = self.oracle.score(w, base);
                    if s.is_forbidden() {
                        continue;
                    }
                    child.clear();
                    child.extend(base.iter().filter(|&u| u < w));
                    child.push(w);
                    child.extend(base.iter().filter(|&u| u > w));
                    let ckey = child.iter().fold(0u128, |acc, &v| (acc << self.bits) | v as u128);
                    let child_comps = self.separation_keyed(ckey, &child);
                    let cmask = child_mask(&child_comps, &in_region, region.len(), w, false)?;
                    let total = self.evaluate_keyed(ckey, &child, cmask)?.value + rest + s;
                    if total > best.value {
                        best = Entry { value: total, choice: Some(Choice { branch, pivot: w, drop: *x }) };
                    }
                }
            }
        }
        Ok(best)
    }

    /// Pre-order walk of the optimal choices, emitting `(pivot, base, parent)`.
    fn trace(&self, clique: &Clique, mask: u64, out: &mut Vec<(Vertex, Clique, Clique)>) -> Result<()> {
        if mask == 0 {
            return Ok(());
        }
        let entry = self.evaluate(clique, mask)?;
        let choice = entry
            .choice
            .ok_or_else(|| Error::Infeasible(format!("no attachment below {clique} covers the remaining components")))?;
        let comps = self.separation(clique);
        let mut in_region = vec![false; self.g.n()];
        let mut region_len = 0;
        for i in mask_indices(choice.branch) {
            for &v in comps.component(i) {
                in_region[v] = true;
                region_len += 1;
            }
        }
        let base = clique.without(choice.drop);
        let child = base.with(choice.pivot);
        let cmask = child_mask(&self.separation(&child), &in_region, region_len, choice.pivot, true)?;
        out.push((choice.pivot, base, clique.clone()));
        self.trace(&child, cmask, out)?;
        self.trace(clique, mask & !choice.branch, out)
    }

    fn assemble(&self, root: &Clique, k: usize) -> Result<SolveResult> {
        let n = self.g.n();
        let comps = self.separation(root);
        let all = if comps.len() == 64 { u64::MAX } else { (1u64 << comps.len()) - 1 };
        let mut steps = Vec::with_capacity(n - k - 1);
        self.trace(root, all, &mut steps)?;

        let r = root.members();
        let mut order: Vec<Creation> = (0..k).map(|j| Creation::new(r[j], r[..j].iter().copied())).collect();
        order.push(Creation::new(r[k], r[..k].iter().copied()));
        let mut links = Vec::with_capacity(steps.len());
        let mut clique_scores = Vec::with_capacity(steps.len());
        let mut total = self.oracle.root_score(root);
        let root_score = total.value().unwrap_or(f64::NEG_INFINITY);
        for (pivot, base, parent) in steps {
            let s = self.oracle.score(pivot, &base);
            total = total + s;
            clique_scores.push(CliqueScore { pivot, base: base.clone(), score: s.value().unwrap_or(f64::NEG_INFINITY) });
            order.push(Creation::new(pivot, base.iter()));
            links.push((base.with(pivot), parent, pivot));
        }
        let ktree = KTree::from_creation_order(n, k, order)?;
        let decomposition = TreeDecomposition::from_links(root.clone(), r[k], links);
        let score = total.value().ok_or_else(|| Error::Infeasible("optimal k-tree scored as forbidden".into()))?;
        debug_assert!(decomposition.check(k).is_ok());
        debug_assert!(build_tree_decomposition(&ktree).is_ok());
        Ok(SolveResult { ktree, decomposition, score, root_score, clique_scores })
    }

    fn infeasibility(&self, k: usize) -> Error {
        let cliques = self.g.cliques_of_size(k + 1);
        for &(u, v) in self.h.edges() {
            if !cliques.iter().any(|c| c.contains(u) && c.contains(v)) {
                return Error::Infeasible(format!("backbone edge ({u}, {v}) lies in no {}-clique of the graph", k + 1));
            }
        }
        Error::Infeasible(format!("no spanning {k}-tree of the graph retains the backbone with allowed scores"))
    }
}
