//! Exhaustive reference answers for small instances.
//!
//! Everything here is exponential and guarded by hard size limits.

use rustc_hash::FxHashSet;

use crate::error::{Error, Result};
use crate::graph::{edge, BackboneTree, Creation, KTree, UndirectedGraph, Vertex};
use crate::info::{kl_divergence, markov_ktree_distribution, JointTable};
use crate::score::{Score, ScoreOracle};
use crate::solver::objective;

pub const MAX_ENUMERATION_VERTICES: usize = 9;
pub const MAX_ENUMERATION_K: usize = 3;
pub const MAX_CLIQUE_VERTICES: usize = 20;
pub const MAX_CLIQUE_K: usize = 6;

/// Distinct k-trees, sorted by their edge lists.
#[derive(Clone, Debug)]
pub struct EnumerationReport {
    pub instances: Vec<KTree>,
}

impl EnumerationReport {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Every spanning k-tree of `g` containing `h` (if given), grown from every root
/// by every attachment sequence and deduplicated by edge set.
pub fn enumerate_ktrees(g: &UndirectedGraph, h: Option<&BackboneTree>, k: usize) -> Result<EnumerationReport> {
    let n = g.n();
    if n > MAX_ENUMERATION_VERTICES || k > MAX_ENUMERATION_K {
        return Err(Error::InstanceTooLarge(format!(
            "enumeration is limited to n <= {MAX_ENUMERATION_VERTICES} and k <= {MAX_ENUMERATION_K}, got n = {n}, k = {k}"
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={n}")));
    }
    if let Some(h) = h {
        if h.n() != n {
            return Err(Error::InvalidBackbone(format!("backbone has {} vertices, graph has {n}", h.n())));
        }
    }
    let mut e = Enumerator { g, h, k, n, visited: FxHashSet::default(), found: Vec::new(), seen: FxHashSet::default() };
    if n == k {
        let all: Vec<Vertex> = (0..n).collect();
        if g.is_clique(&all) {
            e.found.push(KTree::from_attachments(n, k, &all, [])?);
        }
    } else {
        for root in g.cliques_of_size(k + 1) {
            let r = root.members();
            let mut order: Vec<Creation> = (0..k).map(|j| Creation::new(r[j], r[..j].iter().copied())).collect();
            order.push(Creation::new(r[k], r[..k].iter().copied()));
            let vmask = r.iter().fold(0u32, |m, &v| m | 1 << v);
            let emask = pair_mask(r);
            e.grow(vmask, emask, &mut order, &mut vec![r.to_vec()])?;
        }
    }
    let mut instances = e.found;
    instances.sort_by_cached_key(KTree::sorted_edges);
    Ok(EnumerationReport { instances })
}

pub fn enumerate_retaining_ktrees(g: &UndirectedGraph, h: &BackboneTree, k: usize) -> Result<EnumerationReport> {
    enumerate_ktrees(g, Some(h), k)
}

fn edge_bit(u: Vertex, v: Vertex) -> u64 {
    let (a, b) = edge(u, v);
    1u64 << (b * (b - 1) / 2 + a)
}

fn pair_mask(vs: &[Vertex]) -> u64 {
    let mut m = 0;
    for (i, &u) in vs.iter().enumerate() {
        for &v in &vs[i + 1..] {
            m |= edge_bit(u, v);
        }
    }
    m
}

struct Enumerator<'a> {
    g: &'a UndirectedGraph,
    h: Option<&'a BackboneTree>,
    k: usize,
    n: usize,
    visited: FxHashSet<(u32, u64)>,
    found: Vec<KTree>,
    seen: FxHashSet<u64>,
}

impl Enumerator<'_> {
    fn grow(&mut self, vmask: u32, emask: u64, order: &mut Vec<Creation>, cliques: &mut Vec<Vec<Vertex>>) -> Result<()> {
        if !self.visited.insert((vmask, emask)) {
            return Ok(());
        }
        if vmask.count_ones() as usize == self.n {
            if self.seen.insert(emask) {
                self.found.push(KTree::from_creation_order(self.n, self.k, order.clone())?);
            }
            return Ok(());
        }
        let mut bases: Vec<Vec<Vertex>> = Vec::new();
        for c in cliques.iter() {
            for x in c {
                let base: Vec<Vertex> = c.iter().copied().filter(|u| u != x).collect();
                if !bases.contains(&base) {
                    bases.push(base);
                }
            }
        }
        for v in (0..self.n).filter(|&v| vmask & 1 << v == 0) {
            for base in &bases {
                if !base.iter().all(|&u| self.g.has_edge(u, v)) {
                    continue;
                }
                // Backbone edges to already created vertices must be made now.
                if let Some(h) = self.h {
                    if h.neighbors(v).iter().any(|&u| vmask & 1 << u != 0 && !base.contains(&u)) {
                        continue;
                    }
                }
                let new_edges = base.iter().fold(0u64, |m, &u| m | edge_bit(u, v));
                let mut clique = base.clone();
                clique.push(v);
                clique.sort_unstable();
                order.push(Creation::new(v, base.iter().copied()));
                cliques.push(clique);
                self.grow(vmask | 1 << v, emask | new_edges, order, cliques)?;
                cliques.pop();
                order.pop();
            }
        }
        Ok(())
    }
}

/// `C(n, k) (k(n-k) + 1)^(n-k-2)`, the number of labeled k-trees on `n` vertices.
pub fn labeled_ktree_count(n: usize, k: usize) -> u128 {
    if n < k {
        return 0;
    }
    if n <= k + 1 {
        return 1;
    }
    let mut binom: u128 = 1;
    for i in 0..k as u128 {
        binom = binom * (n as u128 - i) / (i + 1);
    }
    binom * ((k * (n - k) + 1) as u128).pow((n - k - 2) as u32)
}

/// Best `(instance, root)` pair of a report. Attachment scores depend on which
/// clique is the root, so every root of every instance is tried; the returned
/// k-tree is rerooted at the winner. Ties go to the smaller edge list, then the
/// smaller root.
pub fn brute_max_score<O: ScoreOracle + ?Sized>(report: &EnumerationReport, h: &BackboneTree, f: &O) -> Result<(KTree, f64)> {
    let mut best: Option<(KTree, f64)> = None;
    for t in &report.instances {
        if let Some(&(u, v)) = h.edges().iter().find(|&&(u, v)| !t.has_edge(u, v)) {
            return Err(Error::NotRetaining(u, v));
        }
        let mut rootings = Vec::new();
        if t.n() == t.k() {
            rootings.push(t.clone());
        } else {
            let mut roots = t.cliques();
            roots.sort();
            for root in roots {
                rootings.push(t.reroot(root.members())?);
            }
        }
        for rooted in rootings {
            if let Score::Value(s) = objective(&rooted, f) {
                if best.as_ref().is_none_or(|b| s > b.1) {
                    best = Some((rooted, s));
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no enumerated k-tree has an allowed score".into()))
}

/// The retaining k-tree whose Markov distribution is closest to `p` in KL divergence.
pub fn brute_min_kl(p: &JointTable, g: &UndirectedGraph, h: &BackboneTree, k: usize) -> Result<(KTree, f64)> {
    let report = enumerate_retaining_ktrees(g, h, k)?;
    let mut best: Option<(KTree, f64)> = None;
    for t in report.instances {
        let d = kl_divergence(p, &markov_ktree_distribution(&t, p)?)?;
        if best.as_ref().is_none_or(|b| d < b.1) {
            best = Some((t, d));
        }
    }
    best.ok_or_else(|| Error::Infeasible("no spanning k-tree retains the backbone".into()))
}

/// Whether `g` has a clique on `k` vertices, by trying every k-subset.
pub fn max_clique_exists(g: &UndirectedGraph, k: usize) -> Result<bool> {
    if g.n() > MAX_CLIQUE_VERTICES || k > MAX_CLIQUE_K {
        return Err(Error::InstanceTooLarge(format!(
            "clique search is limited to n <= {MAX_CLIQUE_VERTICES} and k <= {MAX_CLIQUE_K}"
        )));
    }
    Ok(k == 0 || !g.cliques_of_size(k).is_empty())
}
