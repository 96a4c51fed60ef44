//! Random instances: backbones, k-trees and conditional tables.
//!
//! Callers pass the generator, normally a `ChaCha8Rng` seeded from a `u64`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution as _, Gamma};

use crate::error::{Error, Result};
use crate::graph::{BackboneTree, Creation, KTree, UndirectedGraph, Vertex};
use crate::info::{ConditionalTable, ConditionalTables};
use crate::score::ExplicitOracle;
use crate::solver::solve_retaining_mskt;

/// Uniformly random labels, each new vertex hung below a random earlier vertex
/// that still has room under the degree bound.
pub fn random_backbone(n: usize, degree_bound: usize, rng: &mut impl Rng) -> Result<BackboneTree> {
    if n == 0 || degree_bound == 0 || (degree_bound == 1 && n > 2) {
        return Err(Error::InvalidParameter(format!("no spanning tree on {n} vertices has degree <= {degree_bound}")));
    }
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let mut degree = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    for i in 1..n {
        let open: Vec<Vertex> = order[..i].iter().copied().filter(|&u| degree[u] < degree_bound).collect();
        let u = open[rng.random_range(0..open.len())];
        let v = order[i];
        degree[u] += 1;
        degree[v] += 1;
        edges.push((u, v));
    }
    BackboneTree::new(n, edges, degree_bound)
}

/// A random k-tree: a random root, then each remaining vertex (in random order)
/// attached to a random k-subset of a random existing clique.
pub fn random_ktree(n: usize, k: usize, rng: &mut impl Rng) -> Result<KTree> {
    if k == 0 || n < k {
        return Err(Error::InvalidParameter(format!("no {k}-tree on {n} vertices")));
    }
    let mut order: Vec<Vertex> = (0..n).collect();
    order.shuffle(rng);
    let mut steps: Vec<Creation> = (0..k.min(n)).map(|j| Creation::new(order[j], order[..j].iter().copied())).collect();
    let mut cliques: Vec<Vec<Vertex>> = Vec::new();
    if n > k {
        steps.push(Creation::new(order[k], order[..k].iter().copied()));
        cliques.push(order[..=k].to_vec());
    }
    for &v in order.iter().skip(k + 1) {
        let c = &cliques[rng.random_range(0..cliques.len())];
        let drop = rng.random_range(0..=k);
        let base: Vec<Vertex> = c.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &u)| u).collect();
        let mut next = base.clone();
        next.push(v);
        steps.push(Creation::new(v, base));
        cliques.push(next);
    }
    KTree::from_creation_order(n, k, steps)
}

/// Random integer scores in `0..=max` for every root and attachment of `g`.
pub fn random_explicit_scores(g: &UndirectedGraph, k: usize, max: u32, rng: &mut impl Rng) -> ExplicitOracle {
    let mut f = ExplicitOracle::new(k);
    for c in g.cliques_of_size(k + 1) {
        f.insert_root(c.clone(), rng.random_range(0..=max) as f64);
        for w in c.iter() {
            f.insert_pivot(w, c.without(w), rng.random_range(0..=max) as f64);
        }
    }
    f
}

/// A random spanning k-tree of `g` containing `h`: the optimum under random scores.
pub fn random_retaining_ktree(g: &UndirectedGraph, h: &BackboneTree, k: usize, rng: &mut impl Rng) -> Result<KTree> {
    let f = random_explicit_scores(g, k, 1_000_000, rng);
    Ok(solve_retaining_mskt(g, h, k, &f)?.ktree)
}

/// Draws from the symmetric Dirichlet with the given concentration; 1 is uniform on the simplex.
pub fn dirichlet(size: usize, concentration: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidParameter(format!("concentration {concentration}: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..size).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 && total.is_finite() {
            let mut row: Vec<f64> = draws.iter().map(|x| x / total).collect();
            // keep the row summing to 1 to within rounding of a single entry
            let drift: f64 = 1.0 - row.iter().sum::<f64>();
            if let Some(last) = row.last_mut() {
                *last = (*last + drift).max(0.0);
            }
            return Ok(row);
        }
    }
}

/// Conditional tables for `t` with every row drawn from a symmetric Dirichlet.
pub fn random_tables(t: &KTree, alphabets: &[usize], concentration: f64, rng: &mut impl Rng) -> Result<ConditionalTables> {
    if alphabets.len() != t.n() {
        return Err(Error::InvalidParameter("one alphabet per vertex is required".into()));
    }
    let mut tables = Vec::with_capacity(t.n());
    for step in t.creation_order() {
        let contexts: usize = step.precursors.iter().map(|&u| alphabets[u]).product();
        let rows = (0..contexts)
            .map(|_| dirichlet(alphabets[step.vertex], concentration, rng))
            .collect::<Result<Vec<_>>>()?;
        tables.push(ConditionalTable { vertex: step.vertex, parents: step.precursors.clone(), rows });
    }
    ConditionalTables::new(alphabets.to_vec(), tables)
}

/// Tables where each vertex copies a function of its precursors with probability
/// `fidelity` and is otherwise uniform over the remaining symbols. The copied
/// symbol is that of the first precursor. Roots are uniform.
pub fn noisy_copy_tables(t: &KTree, alphabet: usize, fidelity: f64) -> Result<ConditionalTables> {
    if alphabet < 2 || !(0.0..=1.0).contains(&fidelity) {
        return Err(Error::InvalidParameter("need alphabet >= 2 and fidelity in [0, 1]".into()));
    }
    let other = (1.0 - fidelity) / (alphabet - 1) as f64;
    let mut tables = Vec::with_capacity(t.n());
    for step in t.creation_order() {
        let k = step.precursors.len();
        let contexts = alphabet.pow(k as u32);
        let rows = (0..contexts)
            .map(|ctx| {
                if k == 0 {
                    return vec![1.0 / alphabet as f64; alphabet];
                }
                // first precursor is the most significant digit of the context code
                let target = ctx / alphabet.pow(k as u32 - 1);
                (0..alphabet).map(|x| if x == target { fidelity } else { other }).collect()
            })
            .collect();
        tables.push(ConditionalTable { vertex: step.vertex, parents: step.precursors.clone(), rows });
    }
    ConditionalTables::new(vec![alphabet; t.n()], tables)
}
