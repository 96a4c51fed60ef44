//! k-Clique as a Hamiltonian-path retaining MSkT instance.
//!
//! A graph `g` on `n` vertices becomes the complete graph with 0/1 weights marking
//! the edges of `g`, the path `0-1-...-(n-1)` as backbone and `k' = k - 1`. A clique
//! of the (k-1)-tree scores 1 exactly when its `k` vertices are a clique of `g`.

use crate::error::{Error, Result};
use crate::graph::{BackboneTree, UndirectedGraph};
use crate::score::WeightProductOracle;
use crate::solver::{solve_with_options, SolveResult, SolverOptions};

#[derive(Clone, Debug)]
pub struct HMsktInstance {
    pub gprime: UndirectedGraph,
    pub h: BackboneTree,
    pub kprime: usize,
    pub sigma: f64,
}

pub fn reduce_kclique(g: &UndirectedGraph, k: usize) -> Result<HMsktInstance> {
    let n = g.n();
    if k < 2 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 2..={n}")));
    }
    let mut weights = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in u + 1..n {
            weights.push(((u, v), if g.has_edge(u, v) { 1.0 } else { 0.0 }));
        }
    }
    let gprime = UndirectedGraph::complete(n).with_weights(weights)?;
    Ok(HMsktInstance { gprime, h: BackboneTree::path(n), kprime: k - 1, sigma: 1.0 })
}

/// Solves the reduced instance and compares its optimum with the threshold.
///
/// Needs `k >= 3`. For `k = 2` the only spanning 1-tree containing the path is the
/// path itself, so only consecutive vertex pairs would ever be examined.
pub fn decide_kclique(g: &UndirectedGraph, k: usize) -> Result<bool> {
    decide_with_options(g, k, &SolverOptions::default()).map(|(yes, _)| yes)
}

pub fn decide_with_options(g: &UndirectedGraph, k: usize, options: &SolverOptions) -> Result<(bool, SolveResult)> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "the path-retaining reduction needs k >= 3 (got {k}); with k = 2 the 1-tree is forced to be the path"
        )));
    }
    let inst = reduce_kclique(g, k)?;
    let f = WeightProductOracle::new(&inst.gprime);
    let result = solve_with_options(&inst.gprime, &inst.h, inst.kprime, &f, options)?;
    Ok((result.score >= inst.sigma, result))
}
