//! Backbone-retaining maximum spanning k-trees.
//!
//! Given a host graph `G`, a bounded-degree spanning tree `H` of it and a score
//! for every (k+1)-clique, [`solve_retaining_mskt`] finds the spanning k-tree of
//! `G` that contains `H` and maximizes the total score. With mutual-information
//! scores the optimum is the Markov k-tree closest to the data in KL divergence.
//!
//! ```
//! use mskt::{build_mi_oracle, solve_retaining_mskt, BackboneTree, JointTable, UndirectedGraph};
//!
//! // X1 copies X0, X2 is independent.
//! let p = JointTable::new(vec![0, 1, 2], vec![2, 2, 2], vec![0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25]).unwrap();
//! let g = UndirectedGraph::complete(3);
//! let h = BackboneTree::path(3);
//! let f = build_mi_oracle(&p, &g, 1);
//! let r = solve_retaining_mskt(&g, &h, 1, &f).unwrap();
//! assert_eq!(r.ktree.sorted_edges(), vec![(0, 1), (1, 2)]);
//! assert!((r.score - 1.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod gen;
pub mod graph;
pub mod info;
pub mod io;
pub mod oracle;
pub mod reduction;
pub mod score;
pub mod separation;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{
    build_tree_decomposition, derive_precursor, edge, validate_backbone, validate_ktree, BackboneTree,
    BackboneViolation, Clique, Creation, Edge, KTree, KTreeViolation, TreeDecomposition, UndirectedGraph, Vertex,
};
pub use info::{
    entropy, kl_divergence, markov_ktree_distribution, mutual_information, mutual_information_direct,
    sample_markov_ktree, total_correlation, ConditionalTable, ConditionalTables, Distribution, JointTable,
    SampleMatrix,
};
pub use oracle::{brute_max_score, brute_min_kl, enumerate_ktrees, enumerate_retaining_ktrees, max_clique_exists};
pub use reduction::{decide_kclique, reduce_kclique, HMsktInstance};
pub use score::{build_mi_oracle, ExplicitOracle, MiOracle, Score, ScoreOracle, WeightProductOracle};
pub use separation::{child_id_set, component_count_bound, feasible_drop, separate, ComponentMap, IdSet};
pub use solver::{
    chow_liu, objective, score_ktree, solve_retaining_mskt, solve_with_options, CliqueScore, Recurrence,
    SolveResult, SolverOptions,
};
