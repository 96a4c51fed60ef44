//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion other than the informational scaling check fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mskt::gen::{noisy_copy_tables, random_backbone, random_explicit_scores, random_ktree};
use mskt::oracle::labeled_ktree_count;
use mskt::{
    brute_max_score, brute_min_kl, build_mi_oracle, chow_liu, decide_kclique, enumerate_ktrees,
    enumerate_retaining_ktrees, kl_divergence, markov_ktree_distribution, max_clique_exists, mutual_information,
    mutual_information_direct, objective, sample_markov_ktree, separate, solve_retaining_mskt, solve_with_options,
    validate_ktree, BackboneTree, Clique, Edge, JointTable, KTree, ScoreOracle, SolveResult, SolverOptions,
    UndirectedGraph, WeightProductOracle,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Every solver output in the suite goes through this check (criterion 2).
#[derive(Default)]
struct RetentionLedger {
    checked: usize,
    failures: Vec<String>,
}

impl RetentionLedger {
    fn record(&mut self, r: &SolveResult, h: &BackboneTree) {
        self.checked += 1;
        let t = &r.ktree;
        let n = t.n();
        let k = t.k();
        if !t.contains_backbone(h) {
            self.failures.push(format!("n={n} k={k}: backbone edge missing"));
        }
        if let Err(e) = validate_ktree(t) {
            self.failures.push(format!("n={n} k={k}: {e}"));
        }
        if t.cliques().len() != n - k {
            self.failures.push(format!("n={n} k={k}: {} cliques", t.cliques().len()));
        }
    }
}

fn random_joint(n: usize, alphabet: usize, rng: &mut impl Rng) -> JointTable {
    let cells = alphabet.pow(n as u32);
    let raw: Vec<f64> = (0..cells).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    JointTable::new((0..n).collect(), vec![alphabet; n], raw.into_iter().map(|p| p / total).collect()).unwrap()
}

/// Host graph: the backbone plus each other pair with probability `p`.
fn random_host(h: &BackboneTree, p: f64, rng: &mut impl Rng) -> UndirectedGraph {
    let n = h.n();
    let mut edges: BTreeSet<Edge> = h.edges().iter().copied().collect();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.insert((u, v));
            }
        }
    }
    UndirectedGraph::new(n, edges).unwrap()
}

/// Best score of a k-tree over all of its roots.
fn best_over_roots<O: ScoreOracle>(t: &KTree, f: &O) -> Option<f64> {
    t.cliques()
        .iter()
        .filter_map(|c| objective(&t.reroot(c.members()).unwrap(), f).value())
        .max_by(f64::total_cmp)
}

fn criterion_1(ledger: &mut RetentionLedger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut instances = 0;
    let mut infeasible = 0;
    let mut mismatches = Vec::new();
    while instances < 120 {
        let k = 1 + instances % 3;
        let n = rng.random_range(k + 2..=8);
        let h = random_backbone(n, 3, &mut rng).unwrap();
        let g = random_host(&h, 0.75, &mut rng);
        let f = random_explicit_scores(&g, k, 100, &mut rng);
        instances += 1;
        let report = enumerate_retaining_ktrees(&g, &h, k).unwrap();
        let solved = solve_retaining_mskt(&g, &h, k, &f);
        match (report.is_empty(), solved) {
            (true, Err(mskt::Error::Infeasible(_))) => infeasible += 1,
            (true, other) => mismatches.push(format!("n={n} k={k}: oracle infeasible, solver {:?}", other.map(|r| r.score))),
            (false, Err(e)) => mismatches.push(format!("n={n} k={k}: solver failed: {e}")),
            (false, Ok(r)) => {
                ledger.record(&r, &h);
                let (_, best) = brute_max_score(&report, &h, &f).unwrap();
                let optima: Vec<&KTree> =
                    report.instances.iter().filter(|t| best_over_roots(t, &f) == Some(best)).collect();
                if r.score != best {
                    mismatches.push(format!("n={n} k={k}: solver {} vs brute force {best}", r.score));
                } else if !optima.iter().any(|t| **t == r.ktree) {
                    mismatches.push(format!("n={n} k={k}: solver k-tree is not among the optima"));
                } else if optima.len() == 1 && *optima[0] != r.ktree {
                    mismatches.push(format!("n={n} k={k}: unique optimum differs"));
                }
            }
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{} of {instances} instances agree with brute force ({infeasible} infeasible on both sides){}",
            instances - mismatches.len(),
            mismatches.first().map(|m| format!("; first mismatch {m}")).unwrap_or_default()
        ),
    }
}

fn criterion_2(ledger: &RetentionLedger) -> Outcome {
    Outcome {
        pass: ledger.failures.is_empty() && ledger.checked > 0,
        detail: format!(
            "{} solver outputs checked, {} violations{}",
            ledger.checked,
            ledger.failures.len(),
            ledger.failures.first().map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
    }
}

fn criterion_3(ledger: &mut RetentionLedger) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let g = UndirectedGraph::complete(5);
    let h = BackboneTree::path(5);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let tables = 25;
    for _ in 0..tables {
        let p = random_joint(5, 2, &mut rng);
        let f = build_mi_oracle(&p, &g, 2);
        let r = solve_retaining_mskt(&g, &h, 2, &f).unwrap();
        ledger.record(&r, &h);
        let solver_kl = kl_divergence(&p, &markov_ktree_distribution(&r.ktree, &p).unwrap()).unwrap();
        let (_, min_kl) = brute_min_kl(&p, &g, &h, 2).unwrap();
        let gap = (solver_kl - min_kl).abs();
        worst = worst.max(gap);
        if gap > 1e-9 {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{} of {tables} tables at minimum KL, largest gap {worst:.3e} (tolerance 1e-9)", tables - failures),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut violations = 0;
    let trials = 1200;
    for i in 0..trials {
        let d = 2 + i % 2;
        let k = 1 + (i / 2) % 3;
        let n = rng.random_range(k + 2..=30);
        let h = random_backbone(n, d, &mut rng).unwrap();
        let mut vs: Vec<usize> = (0..n).collect();
        vs.shuffle(&mut rng);
        let sep = Clique::new(vs[..=k].iter().copied());
        if separate(&h, &sep).len() > mskt::component_count_bound(d, k) {
            violations += 1;
        }
    }
    Outcome { pass: violations == 0, detail: format!("{trials} tree/separator pairs, {violations} above d(k+1)-k") }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut cliques_checked = 0;
    let mut violations = 0;
    for i in 0..24 {
        let k = 1 + i % 3;
        let n = rng.random_range(k + 2..=7);
        let h = random_backbone(n, 3, &mut rng).unwrap();
        let report = enumerate_retaining_ktrees(&UndirectedGraph::complete(n), &h, k).unwrap();
        for t in &report.instances {
            let cliques = t.cliques();
            for c in &cliques {
                let neighbors = cliques.iter().filter(|d| *d != c && c.intersection_len(d) == k).count();
                cliques_checked += 1;
                if neighbors > separate(&h, c).len() {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        pass: violations == 0 && cliques_checked > 0,
        detail: format!("{cliques_checked} cliques of enumerated k-trees, {violations} with more neighbors than components"),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut checks = 0;
    let mut agree = 0;
    let mut yes = 0;
    for _ in 0..30 {
        let mut edges = Vec::new();
        for u in 0..10 {
            for v in u + 1..10 {
                if rng.random_bool(0.5) {
                    edges.push((u, v));
                }
            }
        }
        let g = UndirectedGraph::new(10, edges).unwrap();
        for k in [3, 4] {
            checks += 1;
            let truth = max_clique_exists(&g, k).unwrap();
            yes += truth as usize;
            if decide_kclique(&g, k).unwrap() == truth {
                agree += 1;
            }
        }
    }
    Outcome {
        pass: agree == checks,
        detail: format!("{agree} of {checks} decisions match clique search ({yes} yes-instances)"),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    let mut problems: Vec<String> = Vec::new();
    let mut worst_identity: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut worst_invariance: f64 = 0.0;
    for i in 0..50 {
        let k = 1 + i % 3;
        let n = rng.random_range(k + 1..=6);
        let alphabet = if n <= 4 { 3 } else { 2 };
        let p = random_joint(n, alphabet, &mut rng);
        let q = random_joint(n, alphabet, &mut rng);

        for x in 0..n {
            if mutual_information(&p, x, &[]) != 0.0 {
                problems.push("I(x; {}) != 0".into());
            }
            let ys: Vec<usize> = (0..n).filter(|&y| y != x && rng.random_bool(0.6)).collect();
            let a = mutual_information(&p, x, &ys);
            let b = mutual_information_direct(&p, x, &ys);
            if a < 0.0 {
                problems.push("negative mutual information".into());
            }
            worst_identity = worst_identity.max((a - b).abs());
        }
        let dpp = kl_divergence(&p, &p).unwrap();
        let dpq = kl_divergence(&p, &q).unwrap();
        if dpp != 0.0 || dpq.is_nan() || dpq <= 0.0 {
            problems.push(format!("KL(p,p) = {dpp}, KL(p,q) = {dpq}"));
        }

        let t = random_ktree(n, k, &mut rng).unwrap();
        let pg = markov_ktree_distribution(&t, &p).unwrap();
        worst_sum = worst_sum.max((pg.total() - 1.0).abs());
        let cliques = t.cliques();
        let other = &cliques[rng.random_range(0..cliques.len())];
        let mut root = other.members().to_vec();
        root.shuffle(&mut rng);
        let rerooted = t.reroot(&root).unwrap();
        let pg2 = markov_ktree_distribution(&rerooted, &p).unwrap();
        let table_gap = pg.probs().iter().zip(pg2.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let g = UndirectedGraph::complete(n);
        let f = build_mi_oracle(&p, &g, k);
        let o1 = objective(&t, &f).value().unwrap();
        let o2 = objective(&rerooted, &f).value().unwrap();
        worst_invariance = worst_invariance.max(table_gap).max((o1 - o2).abs());
    }
    let pass = problems.is_empty() && worst_identity <= 1e-9 && worst_sum <= 1e-9 && worst_invariance <= 1e-9;
    Outcome {
        pass,
        detail: format!(
            "50 tables/k-trees: MI identity gap {worst_identity:.1e}, |sum P_G - 1| {worst_sum:.1e}, precursor invariance gap {worst_invariance:.1e} (tolerance 1e-9){}",
            problems.first().map(|p| format!("; {p}")).unwrap_or_default()
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut recovered = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..6).collect();
        order.shuffle(&mut rng);
        let chain = KTree::from_attachments(6, 1, &order[..1], (1..6).map(|i| (order[i], vec![order[i - 1]]))).unwrap();
        let tables = noisy_copy_tables(&chain, 2, 0.9).unwrap();
        let samples = sample_markov_ktree(&chain, &tables, 100_000, seed).unwrap();
        if chow_liu(&samples).unwrap() == chain {
            recovered += 1;
        }
    }
    Outcome { pass: recovered >= 18, detail: format!("{recovered} of 20 chains recovered exactly (need 18)") }
}

fn criterion_9() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (n, k) in [(4, 1), (5, 1), (4, 2), (5, 2), (6, 2), (5, 3)] {
        let count = enumerate_ktrees(&UndirectedGraph::complete(n), None, k).unwrap().len() as u128;
        let formula = labeled_ktree_count(n, k);
        pass &= count == formula;
        lines.push(format!("({n},{k}) {count}/{formula}"));
    }
    Outcome { pass, detail: format!("enumerated/formula: {}", lines.join(", ")) }
}

fn criterion_10(ledger: &mut RetentionLedger) -> Outcome {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let options = SolverOptions { threads, ..SolverOptions::default() };
    let mut medians = Vec::new();
    for n in [20usize, 40, 80] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut weights = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                weights.push(((u, v), rng.random_range(0.5..1.5)));
            }
        }
        let g = UndirectedGraph::complete(n).with_weights(weights).unwrap();
        let h = BackboneTree::path(n);
        let f = WeightProductOracle::new(&g);
        let mut times: Vec<Duration> = Vec::new();
        for _ in 0..5 {
            let start = Instant::now();
            let r = solve_with_options(&g, &h, 2, &f, &options).unwrap();
            times.push(start.elapsed());
            ledger.record(&r, &h);
        }
        times.sort();
        medians.push((n, times[2].as_secs_f64()));
    }
    let ratios: Vec<f64> = medians.iter().map(|&(n, t)| t / (n as f64).powi(4)).collect();
    let spread = ratios.iter().cloned().fold(f64::MIN, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    Outcome {
        pass: spread <= 3.0,
        detail: format!(
            "median seconds {} with {threads} threads; t/n^4 spread {spread:.2} (informational, limit 3)",
            medians.iter().map(|(n, t)| format!("n={n}: {t:.3}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn main() {
    let mut ledger = RetentionLedger::default();
    let mut failed = Vec::new();
    let mut report = |id: usize, name: &str, budget: Option<f64>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let mut outcome = run();
        let secs = start.elapsed().as_secs_f64();
        if let Some(limit) = budget {
            if secs > limit {
                outcome.pass = false;
                outcome.detail.push_str(&format!("; exceeded {limit} s budget"));
            }
        }
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} [{verdict}] {name}: {} ({secs:.1} s)", outcome.detail);
        if !outcome.pass && id != 10 {
            failed.push(id);
        }
    };
    report(1, "oracle optimality", Some(60.0), &mut || criterion_1(&mut ledger));
    report(3, "KL minimization end to end", Some(120.0), &mut || criterion_3(&mut ledger));
    report(4, "separation component bound", None, &mut criterion_4);
    report(5, "neighbor count bound", None, &mut criterion_5);
    report(6, "k-clique reduction", Some(120.0), &mut criterion_6);
    report(7, "information identities", None, &mut criterion_7);
    report(8, "Chow-Liu chain recovery", None, &mut criterion_8);
    report(9, "labeled k-tree census", None, &mut criterion_9);
    report(10, "scaling smoke", None, &mut || criterion_10(&mut ledger));
    report(2, "retention and validity", None, &mut || criterion_2(&ledger));
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
