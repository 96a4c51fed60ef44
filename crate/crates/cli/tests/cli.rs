use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mskt::gen::random_explicit_scores;
use mskt::io::{read_graph_json, read_ktree_json, read_truth_json, write_graph_json, write_joint_json, write_score_json};
use mskt::{
    brute_min_kl, build_mi_oracle, solve_retaining_mskt, BackboneTree, ExplicitOracle, JointTable, UndirectedGraph,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn mskt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mskt")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mskt(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn field<'a>(stdout: &'a str, name: &str) -> &'a str {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(name).map(str::trim))
        .unwrap_or_else(|| panic!("no {name} line in {stdout}"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn plug_in_mi(rows: &[(usize, usize)]) -> f64 {
    let m = rows.len() as f64;
    let mut joint = [[0.0; 2]; 2];
    for &(a, b) in rows {
        joint[a][b] += 1.0 / m;
    }
    let px = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let py = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            if joint[a][b] > 0.0 {
                mi += joint[a][b] * (joint[a][b] / (px[a] * py[b])).log2();
            }
        }
    }
    mi
}

#[test]
fn fit_two_variables_gives_pairwise_mi() {
    let dir = TempDir::new().unwrap();
    let rows = [(0, 0), (0, 0), (0, 0), (0, 1), (1, 1), (1, 1), (1, 1), (1, 1), (1, 0)];
    let csv: String = std::iter::once("x0,x1".to_string()).chain(rows.iter().map(|(a, b)| format!("{a},{b}"))).collect::<Vec<_>>().join("\n");
    let samples = write(dir.path(), "s.csv", &csv);
    let graph = write(dir.path(), "g.json", &write_graph_json(&UndirectedGraph::complete(2), None).unwrap());
    let out = dir.path().join("scores.json");
    ok(&["fit", "--samples", s(&samples), "--graph", s(&graph), "--k", "1", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let expected = plug_in_mi(&rows);
    assert!((v["pivot"]["0|1"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!((v["pivot"]["1|0"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn fit_independent_columns_scores_zero() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("x0,x1,x2");
    for code in 0..8 {
        csv.push_str(&format!("\n{},{},{}", code >> 2 & 1, code >> 1 & 1, code & 1));
    }
    let samples = write(dir.path(), "s.csv", &csv);
    let graph = write(dir.path(), "g.json", &write_graph_json(&UndirectedGraph::complete(3), None).unwrap());
    let text = ok(&["fit", "--samples", s(&samples), "--graph", s(&graph), "--k", "2"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for table in ["root", "pivot"] {
        for (_, x) in v[table].as_object().unwrap() {
            assert!(x.as_f64().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn file_solve_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::complete(6);
    let h = BackboneTree::path(6);
    let f = random_explicit_scores(&g, 2, 100, &mut ChaCha8Rng::seed_from_u64(9));
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&h)).unwrap());
    let scores = write(dir.path(), "f.json", &write_score_json(&f).unwrap());
    let result = dir.path().join("r.json");
    let stdout = ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2", "--out", s(&result)]);
    let expected = solve_retaining_mskt(&g, &h, 2, &f).unwrap();
    assert_eq!(field(&stdout, "score ").parse::<f64>().unwrap(), expected.score);
    let t = read_ktree_json(&fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(t.sorted_edges(), expected.ktree.sorted_edges());
}

#[test]
fn fitted_scores_reproduce_the_sample_solve() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().join("data");
    ok(&["gen", "--n", "7", "--k", "2", "--degree", "3", "--samples", "2000", "--seed", "3", "--out-dir", s(&d)]);
    let graph = d.join("graph.json");
    let samples = d.join("samples.csv");
    let scores = dir.path().join("f.json");
    ok(&["fit", "--samples", s(&samples), "--graph", s(&graph), "--k", "2", "--out", s(&scores)]);
    let direct = ok(&["solve", "--graph", s(&graph), "--samples", s(&samples), "--k", "2"]);
    let via_file = ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2"]);
    assert_eq!(direct, via_file);
}

#[test]
fn k1_dot_is_the_backbone() {
    let dir = TempDir::new().unwrap();
    let h = BackboneTree::new(5, [(0, 3), (3, 1), (3, 4), (4, 2)], 3).unwrap();
    let graph = write(dir.path(), "g.json", &write_graph_json(&UndirectedGraph::complete(5), Some(&h)).unwrap());
    let dot = dir.path().join("t.dot");
    ok(&["solve", "--graph", s(&graph), "--k", "1", "--format", "dot", "--out", s(&dot)]);
    let text = fs::read_to_string(&dot).unwrap();
    let edges: Vec<&str> = text.lines().filter(|l| l.contains("--")).collect();
    assert_eq!(edges.len(), 4);
    assert!(edges.iter().all(|l| l.contains("style=bold")));
}

#[test]
fn missing_backbone_names_the_key() {
    let dir = TempDir::new().unwrap();
    let graph = write(dir.path(), "g.json", r#"{"n": 3, "edges": [[0, 1], [1, 2], [0, 2]]}"#);
    let out = mskt(&["solve", "--graph", s(&graph), "--k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"backbone\""));
}

#[test]
fn infeasible_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::new(4, [(0, 1), (1, 2), (2, 3), (0, 2)]).unwrap();
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&BackboneTree::path(4))).unwrap());
    let out = mskt(&["solve", "--graph", s(&graph), "--k", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(2, 3)"));
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(mskt(&["solve", "--k", "2"]).status.code(), Some(1));
    assert_eq!(mskt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mskt(&["gen", "--n", "3", "--k", "3", "--degree", "2"]).status.code(), Some(1));
    assert!(mskt(&["--help"]).status.success());
}

fn kl_of(dir: &Path, p: &JointTable, result: &Path) -> String {
    let joint = write(dir, "p.json", &write_joint_json(p).unwrap());
    ok(&["kl", "--joint", s(&joint), "--result", s(result)]).trim().to_string()
}

#[test]
fn kl_of_exact_topologies_is_zero() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::complete(3);
    let h = BackboneTree::path(3);
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&h)).unwrap());
    let result = dir.path().join("r.json");
    ok(&["solve", "--graph", s(&graph), "--k", "1", "--out", s(&result)]);

    // X1 copies X0 and X2 copies X1: exactly the backbone chain
    let copies = JointTable::new(vec![0, 1, 2], vec![2; 3], vec![0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
    assert_eq!(kl_of(dir.path(), &copies, &result), "0.000000");
    let product = JointTable::new(vec![0, 1, 2], vec![2; 3], vec![0.125; 8]).unwrap();
    assert_eq!(kl_of(dir.path(), &product, &result), "0.000000");
}

#[test]
fn kl_of_the_mi_optimum_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = JointTable::new((0..5).collect(), vec![2; 5], mskt::gen::dirichlet(32, 1.0, &mut rng).unwrap()).unwrap();
    let g = UndirectedGraph::complete(5);
    let h = BackboneTree::path(5);
    let f = ExplicitOracle::materialize(&build_mi_oracle(&p, &g, 2), &g, 2);
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&h)).unwrap());
    let scores = write(dir.path(), "f.json", &write_score_json(&f).unwrap());
    let result = dir.path().join("r.json");
    ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2", "--out", s(&result)]);
    let (_, best) = brute_min_kl(&p, &g, &h, 2).unwrap();
    assert_eq!(kl_of(dir.path(), &p, &result), format!("{best:.6}"));

    let joint = dir.path().join("p.json");
    let stdout = ok(&["oracle", "--graph", s(&graph), "--joint", s(&joint), "--k", "2"]);
    assert_eq!(field(&stdout, "kl "), format!("{best:.6}"));
}

#[test]
fn oracle_agrees_with_solve() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::complete(6);
    let h = BackboneTree::new(6, [(0, 1), (0, 2), (0, 3), (3, 4), (4, 5)], 3).unwrap();
    let f = random_explicit_scores(&g, 2, 100, &mut ChaCha8Rng::seed_from_u64(4));
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&h)).unwrap());
    let scores = write(dir.path(), "f.json", &write_score_json(&f).unwrap());
    let a = ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2"]);
    let b = ok(&["oracle", "--graph", s(&graph), "--scores", s(&scores), "--k", "2"]);
    assert_eq!(field(&a, "score "), field(&b, "score "));
}

#[test]
fn chowliu_of_two_variables_is_one_edge() {
    let dir = TempDir::new().unwrap();
    let samples = write(dir.path(), "s.csv", "x0,x1\n0,1\n1,0\n1,1\n");
    let v: serde_json::Value = serde_json::from_str(&ok(&["chowliu", "--samples", s(&samples)])).unwrap();
    assert_eq!(v["edges"], serde_json::json!([[0, 1]]));
}

#[test]
fn reduce_clique_decides_and_writes_the_instance() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::new(5, [(0, 2), (2, 4), (0, 4), (1, 3)]).unwrap();
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, None).unwrap());
    let out = dir.path().join("reduced.json");
    let stdout = ok(&["reduce-clique", "--graph", s(&graph), "--k", "3", "--out", s(&out)]);
    assert_eq!(field(&stdout, "clique "), "yes");
    assert_eq!(field(&stdout, "k' "), "2");
    let reduced = read_graph_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(reduced.graph.edge_count(), 10);
    assert_eq!(reduced.require_backbone().unwrap().edges(), BackboneTree::path(5).edges());

    let stdout = ok(&["reduce-clique", "--graph", s(&graph), "--k", "4"]);
    assert_eq!(field(&stdout, "clique "), "no");
}

#[test]
fn threads_do_not_change_output() {
    let dir = TempDir::new().unwrap();
    let g = UndirectedGraph::complete(9);
    let h = BackboneTree::new(9, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (4, 6), (6, 7), (7, 8)], 3).unwrap();
    let f = random_explicit_scores(&g, 2, 1000, &mut ChaCha8Rng::seed_from_u64(5));
    let graph = write(dir.path(), "g.json", &write_graph_json(&g, Some(&h)).unwrap());
    let scores = write(dir.path(), "f.json", &write_score_json(&f).unwrap());
    let mut outputs = Vec::new();
    for threads in ["1", "3", "0"] {
        let out = dir.path().join(format!("r{threads}.json"));
        let stdout = ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2", "--threads", threads, "--out", s(&out)]);
        outputs.push((stdout, fs::read(&out).unwrap()));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn gen_is_deterministic_and_the_truth_retains_the_backbone() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let d = dir.path().join(name);
        ok(&["gen", "--n", "8", "--k", "2", "--degree", "3", "--samples", "500", "--seed", "17", "--out-dir", s(&d)]);
        d
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["graph.json", "samples.csv", "truth.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let h = read_graph_json(&fs::read_to_string(a.join("graph.json")).unwrap()).unwrap().backbone.unwrap();
    let (t, _) = read_truth_json(&fs::read_to_string(a.join("truth.json")).unwrap()).unwrap();
    assert!(h.max_degree() <= 3);
    assert!(t.contains_backbone(&h));
    assert_eq!(fs::read_to_string(a.join("samples.csv")).unwrap().lines().count(), 501);
}

#[test]
fn generated_truth_is_recovered() {
    let dir = TempDir::new().unwrap();
    let mut recovered = 0;
    for seed in 0..20 {
        let d = dir.path().join(format!("s{seed}"));
        let seed = seed.to_string();
        ok(&["gen", "--n", "10", "--k", "2", "--degree", "3", "--samples", "100000", "--seed", &seed, "--out-dir", s(&d)]);
        let graph = d.join("graph.json");
        let scores = d.join("scores.json");
        let result = d.join("result.json");
        ok(&["fit", "--samples", s(&d.join("samples.csv")), "--graph", s(&graph), "--k", "2", "--out", s(&scores)]);
        ok(&["solve", "--graph", s(&graph), "--scores", s(&scores), "--k", "2", "--out", s(&result)]);
        let (truth, _) = read_truth_json(&fs::read_to_string(d.join("truth.json")).unwrap()).unwrap();
        let found = read_ktree_json(&fs::read_to_string(&result).unwrap()).unwrap();
        if found.edge_set() == truth.edge_set() {
            recovered += 1;
        }
    }
    assert!(recovered >= 18, "recovered {recovered} of 20");
}
