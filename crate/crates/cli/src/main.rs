//! `mskt`: fit, solve and check backbone-retaining maximum spanning k-trees.
//!
//! Exit status is 0 on success, 2 when no retaining k-tree exists and 1 for
//! every other failure, including bad arguments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mskt::gen::{random_backbone, random_retaining_ktree, random_tables};
use mskt::io::{
    read_graph_json, read_joint_json, read_ktree_json, read_samples_csv, read_score_json, to_dot, write_graph_json,
    write_ktree_json, write_result_json, write_samples_csv, write_score_json, write_truth_json, GraphFile,
};
use mskt::{
    brute_max_score, brute_min_kl, build_mi_oracle, chow_liu, decide_kclique, enumerate_retaining_ktrees,
    kl_divergence, markov_ktree_distribution, reduce_kclique, sample_markov_ktree, solve_with_options, BackboneTree,
    Error, ExplicitOracle, KTree, SampleMatrix, ScoreOracle, SolverOptions, UndirectedGraph, WeightProductOracle,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "mskt", version, about = "Backbone-retaining maximum spanning k-trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Dot,
}

/// Where clique scores come from. With neither flag the graph's edge weights are
/// multiplied over each clique.
#[derive(clap::Args)]
struct ScoreSource {
    /// Explicit score table (JSON)
    #[arg(long, conflicts_with = "samples")]
    scores: Option<PathBuf>,
    /// Samples (CSV); scores are mutual information estimates
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate mutual-information scores for every clique of the graph
    Fit {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the best spanning k-tree containing the graph's backbone
    Solve {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        source: ScoreSource,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Solver threads; 0 uses every core
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Maximum mutual-information spanning tree of the samples
    Chowliu {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// KL divergence in bits from a joint table to the Markov k-tree of a result
    Kl {
        #[arg(long)]
        joint: PathBuf,
        #[arg(long)]
        result: PathBuf,
    },
    /// Exhaustive search over retaining k-trees (at most 9 vertices)
    Oracle {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        source: ScoreSource,
        /// Minimize KL divergence to this joint table instead of maximizing a score
        #[arg(long, conflicts_with_all = ["scores", "samples"])]
        joint: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Rewrite k-clique on the graph as a path-retaining instance and decide it
    ReduceClique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// Reduced instance (graph JSON with weights and backbone)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random backbone, ground-truth k-tree, tables and samples
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        degree: usize,
        /// Number of samples to draw
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        alphabet: usize,
        /// Dirichlet concentration of the table rows; 1 is uniform on the simplex
        #[arg(long, default_value_t = 1.0)]
        concentration: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Infeasible(_)) { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> mskt::Result<()> {
    match command {
        Command::Fit { samples, graph, k, out } => {
            let s = load_samples(&samples)?;
            let g = load_graph(&graph)?.graph;
            check_width(&s, &g)?;
            check_k(k, g.n())?;
            let f = ExplicitOracle::materialize(&build_mi_oracle(&s, &g, k), &g, k);
            emit(out.as_deref(), &write_score_json(&f)?)
        }
        Command::Solve { graph, source, k, out, format, threads } => {
            let file = load_graph(&graph)?;
            let h = file.require_backbone()?;
            check_k(k, file.graph.n())?;
            let options = SolverOptions { threads, ..SolverOptions::default() };
            let samples = source.samples.as_deref().map(load_samples).transpose()?;
            let f = oracle(&file.graph, k, source.scores.as_deref(), samples.as_ref())?;
            let r = solve_with_options(&file.graph, h, k, &*f, &options)?;
            println!("score {}", r.score);
            println!("root {}", join(r.root().map(|c| c.members().to_vec()).unwrap_or_default()));
            if let Some(out) = out {
                let text = match format {
                    Format::Json => write_result_json(&r)?,
                    Format::Dot => to_dot(&r.ktree, Some(h)),
                };
                emit(Some(&out), &text)?;
            }
            Ok(())
        }
        Command::Chowliu { samples, out, format } => {
            let t = chow_liu(&load_samples(&samples)?)?;
            emit(out.as_deref(), &render(&t, None, format)?)
        }
        Command::Kl { joint, result } => {
            let p = read_joint_json(&read(&joint)?)?;
            let t = read_ktree_json(&read(&result)?)?;
            let q = markov_ktree_distribution(&t, &p)?;
            println!("{:.6}", kl_divergence(&p, &q)?);
            Ok(())
        }
        Command::Oracle { graph, source, joint, k, out, format } => {
            let file = load_graph(&graph)?;
            let h = file.require_backbone()?;
            check_k(k, file.graph.n())?;
            let t = if let Some(joint) = joint {
                let p = read_joint_json(&read(&joint)?)?;
                let (t, d) = brute_min_kl(&p, &file.graph, h, k)?;
                println!("kl {d:.6}");
                t
            } else {
                let samples = source.samples.as_deref().map(load_samples).transpose()?;
                let f = oracle(&file.graph, k, source.scores.as_deref(), samples.as_ref())?;
                let report = enumerate_retaining_ktrees(&file.graph, h, k)?;
                let (t, s) = brute_max_score(&report, h, &*f)?;
                println!("instances {}", report.len());
                println!("score {s}");
                t
            };
            println!("root {}", join(t.root_order().unwrap_or_default()));
            emit(out.as_deref(), &render(&t, Some(h), format)?)
        }
        Command::ReduceClique { graph, k, out } => {
            let g = load_graph(&graph)?.graph;
            let inst = reduce_kclique(&g, k)?;
            println!("k' {}", inst.kprime);
            println!("threshold {}", inst.sigma);
            if k >= 3 {
                println!("clique {}", if decide_kclique(&g, k)? { "yes" } else { "no" });
            }
            if let Some(out) = out {
                emit(Some(&out), &write_graph_json(&inst.gprime, Some(&inst.h))?)?;
            }
            Ok(())
        }
        Command::Gen { n, k, degree, samples, seed, alphabet, concentration, out_dir } => {
            if degree < 2 || k == 0 || n <= k || alphabet < 2 {
                return Err(Error::InvalidParameter(format!(
                    "need degree >= 2, 1 <= k < n and alphabet >= 2 (got n = {n}, k = {k}, degree = {degree}, alphabet = {alphabet})"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = UndirectedGraph::complete(n);
            let h: BackboneTree = random_backbone(n, degree, &mut rng)?;
            let truth = random_retaining_ktree(&g, &h, k, &mut rng)?;
            let tables = random_tables(&truth, &vec![alphabet; n], concentration, &mut rng)?;
            let data = sample_markov_ktree(&truth, &tables, samples, rng.random())?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("graph.json"), write_graph_json(&g, Some(&h))?)?;
            fs::write(out_dir.join("truth.json"), write_truth_json(&truth, &tables)?)?;
            write_samples_csv(&data, fs::File::create(out_dir.join("samples.csv"))?)?;
            println!("wrote {}", out_dir.display());
            Ok(())
        }
    }
}

fn oracle<'a>(
    g: &'a UndirectedGraph,
    k: usize,
    scores: Option<&Path>,
    samples: Option<&'a SampleMatrix>,
) -> mskt::Result<Box<dyn ScoreOracle + 'a>> {
    if let Some(path) = scores {
        let f = read_score_json(&read(path)?)?;
        if f.k() != k {
            return Err(Error::InvalidParameter(format!("score file is for k = {}, not {k}", f.k())));
        }
        return Ok(Box::new(f));
    }
    if let Some(s) = samples {
        check_width(s, g)?;
        return Ok(Box::new(build_mi_oracle(s, g, k)));
    }
    Ok(Box::new(WeightProductOracle::new(g)))
}

fn check_k(k: usize, n: usize) -> mskt::Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in 1..={n}")));
    }
    Ok(())
}

fn check_width(s: &SampleMatrix, g: &UndirectedGraph) -> mskt::Result<()> {
    if s.alphabet_sizes().len() != g.n() {
        return Err(Error::Malformed(format!(
            "samples have {} columns but the graph has {} vertices",
            s.alphabet_sizes().len(),
            g.n()
        )));
    }
    Ok(())
}

fn read(path: &Path) -> mskt::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))
}

fn load_graph(path: &Path) -> mskt::Result<GraphFile> {
    read_graph_json(&read(path)?)
}

fn load_samples(path: &Path) -> mskt::Result<SampleMatrix> {
    let file = fs::File::open(path).map_err(|e| Error::Malformed(format!("{}: {e}", path.display())))?;
    read_samples_csv(file)
}

fn render(t: &KTree, h: Option<&BackboneTree>, format: Format) -> mskt::Result<String> {
    match format {
        Format::Json => write_ktree_json(t),
        Format::Dot => Ok(to_dot(t, h)),
    }
}

fn emit(out: Option<&Path>, text: &str) -> mskt::Result<()> {
    match out {
        Some(path) => Ok(fs::write(path, text)?),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn join(vs: Vec<usize>) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}
