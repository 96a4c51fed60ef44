//! File formats: graph, score, joint-table and result JSON, sample CSV and DOT.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge, BackboneTree, Clique, Edge, KTree, UndirectedGraph, Vertex};
use crate::info::{ConditionalTable, ConditionalTables, JointTable, SampleMatrix};
use crate::score::ExplicitOracle;
use crate::solver::SolveResult;

fn join(vs: impl IntoIterator<Item = impl ToString>) -> String {
    vs.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn split(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Malformed(format!("bad integer list \"{s}\""))))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[Vertex; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    backbone: Option<Vec<[Vertex; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree_bound: Option<usize>,
}

/// A host graph and, when the file names one, its backbone.
#[derive(Clone, Debug)]
pub struct GraphFile {
    pub graph: UndirectedGraph,
    pub backbone: Option<BackboneTree>,
}

impl GraphFile {
    pub fn require_backbone(&self) -> Result<&BackboneTree> {
        self.backbone.as_ref().ok_or_else(|| Error::Malformed("graph file has no \"backbone\" key".into()))
    }
}

pub fn read_graph_json(text: &str) -> Result<GraphFile> {
    let raw: GraphJson = serde_json::from_str(text)?;
    let mut weights = Vec::new();
    for (key, w) in raw.weights.unwrap_or_default() {
        match split(&key)?.as_slice() {
            &[u, v] => weights.push((edge(u, v), w)),
            _ => return Err(Error::Malformed(format!("weight key \"{key}\" is not \"u,v\""))),
        }
    }
    let graph = UndirectedGraph::new(raw.n, raw.edges.iter().map(|e| (e[0], e[1])))?.with_weights(weights)?;
    let backbone = match raw.backbone {
        None => None,
        Some(b) => {
            let edges: Vec<Edge> = b.iter().map(|e| (e[0], e[1])).collect();
            let bound = match raw.degree_bound {
                Some(d) => d,
                None => {
                    let mut deg = vec![0usize; raw.n];
                    for &(u, v) in &edges {
                        deg[u.min(raw.n - 1)] += 1;
                        deg[v.min(raw.n - 1)] += 1;
                    }
                    deg.into_iter().max().unwrap_or(1).max(1)
                }
            };
            Some(BackboneTree::new(raw.n, edges, bound)?)
        }
    };
    Ok(GraphFile { graph, backbone })
}

pub fn write_graph_json(g: &UndirectedGraph, h: Option<&BackboneTree>) -> Result<String> {
    let raw = GraphJson {
        n: g.n(),
        edges: g.edges().map(|(u, v)| [u, v]).collect(),
        weights: (!g.weights().is_empty())
            .then(|| g.weights().iter().map(|(&(u, v), &w)| (format!("{u},{v}"), w)).collect()),
        backbone: h.map(|h| h.edges().iter().map(|&(u, v)| [u, v]).collect()),
        degree_bound: h.map(BackboneTree::degree_bound),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

#[derive(Serialize, Deserialize)]
struct ScoreJson {
    k: usize,
    root: BTreeMap<String, f64>,
    pivot: BTreeMap<String, f64>,
}

pub fn read_score_json(text: &str) -> Result<ExplicitOracle> {
    let raw: ScoreJson = serde_json::from_str(text)?;
    let mut f = ExplicitOracle::new(raw.k);
    for (key, s) in raw.root {
        let members = split(&key)?;
        if members.len() != raw.k + 1 {
            return Err(Error::Malformed(format!("root key \"{key}\" does not list {} vertices", raw.k + 1)));
        }
        f.insert_root(Clique::new(members), s);
    }
    for (key, s) in raw.pivot {
        let (w, base) = key
            .split_once('|')
            .ok_or_else(|| Error::Malformed(format!("pivot key \"{key}\" is not \"w|c0,c1,...\"")))?;
        let w: Vertex = w.trim().parse().map_err(|_| Error::Malformed(format!("bad pivot in \"{key}\"")))?;
        let base = split(base)?;
        if base.len() != raw.k {
            return Err(Error::Malformed(format!("pivot key \"{key}\" does not list {} base vertices", raw.k)));
        }
        f.insert_pivot(w, Clique::new(base), s);
    }
    Ok(f)
}

pub fn write_score_json(f: &ExplicitOracle) -> Result<String> {
    let raw = ScoreJson {
        k: f.k(),
        root: f.roots().iter().map(|(c, &s)| (join(c.iter()), s)).collect(),
        pivot: f.pivots().iter().map(|((w, c), &s)| (format!("{w}|{}", join(c.iter())), s)).collect(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

#[derive(Serialize, Deserialize)]
struct CliqueJson {
    pivot: Vertex,
    base: Vec<Vertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct ResultJson {
    k: usize,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_score: Option<f64>,
    root: Vec<Vertex>,
    cliques: Vec<CliqueJson>,
    edges: Vec<[Vertex; 2]>,
}

fn ktree_json(t: &KTree) -> ResultJson {
    ResultJson {
        k: t.k(),
        n: t.n(),
        score: None,
        root_score: None,
        root: t.root_order().unwrap_or_else(|| t.creation_order().iter().map(|c| c.vertex).collect()),
        cliques: t
            .pivot_terms()
            .iter()
            .map(|c| CliqueJson { pivot: c.vertex, base: c.precursors.clone(), score: None })
            .collect(),
        edges: t.edges().map(|(u, v)| [u, v]).collect(),
    }
}

/// `{"k", "n", "score", "root_score", "root", "cliques": [{"pivot", "base", "score"}], "edges"}`.
pub fn write_result_json(r: &SolveResult) -> Result<String> {
    let mut raw = ktree_json(&r.ktree);
    raw.score = Some(r.score);
    raw.root_score = Some(r.root_score);
    for (c, s) in raw.cliques.iter_mut().zip(&r.clique_scores) {
        c.score = Some(s.score);
    }
    Ok(serde_json::to_string_pretty(&raw)?)
}

/// The same layout without scores.
pub fn write_ktree_json(t: &KTree) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ktree_json(t))?)
}

/// Rebuilds the k-tree of a result (or k-tree) file from its root and attachments
/// and checks it against the listed edges.
pub fn read_ktree_json(text: &str) -> Result<KTree> {
    let raw: ResultJson = serde_json::from_str(text)?;
    let k = raw.k;
    if raw.root.len() < k {
        return Err(Error::Malformed(format!("root lists {} vertices, expected at least {k}", raw.root.len())));
    }
    let mut attachments: Vec<(Vertex, Vec<Vertex>)> =
        raw.root[k..].iter().map(|&v| (v, raw.root[..k].to_vec())).collect();
    attachments.extend(raw.cliques.into_iter().map(|c| (c.pivot, c.base)));
    let t = KTree::from_attachments(raw.n, k, &raw.root[..k], attachments)?;
    let listed: Vec<Edge> = {
        let mut e: Vec<Edge> = raw.edges.iter().map(|e| edge(e[0], e[1])).collect();
        e.sort_unstable();
        e
    };
    if listed != t.sorted_edges() {
        return Err(Error::Malformed("edge list does not match the root and cliques".into()));
    }
    Ok(t)
}

#[derive(Serialize, Deserialize)]
struct JointJson {
    vars: Vec<Vertex>,
    alphabets: Vec<usize>,
    probs: BTreeMap<String, f64>,
}

/// `{"vars", "alphabets", "probs": {"a0,a1,...": p}}`; absent assignments have probability 0.
pub fn read_joint_json(text: &str) -> Result<JointTable> {
    let raw: JointJson = serde_json::from_str(text)?;
    if raw.vars.len() != raw.alphabets.len() {
        return Err(Error::Malformed("joint table needs one alphabet per variable".into()));
    }
    let cells = raw.alphabets.iter().try_fold(1usize, |acc, &a| acc.checked_mul(a));
    let cells = cells.filter(|&c| c as u128 <= crate::info::MAX_ASSIGNMENT_CELLS).ok_or_else(|| {
        Error::AssignmentSpaceTooLarge(raw.alphabets.iter().fold(1u128, |a, &r| a.saturating_mul(r as u128)))
    })?;
    let mut probs = vec![0.0; cells];
    for (key, p) in raw.probs {
        let a = split(&key)?;
        if a.len() != raw.alphabets.len() || a.iter().zip(&raw.alphabets).any(|(&x, &r)| x >= r) {
            return Err(Error::Malformed(format!("assignment \"{key}\" does not fit the alphabets")));
        }
        let code = a.iter().zip(&raw.alphabets).fold(0, |acc, (&x, &r)| acc * r + x);
        probs[code] = p;
    }
    JointTable::new(raw.vars, raw.alphabets, probs)
}

pub fn write_joint_json(p: &JointTable) -> Result<String> {
    let probs = p
        .probs()
        .iter()
        .enumerate()
        .filter(|e| *e.1 > 0.0)
        .map(|(code, &q)| (join(p.decode(code)), q))
        .collect();
    let raw = JointJson { vars: p.vars().to_vec(), alphabets: p.alphabets().to_vec(), probs };
    Ok(serde_json::to_string_pretty(&raw)?)
}

/// Reads `x0,x1,...` headed CSV. Alphabets are inferred from the largest symbol per column.
pub fn read_samples_csv(reader: impl Read) -> Result<SampleMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for (i, h) in headers.iter().enumerate() {
        if h != format!("x{i}") {
            return Err(Error::Malformed(format!("column {i} is named \"{h}\", expected \"x{i}\"")));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.parse::<u32>().map_err(|_| Error::Malformed(format!("row {line}: \"{s}\" is not a symbol"))))
            .collect::<Result<Vec<u32>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Malformed("sample file has no rows".into()));
    }
    SampleMatrix::infer(&rows)
}

pub fn write_samples_csv(s: &SampleMatrix, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((0..s.alphabet_sizes().len()).map(|i| format!("x{i}")))?;
    for row in s.rows() {
        w.write_record(row.iter().map(u32::to_string))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    vertex: Vertex,
    parents: Vec<Vertex>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TruthJson {
    #[serde(flatten)]
    ktree: ResultJson,
    alphabets: Vec<usize>,
    tables: Vec<TableJson>,
}

/// Ground truth of a generated data set: the k-tree and its conditional tables.
pub fn write_truth_json(t: &KTree, tables: &ConditionalTables) -> Result<String> {
    let raw = TruthJson {
        ktree: ktree_json(t),
        alphabets: tables.alphabet_sizes().to_vec(),
        tables: tables
            .tables()
            .iter()
            .map(|c| TableJson { vertex: c.vertex, parents: c.parents.clone(), rows: c.rows.clone() })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&raw)?)
}

pub fn read_truth_json(text: &str) -> Result<(KTree, ConditionalTables)> {
    let raw: TruthJson = serde_json::from_str(text)?;
    let tables = ConditionalTables::new(
        raw.alphabets,
        raw.tables
            .into_iter()
            .map(|t| ConditionalTable { vertex: t.vertex, parents: t.parents, rows: t.rows })
            .collect(),
    )?;
    let t = read_ktree_json(&serde_json::to_string(&raw.ktree)?)?;
    Ok((t, tables))
}

/// Undirected DOT. Backbone edges are drawn bold.
pub fn to_dot(t: &KTree, h: Option<&BackboneTree>) -> String {
    let mut out = String::from("graph ktree {\n");
    for v in 0..t.n() {
        let _ = writeln!(out, "  {v};");
    }
    for (u, v) in t.edges() {
        if h.is_some_and(|h| h.has_edge(u, v)) {
            let _ = writeln!(out, "  {u} -- {v} [style=bold];");
        } else {
            let _ = writeln!(out, "  {u} -- {v};");
        }
    }
    out.push_str("}\n");
    out
}
