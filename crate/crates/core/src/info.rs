//! Plug-in information measures over discrete variables, the Markov k-tree
//! factorization and ancestral sampling from it.
//!
//! Logarithms are base 2 and `0 log 0 = 0`. Estimates are maximum likelihood with
//! no smoothing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{KTree, Vertex};

/// Largest assignment space [`markov_ktree_distribution`] will materialize.
pub const MAX_ASSIGNMENT_CELLS: u128 = 1 << 22;

/// Probabilities of the observed (positive) assignments of a variable subset.
///
/// Codes are mixed-radix with the first variable most significant.
#[derive(Clone, Debug)]
pub struct Marginal {
    vars: Vec<Vertex>,
    radices: Vec<usize>,
    entries: Vec<(u64, f64)>,
}

impl Marginal {
    pub fn vars(&self) -> &[Vertex] {
        &self.vars
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// `(code, probability)` pairs sorted by code.
    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn prob(&self, code: u64) -> f64 {
        match self.entries.binary_search_by_key(&code, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn entropy(&self) -> f64 {
        -self.entries.iter().filter(|e| e.1 > 0.0).map(|&(_, p)| p * p.log2()).sum::<f64>()
    }

    fn space(&self) -> u64 {
        self.radices.iter().map(|&r| r as u64).product()
    }
}

/// A source of marginal distributions over variables `0..n_vars`.
pub trait Distribution: Sync {
    fn n_vars(&self) -> usize;

    fn alphabet_size(&self, v: Vertex) -> usize;

    fn marginal(&self, vars: &[Vertex]) -> Marginal;
}

impl<D: Distribution + ?Sized> Distribution for &D {
    fn n_vars(&self) -> usize {
        (**self).n_vars()
    }

    fn alphabet_size(&self, v: Vertex) -> usize {
        (**self).alphabet_size(v)
    }

    fn marginal(&self, vars: &[Vertex]) -> Marginal {
        (**self).marginal(vars)
    }
}

/// Discrete samples, one row per observation.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    n_vars: usize,
    alphabet_sizes: Vec<usize>,
    data: Vec<u32>,
}

impl SampleMatrix {
    pub fn new(alphabet_sizes: Vec<usize>, rows: &[Vec<u32>]) -> Result<Self> {
        let n_vars = alphabet_sizes.len();
        let mut data = Vec::with_capacity(rows.len() * n_vars);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(Error::Malformed(format!("row {i} has {} symbols, expected {n_vars}", row.len())));
            }
            data.extend_from_slice(row);
        }
        SampleMatrix::from_flat(alphabet_sizes, data)
    }

    /// Row-major symbols.
    pub fn from_flat(alphabet_sizes: Vec<usize>, data: Vec<u32>) -> Result<Self> {
        let n_vars = alphabet_sizes.len();
        if n_vars == 0 {
            return Err(Error::Malformed("samples need at least one variable".into()));
        }
        if let Some(v) = alphabet_sizes.iter().position(|&a| a < 2) {
            return Err(Error::Malformed(format!("alphabet of variable {v} has fewer than 2 symbols")));
        }
        if data.is_empty() || !data.len().is_multiple_of(n_vars) {
            return Err(Error::Malformed("sample data must hold at least one complete row".into()));
        }
        for (i, &s) in data.iter().enumerate() {
            let v = i % n_vars;
            if s as usize >= alphabet_sizes[v] {
                return Err(Error::Malformed(format!(
                    "symbol {s} in row {} is outside the alphabet of variable {v}",
                    i / n_vars
                )));
            }
        }
        Ok(SampleMatrix { n_vars, alphabet_sizes, data })
    }

    /// Infers each alphabet as `max symbol + 1`, at least 2.
    pub fn infer(rows: &[Vec<u32>]) -> Result<Self> {
        let n_vars = rows.first().map_or(0, Vec::len);
        let mut sizes = vec![2usize; n_vars];
        for row in rows {
            for (v, &s) in row.iter().enumerate().take(n_vars) {
                sizes[v] = sizes[v].max(s as usize + 1);
            }
        }
        SampleMatrix::new(sizes, rows)
    }

    pub fn n_samples(&self) -> usize {
        self.data.len() / self.n_vars
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.n_vars..(i + 1) * self.n_vars]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.data.chunks_exact(self.n_vars)
    }

    /// Empirical joint over all variables.
    pub fn to_joint(&self) -> Result<JointTable> {
        let vars: Vec<Vertex> = (0..self.n_vars).collect();
        let cells = checked_space(&self.alphabet_sizes).filter(|&c| c as u128 <= MAX_ASSIGNMENT_CELLS);
        let Some(cells) = cells else {
            return Err(Error::AssignmentSpaceTooLarge(space_u128(&self.alphabet_sizes)));
        };
        let mut probs = vec![0.0; cells as usize];
        for (code, p) in self.marginal(&vars).entries {
            probs[code as usize] = p;
        }
        Ok(JointTable { vars, alphabets: self.alphabet_sizes.clone(), probs })
    }
}

fn checked_space(radices: &[usize]) -> Option<u64> {
    radices.iter().try_fold(1u64, |acc, &r| acc.checked_mul(r as u64))
}

fn space_u128(radices: &[usize]) -> u128 {
    radices.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
}

impl Distribution for SampleMatrix {
    fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn alphabet_size(&self, v: Vertex) -> usize {
        self.alphabet_sizes[v]
    }

    fn marginal(&self, vars: &[Vertex]) -> Marginal {
        let radices: Vec<usize> = vars.iter().map(|&v| self.alphabet_sizes[v]).collect();
        let m = self.n_samples() as f64;
        let entries = if checked_space(&radices).is_some() {
            let mut counts: FxHashMap<u64, u64> = FxHashMap::default();
            for row in self.rows() {
                let code = vars.iter().zip(&radices).fold(0u64, |acc, (&v, &r)| acc * r as u64 + row[v] as u64);
                *counts.entry(code).or_default() += 1;
            }
            let mut entries: Vec<(u64, f64)> = counts.into_iter().map(|(c, n)| (c, n as f64 / m)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            entries
        } else {
            // Codes would overflow: rank the distinct assignments instead.
            let mut counts: FxHashMap<Vec<u32>, u64> = FxHashMap::default();
            for row in self.rows() {
                *counts.entry(vars.iter().map(|&v| row[v]).collect()).or_default() += 1;
            }
            let mut keyed: Vec<(Vec<u32>, u64)> = counts.into_iter().collect();
            keyed.sort_unstable();
            keyed.into_iter().enumerate().map(|(i, (_, n))| (i as u64, n as f64 / m)).collect()
        };
        Marginal { vars: vars.to_vec(), radices, entries }
    }
}

/// Dense joint distribution over an ordered list of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    vars: Vec<Vertex>,
    alphabets: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(vars: Vec<Vertex>, alphabets: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if vars.len() != alphabets.len() || vars.is_empty() {
            return Err(Error::Malformed("joint table needs one alphabet per variable".into()));
        }
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != vars.len() {
            return Err(Error::Malformed("joint table lists a variable twice".into()));
        }
        let cells = space_u128(&alphabets);
        if cells > MAX_ASSIGNMENT_CELLS {
            return Err(Error::AssignmentSpaceTooLarge(cells));
        }
        if probs.len() as u128 != cells {
            return Err(Error::Malformed(format!("joint table has {} cells, expected {cells}", probs.len())));
        }
        if probs.iter().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
            return Err(Error::Malformed("joint table has a negative or non-finite probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Malformed(format!("joint table sums to {total}")));
        }
        Ok(JointTable { vars, alphabets, probs })
    }

    pub fn vars(&self) -> &[Vertex] {
        &self.vars
    }

    pub fn alphabets(&self) -> &[usize] {
        &self.alphabets
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mixed-radix code of a full assignment (first variable most significant).
    pub fn code(&self, assignment: &[u32]) -> usize {
        assignment.iter().zip(&self.alphabets).fold(0, |acc, (&a, &r)| acc * r + a as usize)
    }

    pub fn decode(&self, mut code: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.alphabets.len()];
        for (slot, &r) in out.iter_mut().zip(&self.alphabets).rev() {
            *slot = (code % r) as u32;
            code /= r;
        }
        out
    }

    fn position(&self, v: Vertex) -> usize {
        self.vars.iter().position(|&u| u == v).unwrap_or_else(|| panic!("variable {v} is not in the joint table"))
    }
}

impl Distribution for JointTable {
    fn n_vars(&self) -> usize {
        self.vars.len()
    }

    fn alphabet_size(&self, v: Vertex) -> usize {
        self.alphabets[self.position(v)]
    }

    fn marginal(&self, vars: &[Vertex]) -> Marginal {
        let positions: Vec<usize> = vars.iter().map(|&v| self.position(v)).collect();
        let radices: Vec<usize> = positions.iter().map(|&p| self.alphabets[p]).collect();
        let space: usize = radices.iter().product();
        let mut dense = vec![0.0; space];
        let mut digits = vec![0usize; self.alphabets.len()];
        for &p in &self.probs {
            if p > 0.0 {
                let code = positions.iter().zip(&radices).fold(0, |acc, (&pos, &r)| acc * r + digits[pos]);
                dense[code] += p;
            }
            increment(&mut digits, &self.alphabets);
        }
        let entries = dense.into_iter().enumerate().filter(|e| e.1 > 0.0).map(|(c, p)| (c as u64, p)).collect();
        Marginal { vars: vars.to_vec(), radices, entries }
    }
}

/// Advances a mixed-radix counter with the last digit fastest.
fn increment(digits: &mut [usize], radices: &[usize]) {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < radices[i] {
            return;
        }
        digits[i] = 0;
    }
}

/// `H(vars)` in bits.
pub fn entropy<D: Distribution + ?Sized>(d: &D, vars: &[Vertex]) -> f64 {
    d.marginal(vars).entropy()
}

/// `I(x; ys) = H(x) + H(ys) - H(x, ys)`, clamped at zero.
pub fn mutual_information<D: Distribution + ?Sized>(d: &D, x: Vertex, ys: &[Vertex]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let mut joint = ys.to_vec();
    joint.push(x);
    (entropy(d, &[x]) + entropy(d, ys) - entropy(d, &joint)).max(0.0)
}

/// `I(x; ys)` summed term by term as `Σ p(x,y) log p(x,y) / (p(x) p(y))`.
pub fn mutual_information_direct<D: Distribution + ?Sized>(d: &D, x: Vertex, ys: &[Vertex]) -> f64 {
    if ys.is_empty() {
        return 0.0;
    }
    let mut vars = vec![x];
    vars.extend_from_slice(ys);
    let joint = d.marginal(&vars);
    let px = d.marginal(&[x]);
    let py = d.marginal(ys);
    let ys_space = py.space();
    joint
        .entries()
        .iter()
        .map(|&(code, p)| {
            let q = px.prob(code / ys_space) * py.prob(code % ys_space);
            p * (p / q).log2()
        })
        .sum()
}

/// `Σ H(v) - H(vars)`: the information shared inside a set of variables.
pub fn total_correlation<D: Distribution + ?Sized>(d: &D, vars: &[Vertex]) -> f64 {
    let singles: f64 = vars.iter().map(|&v| entropy(d, &[v])).sum();
    (singles - entropy(d, vars)).max(0.0)
}

/// `D(p || q)` in bits; infinite when `q` misses part of `p`'s support.
pub fn kl_divergence(p: &JointTable, q: &JointTable) -> Result<f64> {
    if p.vars != q.vars || p.alphabets != q.alphabets {
        return Err(Error::InvalidParameter("KL divergence needs tables over the same variables and alphabets".into()));
    }
    let mut total = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += a * (a / b).log2();
        }
    }
    Ok(total.max(0.0))
}

/// Dense conditional `P(v | ctx)` indexed by `ctx_code * a_v + x`.
fn conditional(d: &(impl Distribution + ?Sized), v: Vertex, context: &[Vertex]) -> Vec<f64> {
    let a = d.alphabet_size(v);
    let own = d.marginal(&[v]);
    let ctx_space: usize = context.iter().map(|&u| d.alphabet_size(u)).product();
    let mut vars = context.to_vec();
    vars.push(v);
    let joint = d.marginal(&vars);
    let ctx = d.marginal(context);
    let mut out = vec![0.0; ctx_space * a];
    for c in 0..ctx_space {
        let pc = if context.is_empty() { 1.0 } else { ctx.prob(c as u64) };
        for x in 0..a {
            out[c * a + x] = if pc > 0.0 {
                joint.prob((c * a + x) as u64) / pc
            } else {
                // unseen context: fall back to the unconditional marginal
                own.prob(x as u64)
            };
        }
    }
    out
}

/// `P_G(x) = Π_i P(x_i | π(x_i))` with conditionals taken from `d`.
pub fn markov_ktree_distribution<D: Distribution + ?Sized>(t: &KTree, d: &D) -> Result<JointTable> {
    let n = t.n();
    if d.n_vars() != n {
        return Err(Error::InvalidParameter(format!("distribution has {} variables, k-tree has {n}", d.n_vars())));
    }
    let alphabets: Vec<usize> = (0..n).map(|v| d.alphabet_size(v)).collect();
    let cells = space_u128(&alphabets);
    if cells > MAX_ASSIGNMENT_CELLS {
        return Err(Error::AssignmentSpaceTooLarge(cells));
    }
    let factors: Vec<(Vertex, Vec<Vertex>, Vec<f64>)> = t
        .creation_order()
        .iter()
        .map(|c| (c.vertex, c.precursors.clone(), conditional(d, c.vertex, &c.precursors)))
        .collect();
    let mut probs = Vec::with_capacity(cells as usize);
    let mut digits = vec![0usize; n];
    for _ in 0..cells {
        let mut p = 1.0;
        for (v, ctx, table) in &factors {
            let c = ctx.iter().fold(0, |acc, &u| acc * alphabets[u] + digits[u]);
            p *= table[c * alphabets[*v] + digits[*v]];
        }
        probs.push(p);
        increment(&mut digits, &alphabets);
    }
    Ok(JointTable { vars: (0..n).collect(), alphabets, probs })
}

/// `P(vertex | parents)` with one row per parent assignment (first parent most significant).
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTable {
    pub vertex: Vertex,
    pub parents: Vec<Vertex>,
    pub rows: Vec<Vec<f64>>,
}

/// Conditional tables for every vertex, listed in a k-tree's creation order.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalTables {
    alphabet_sizes: Vec<usize>,
    tables: Vec<ConditionalTable>,
}

impl ConditionalTables {
    pub fn new(alphabet_sizes: Vec<usize>, tables: Vec<ConditionalTable>) -> Result<Self> {
        for t in &tables {
            let a = *alphabet_sizes
                .get(t.vertex)
                .ok_or_else(|| Error::Malformed(format!("table for unknown vertex {}", t.vertex)))?;
            let contexts: usize = t.parents.iter().map(|&p| alphabet_sizes.get(p).copied().unwrap_or(0)).product();
            if t.rows.len() != contexts {
                return Err(Error::Malformed(format!(
                    "table of vertex {} has {} rows, expected {contexts}",
                    t.vertex,
                    t.rows.len()
                )));
            }
            for (i, row) in t.rows.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != a || row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Malformed(format!("row {i} of vertex {} is not a distribution", t.vertex)));
                }
            }
        }
        Ok(ConditionalTables { alphabet_sizes, tables })
    }

    pub fn alphabet_sizes(&self) -> &[usize] {
        &self.alphabet_sizes
    }

    pub fn tables(&self) -> &[ConditionalTable] {
        &self.tables
    }

    fn check_against(&self, t: &KTree) -> Result<()> {
        if self.alphabet_sizes.len() != t.n() || self.tables.len() != t.n() {
            return Err(Error::Malformed("tables do not cover every vertex of the k-tree".into()));
        }
        for (table, step) in self.tables.iter().zip(t.creation_order()) {
            if table.vertex != step.vertex || table.parents != step.precursors {
                return Err(Error::Malformed(format!(
                    "table for vertex {} does not follow the creation order",
                    table.vertex
                )));
            }
        }
        Ok(())
    }

    /// The exact product distribution these tables define.
    pub fn joint(&self) -> Result<JointTable> {
        let n = self.alphabet_sizes.len();
        let cells = space_u128(&self.alphabet_sizes);
        if cells > MAX_ASSIGNMENT_CELLS {
            return Err(Error::AssignmentSpaceTooLarge(cells));
        }
        let a = &self.alphabet_sizes;
        let mut probs = Vec::with_capacity(cells as usize);
        let mut digits = vec![0usize; n];
        for _ in 0..cells {
            let p = self
                .tables
                .iter()
                .map(|t| t.rows[t.parents.iter().fold(0, |acc, &u| acc * a[u] + digits[u])][digits[t.vertex]])
                .product();
            probs.push(p);
            increment(&mut digits, a);
        }
        Ok(JointTable { vars: (0..n).collect(), alphabets: a.clone(), probs })
    }
}

/// Draws `m` i.i.d. rows ancestrally in creation order. The stream comes from
/// ChaCha8 seeded with `seed`, so equal seeds give equal matrices.
pub fn sample_markov_ktree(t: &KTree, tables: &ConditionalTables, m: usize, seed: u64) -> Result<SampleMatrix> {
    tables.check_against(t)?;
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let n = t.n();
    let a = tables.alphabet_sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0u32; m * n];
    for row in data.chunks_exact_mut(n) {
        for table in tables.tables() {
            let ctx = table.parents.iter().fold(0, |acc, &u| acc * a[u] + row[u] as usize);
            row[table.vertex] = draw(&table.rows[ctx], &mut rng);
        }
    }
    SampleMatrix::from_flat(a.to_vec(), data)
}

fn draw(probs: &[f64], rng: &mut impl Rng) -> u32 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u32;
        }
    }
    // rounding left a sliver above the last cumulative value
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u32
}
