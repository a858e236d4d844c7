// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Epsilon-ball similarity graph over transactions.
//!
//! Rows are nodes. Two rows are joined by an edge weighted with their cosine
//! similarity when that similarity is strictly greater than epsilon.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::dataset::Transaction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    epsilon: f64,
}

impl GraphConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon must be in (0, 1], got {epsilon}")));
        }
        Ok(GraphConfig { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Weighted undirected graph without self-loops.
///
/// Edges are stored once with `u < v`, sorted by `(u, v)`; a CSR adjacency
/// holds both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    node_count: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(u32, f64)>,
    total_weight: f64,
}

impl SimilarityGraph {
    /// Builds a graph from an arbitrary positive-weight edge list.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if node_count > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{node_count} nodes exceed the u32 index space")));
        }
        let mut canonical = Vec::new();
        for e in edges {
            let (u, v) = if e.u <= e.v { (e.u, e.v) } else { (e.v, e.u) };
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            if v >= node_count {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) outside {node_count} nodes"
                )));
            }
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-positive weight {}",
                    e.weight
                )));
            }
            canonical.push(Edge { u, v, weight: e.weight });
        }
        canonical.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = canonical.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", w[0].u, w[0].v)));
        }
        Ok(Self::from_canonical(node_count, canonical))
    }

    /// `edges` must already be sorted, deduplicated and `u < v`.
    fn from_canonical(node_count: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; node_count];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..node_count].to_vec();
        let mut adjacency = vec![(0u32, 0.0f64); offsets[node_count]];
        // u-major insertion keeps each neighbor list ascending
        for e in &edges {
            adjacency[cursor[e.v]] = (e.u as u32, e.weight);
            cursor[e.v] += 1;
        }
        for e in &edges {
            adjacency[cursor[e.u]] = (e.v as u32, e.weight);
            cursor[e.u] += 1;
        }
        let total_weight = edges.iter().map(|e| e.weight).sum();
        SimilarityGraph { node_count, edges, offsets, adjacency, total_weight }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `node` with edge weights, ascending by neighbor id.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency[self.offsets[node]..self.offsets[node + 1]]
            .iter()
            .map(|&(n, w)| (n as usize, w))
    }

    /// Weighted degree.
    pub fn strength(&self, node: usize) -> f64 {
        self.neighbors(node).map(|(_, w)| w).sum()
    }

    /// Sum of all edge weights (each edge once).
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn mean_degree(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.node_count as f64
        }
    }

    /// Copy of the graph with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_edges(
            self.node_count,
            self.edges.iter().map(|e| Edge { weight: e.weight * factor, ..*e }),
        )
    }

    /// Writes `u v weight` lines in canonical edge order.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.u, e.v, e.weight)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R, node_count: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Internal(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidGraph(format!("line {}: expected `u v weight`", idx + 1));
            let mut parts = line.split_whitespace();
            let u = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let weight = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            edges.push(Edge { u, v, weight });
        }
        Self::from_edges(node_count, edges)
    }
}

fn similarity_from_counts(shared: usize, len_a: usize, len_b: usize) -> f64 {
    shared as f64 / ((len_a * len_b) as f64).sqrt()
}

fn shared_items(a: &Transaction, b: &Transaction) -> usize {
    let (mut i, mut j, mut shared) = (0, 0, 0);
    while i < a.items.len() && j < b.items.len() {
        match a.items[i].cmp(&b.items[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared
}

/// Cosine of the two rows' one-hot indicator vectors.
pub fn cosine_similarity(a: &Transaction, b: &Transaction) -> Result<f64> {
    for t in [a, b] {
        if t.is_empty() {
            return Err(Error::EmptyTransaction(t.row_id));
        }
    }
    Ok(similarity_from_counts(shared_items(a, b), a.len(), b.len()))
}

/// All-pairs epsilon-ball graph. Node `i` is `transactions[i]`.
///
/// Pair counting goes through an inverted item index, so only pairs that
/// share at least one item are touched. Empty transactions become isolated
/// nodes. Work is split per source node on the ambient rayon pool and
/// merged in node order.
pub fn build_graph(transactions: &[Transaction], config: &GraphConfig) -> Result<SimilarityGraph> {
    let n = transactions.len();
    if n == 0 {
        return Err(Error::InvalidGraph("at least one transaction is required".into()));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidGraph(format!("{n} transactions exceed the u32 index space")));
    }
    let item_count = transactions
        .iter()
        .flat_map(|t| t.items.last())
        .map(|id| id.index() + 1)
        .max()
        .unwrap_or(0);
    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); item_count];
    for (node, t) in transactions.iter().enumerate() {
        for id in &t.items {
            postings[id.index()].push(node as u32);
        }
    }

    let epsilon = config.epsilon;
    let per_node: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0u32; n], Vec::<u32>::new()),
            |(counts, touched), u| {
                let tu = &transactions[u];
                for id in &tu.items {
                    let list = &postings[id.index()];
                    let start = list.partition_point(|&v| v as usize <= u);
                    for &v in &list[start..] {
                        if counts[v as usize] == 0 {
                            touched.push(v);
                        }
                        counts[v as usize] += 1;
                    }
                }
                touched.sort_unstable();
                let mut out = Vec::new();
                for &v in touched.iter() {
                    let shared = counts[v as usize] as usize;
                    counts[v as usize] = 0;
                    let w = similarity_from_counts(shared, tu.len(), transactions[v as usize].len());
                    if w > epsilon {
                        out.push(Edge { u, v: v as usize, weight: w });
                    }
                }
                touched.clear();
                out
            },
        )
        .collect();

    let edges: Vec<Edge> = per_node.into_iter().flatten().collect();
    Ok(SimilarityGraph::from_canonical(n, edges))
}

/// Reference O(n²) construction used to cross-check [`build_graph`].
pub fn build_graph_naive(transactions: &[Transaction], config: &GraphConfig) -> Result<SimilarityGraph> {
    let mut edges = Vec::new();
    for u in 0..transactions.len() {
        for v in u + 1..transactions.len() {
            let (a, b) = (&transactions[u], &transactions[v]);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let w = cosine_similarity(a, b)?;
            if w > config.epsilon {
                edges.push(Edge { u, v, weight: w });
            }
        }
    }
    SimilarityGraph::from_edges(transactions.len(), edges)
}

/// Checks the stored edge invariants; used by tests and artifact loading.
pub fn validate(graph: &SimilarityGraph, epsilon: Option<f64>) -> Result<()> {
    let mut seen = HashSet::new();
    let mut sum = 0.0;
    for e in graph.edges() {
        if e.u >= e.v {
            return Err(Error::Internal(format!("edge ({}, {}) not canonical", e.u, e.v)));
        }
        if !seen.insert((e.u, e.v)) {
            return Err(Error::Internal(format!("duplicate edge ({}, {})", e.u, e.v)));
        }
        if let Some(eps) = epsilon {
            if !(e.weight > eps && e.weight <= 1.0) {
                return Err(Error::Internal(format!(
                    "edge ({}, {}) weight {} outside ({eps}, 1]",
                    e.u, e.v, e.weight
                )));
            }
        }
        sum += e.weight;
    }
    if sum != graph.total_weight() {
        return Err(Error::Internal("total weight does not match edge sum".into()));
    }
    Ok(())
}
