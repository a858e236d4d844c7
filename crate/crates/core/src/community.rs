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

//! Louvain community detection, per-community strength and selection.
//!
//! Modularity follows the weighted Newman form
//! `Q = 1/(2m) Σ_ij [A_ij - k_i k_j / (2m)] δ(c_i, c_j)`, evaluated per
//! community as `Σ_c [in_c / m - (tot_c / 2m)²]` where `in_c` is the edge
//! weight inside `c` (each edge once) and `tot_c` the summed weighted degree.
//!
//! Louvain here is fully deterministic: nodes are swept in ascending id
//! order, ties between equally good targets go to the lowest community id,
//! and a node only moves on a strictly positive gain.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;
use crate::threshold::min_count;

/// Smallest modularity gain that counts as an improvement.
const MIN_GAIN: f64 = 1e-12;

/// Graphs with `nodes x adjacency entries` up to this size also get
/// vertex-moving fine-tuning after Louvain converges.
const FINE_TUNE_BUDGET: usize = 1 << 24;

/// Disjoint cover of the nodes with dense community ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    communities: Vec<Vec<usize>>,
}

impl Partition {
    /// Relabels arbitrary community labels densely, in order of first
    /// appearance when walking nodes by ascending id.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut communities: Vec<Vec<usize>> = Vec::new();
        let assignment = labels
            .iter()
            .enumerate()
            .map(|(node, &label)| {
                let id = *remap.entry(label).or_insert_with(|| {
                    communities.push(Vec::new());
                    communities.len() - 1
                });
                communities[id].push(node);
                id
            })
            .collect();
        Partition { assignment, communities }
    }

    pub fn singletons(node_count: usize) -> Self {
        Partition {
            assignment: (0..node_count).collect(),
            communities: (0..node_count).map(|n| vec![n]).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn members(&self, community: usize) -> &[usize] {
        &self.communities[community]
    }

    /// `node_id community_id` lines.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (node, c) in self.assignment.iter().enumerate() {
            writeln!(out, "{node} {c}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R, node_count: usize) -> Result<Self> {
        let mut labels = vec![usize::MAX; node_count];
        for (idx, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Internal(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::InvalidPartition(format!("line {}: expected `node community`", idx + 1));
            let mut parts = line.split_whitespace();
            let node: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let community: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() || node >= node_count || labels[node] != usize::MAX {
                return Err(bad());
            }
            labels[node] = community;
        }
        if let Some(node) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("node {node} has no community")));
        }
        let partition = Partition::from_labels(&labels);
        if partition.assignment != labels {
            return Err(Error::InvalidPartition("community ids are not in canonical order".into()));
        }
        Ok(partition)
    }
}

/// Working graph for one Louvain level. Super-nodes carry their internal
/// weight as `inner`, counted twice in `degree` like a self-loop.
#[derive(Debug, Clone)]
struct LevelGraph {
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    inner: Vec<f64>,
    degree: Vec<f64>,
    total_weight: f64,
}

impl LevelGraph {
    fn from_graph(graph: &SimilarityGraph) -> Self {
        let n = graph.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adjacency = Vec::with_capacity(2 * graph.edge_count());
        let mut degree = Vec::with_capacity(n);
        offsets.push(0);
        for node in 0..n {
            let mut k = 0.0;
            for (nb, w) in graph.neighbors(node) {
                adjacency.push((nb, w));
                k += w;
            }
            degree.push(k);
            offsets.push(adjacency.len());
        }
        LevelGraph {
            offsets,
            adjacency,
            inner: vec![0.0; n],
            degree,
            total_weight: graph.total_weight(),
        }
    }

    fn len(&self) -> usize {
        self.degree.len()
    }

    fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Collapses each community of `dense` (ids `0..count`) into one node.
    fn aggregate(&self, dense: &[usize], count: usize) -> LevelGraph {
        let mut inner = vec![0.0; count];
        let mut degree = vec![0.0; count];
        let mut links = Vec::new();
        for node in 0..self.len() {
            let c = dense[node];
            inner[c] += self.inner[node];
            degree[c] += self.degree[node];
            for &(nb, w) in self.neighbors(node) {
                if nb <= node {
                    continue;
                }
                let d = dense[nb];
                if c == d {
                    inner[c] += w;
                } else {
                    links.push((c.min(d), c.max(d), w));
                }
            }
        }
        links.sort_by_key(|&(a, b, _)| (a, b));
        let mut merged: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in links {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (a, b) => last.2 += w,
                _ => merged.push((a, b, w)),
            }
        }
        let mut lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
        for &(a, b, w) in &merged {
            lists[a].push((b, w));
            lists[b].push((a, w));
        }
        let mut offsets = Vec::with_capacity(count + 1);
        let mut adjacency = Vec::with_capacity(2 * merged.len());
        offsets.push(0);
        for mut list in lists {
            list.sort_by_key(|&(nb, _)| nb);
            adjacency.extend(list);
            offsets.push(adjacency.len());
        }
        LevelGraph { offsets, adjacency, inner, degree, total_weight: self.total_weight }
    }

    fn modularity(&self, labels: &[usize]) -> f64 {
        let m = self.total_weight;
        let count = labels.iter().max().map_or(0, |&c| c + 1);
        let mut inside = vec![0.0; count];
        let mut tot = vec![0.0; count];
        for node in 0..self.len() {
            let c = labels[node];
            inside[c] += self.inner[node];
            tot[c] += self.degree[node];
            for &(nb, w) in self.neighbors(node) {
                if nb > node && labels[nb] == c {
                    inside[c] += w;
                }
            }
        }
        inside
            .iter()
            .zip(&tot)
            .map(|(&i, &t)| i / m - (t / (2.0 * m)).powi(2))
            .sum()
    }
}

/// An accepted node move, reported in terms of the original graph's nodes.
#[derive(Debug, Clone)]
pub struct LouvainMove {
    /// Aggregation depth the move happened at (0 = original nodes).
    pub level: usize,
    /// Incremental modularity gain computed by the move rule.
    pub gain: f64,
    pub before: Vec<usize>,
    pub after: Vec<usize>,
}

type Tracer<'a> = Option<&'a mut dyn FnMut(&LouvainMove)>;

/// Gain of inserting an isolated node with degree `k` and `k_in` weight
/// into a community whose total degree is `tot`, times `m`.
fn insertion_score(k_in: f64, tot: f64, k: f64, m: f64) -> f64 {
    k_in - tot * k / (2.0 * m)
}

/// Repeated ascending sweeps of single-node moves until a sweep moves nothing.
///
/// `comm` holds the starting labels (any values `< level.len()`).
/// `origin` maps each original node to its level node, for tracing.
fn local_moves(
    level: &LevelGraph,
    depth: usize,
    order: &[usize],
    comm: &mut [usize],
    origin: &[usize],
    tracer: &mut Tracer<'_>,
) -> bool {
    let n = level.len();
    let m = level.total_weight;
    let mut tot = vec![0.0; n];
    for node in 0..n {
        tot[comm[node]] += level.degree[node];
    }
    let mut link = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;

    loop {
        let mut moved = false;
        for &node in order {
            let current = comm[node];
            let k = level.degree[node];
            for &(nb, w) in level.neighbors(node) {
                let c = comm[nb];
                if !seen[c] {
                    seen[c] = true;
                    touched.push(c);
                }
                link[c] += w;
            }
            tot[current] -= k;
            let stay = insertion_score(link[current], tot[current], k, m);
            touched.sort_unstable();
            let mut best = current;
            let mut best_score = stay;
            for &c in &touched {
                if c == current {
                    continue;
                }
                let score = insertion_score(link[c], tot[c], k, m);
                if score > best_score {
                    best = c;
                    best_score = score;
                }
            }
            let gain = (best_score - stay) / m;
            if best == current || gain <= MIN_GAIN {
                best = current;
            }
            tot[best] += k;
            if best != current {
                if let Some(trace) = tracer.as_mut() {
                    let before: Vec<usize> = origin.iter().map(|&l| comm[l]).collect();
                    comm[node] = best;
                    let after: Vec<usize> = origin.iter().map(|&l| comm[l]).collect();
                    trace(&LouvainMove { level: depth, gain, before, after });
                }
                comm[node] = best;
                moved = true;
                any_move = true;
            }
            for &c in &touched {
                link[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
        }
        if !moved {
            return any_move;
        }
    }
}

fn densify(labels: &[usize]) -> (Vec<usize>, usize) {
    let partition = Partition::from_labels(labels);
    let count = partition.community_count();
    (partition.assignment, count)
}

pub fn louvain(graph: &SimilarityGraph) -> Partition {
    louvain_impl(graph, None)
}

/// [`louvain`] that reports every accepted move to `on_move`.
pub fn louvain_traced(graph: &SimilarityGraph, on_move: &mut dyn FnMut(&LouvainMove)) -> Partition {
    louvain_impl(graph, Some(on_move))
}

/// One multilevel Louvain run from the partition `start`.
///
/// Coarsening repeats move/aggregate passes until a pass moves nothing.
/// The final partition is then projected back down through every level,
/// coarsest first, with another round of local moves at each one, ending
/// at the original nodes. If any of those moves fire, coarsening restarts
/// from the refined partition. The result is locally optimal for single
/// nodes at every level, original nodes included.
fn louvain_run(base: &LevelGraph, start: Vec<usize>, tracer: &mut Tracer<'_>) -> Vec<usize> {
    let n = base.len();
    let identity: Vec<usize> = (0..n).collect();
    let mut membership = start;

    loop {
        let (dense, count) = densify(&membership);
        let mut level = base.aggregate(&dense, count);
        let mut origin = dense;
        let mut levels: Vec<(LevelGraph, Vec<usize>)> = Vec::new();
        loop {
            let order: Vec<usize> = (0..level.len()).collect();
            let mut comm = order.clone();
            if !local_moves(&level, levels.len(), &order, &mut comm, &origin, tracer) {
                break;
            }
            let (dense, count) = densify(&comm);
            let next_origin = origin.iter().map(|&x| dense[x]).collect();
            let next = level.aggregate(&dense, count);
            levels.push((level, origin));
            level = next;
            origin = next_origin;
        }
        membership = origin;

        let mut refined = false;
        let descent = levels.iter().rev().map(|(l, o)| (l, o.as_slice())).chain([(base, identity.as_slice())]);
        for (step, (level, origin)) in descent.enumerate() {
            let mut comm = vec![0; level.len()];
            for (node, &x) in origin.iter().enumerate() {
                comm[x] = membership[node];
            }
            let order: Vec<usize> = (0..level.len()).collect();
            let depth = levels.len().saturating_sub(step);
            if local_moves(level, depth, &order, &mut comm, origin, tracer) {
                refined = true;
                for (node, &x) in origin.iter().enumerate() {
                    membership[node] = comm[x];
                }
            }
        }
        if !refined {
            return membership;
        }
    }
}

/// Best single-node move in `state` among nodes not yet `moved`, as
/// `(gain, node, target)`. Targets are neighboring communities and, for
/// nodes that share their community, an empty one.
fn best_move(
    level: &LevelGraph,
    state: &[usize],
    tot: &[f64],
    size: &[usize],
    moved: &[bool],
) -> Option<(f64, usize, usize)> {
    let n = level.len();
    let m = level.total_weight;
    let vacant = size.iter().position(|&s| s == 0);
    let mut link = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut best: Option<(f64, usize, usize)> = None;
    for node in (0..n).filter(|&node| !moved[node]) {
        for &(nb, w) in level.neighbors(node) {
            let c = state[nb];
            if !seen[c] {
                seen[c] = true;
                touched.push(c);
            }
            link[c] += w;
        }
        let current = state[node];
        let k = level.degree[node];
        let stay = insertion_score(link[current], tot[current] - k, k, m);
        touched.sort_unstable();
        let mut candidates: Vec<(f64, usize)> = touched
            .iter()
            .filter(|&&c| c != current)
            .map(|&c| (insertion_score(link[c], tot[c], k, m), c))
            .collect();
        if let Some(fresh) = vacant.filter(|_| size[current] > 1) {
            candidates.push((0.0, fresh));
        }
        for (score, c) in candidates {
            let gain = (score - stay) / m;
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, node, c));
            }
        }
        for &c in &touched {
            link[c] = 0.0;
            seen[c] = false;
        }
        touched.clear();
    }
    best
}

/// Vertex-moving fine-tuning in Kernighan-Lin rounds: each round moves
/// every node once, always taking the best available move even when it
/// lowers Q, then keeps the best prefix of the round. Rounds repeat while
/// some prefix gains.
fn fine_tune(level: &LevelGraph, mut labels: Vec<usize>, tracer: &mut Tracer<'_>) -> (Vec<usize>, bool) {
    let n = level.len();
    let mut improved = false;
    loop {
        let mut state = labels.clone();
        let mut tot = vec![0.0; n];
        let mut size = vec![0usize; n];
        for node in 0..n {
            tot[state[node]] += level.degree[node];
            size[state[node]] += 1;
        }
        let mut moved = vec![false; n];
        let (mut total, mut best_total) = (0.0, MIN_GAIN);
        let mut best_state = None;
        while let Some((gain, node, target)) = best_move(level, &state, &tot, &size, &moved) {
            let current = state[node];
            tot[current] -= level.degree[node];
            size[current] -= 1;
            tot[target] += level.degree[node];
            size[target] += 1;
            state[node] = target;
            moved[node] = true;
            total += gain;
            if total > best_total {
                best_total = total;
                best_state = Some(state.clone());
            }
        }
        let Some(next) = best_state else {
            return (labels, improved);
        };
        if let Some(trace) = tracer.as_mut() {
            trace(&LouvainMove { level: 0, gain: best_total, before: labels.clone(), after: next.clone() });
        }
        labels = densify(&next).0;
        improved = true;
    }
}

/// Multilevel Louvain from singletons. On graphs within
/// [`FINE_TUNE_BUDGET`], vertex-moving fine-tuning follows each run, and a
/// run resumes from the tuned partition until tuning finds nothing.
fn louvain_impl(graph: &SimilarityGraph, mut tracer: Tracer<'_>) -> Partition {
    let n = graph.node_count();
    if graph.edge_count() == 0 {
        return Partition::singletons(n);
    }
    let base = LevelGraph::from_graph(graph);
    let mut labels = louvain_run(&base, (0..n).collect(), &mut tracer);
    if n.saturating_mul(base.adjacency.len()) <= FINE_TUNE_BUDGET {
        loop {
            let (tuned, improved) = fine_tune(&base, labels, &mut tracer);
            labels = tuned;
            if !improved {
                break;
            }
            labels = louvain_run(&base, labels, &mut tracer);
        }
    }
    Partition::from_labels(&labels)
}

fn check_partition(graph: &SimilarityGraph, partition: &Partition) -> Result<()> {
    if partition.node_count() != graph.node_count() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} nodes, graph has {}",
            partition.node_count(),
            graph.node_count()
        )));
    }
    Ok(())
}

pub fn modularity(graph: &SimilarityGraph, partition: &Partition) -> Result<f64> {
    check_partition(graph, partition)?;
    if graph.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    Ok(LevelGraph::from_graph(graph).modularity(partition.assignment()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityStats {
    pub id: usize,
    pub size: usize,
    /// `intra_weight / incident_weight`, or 0 when nothing touches the community.
    pub strength: f64,
    pub intra_weight: f64,
    /// Weight of edges with at least one endpoint inside, each edge once.
    pub incident_weight: f64,
}

pub fn community_stats(graph: &SimilarityGraph, partition: &Partition) -> Result<Vec<CommunityStats>> {
    check_partition(graph, partition)?;
    let count = partition.community_count();
    let mut intra = vec![0.0; count];
    let mut incident = vec![0.0; count];
    for e in graph.edges() {
        let (a, b) = (partition.community_of(e.u), partition.community_of(e.v));
        if a == b {
            intra[a] += e.weight;
            incident[a] += e.weight;
        } else {
            incident[a] += e.weight;
            incident[b] += e.weight;
        }
    }
    Ok((0..count)
        .map(|id| CommunityStats {
            id,
            size: partition.members(id).len(),
            strength: if incident[id] > 0.0 { intra[id] / incident[id] } else { 0.0 },
            intra_weight: intra[id],
            incident_weight: incident[id],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub min_size_fraction: f64,
    pub top_k: usize,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        SelectionCriteria { min_size_fraction: 0.05, top_k: 1 }
    }
}

impl SelectionCriteria {
    pub fn new(min_size_fraction: f64, top_k: usize) -> Result<Self> {
        let criteria = SelectionCriteria { min_size_fraction, top_k };
        criteria.validate()?;
        Ok(criteria)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_size_fraction) {
            return Err(Error::Config(format!(
                "min_size_fraction must be in [0, 1], got {}",
                self.min_size_fraction
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ids of the communities that pass the size floor, best first.
///
/// The floor is `size >= min_size_fraction * total nodes` (inclusive).
/// Ranking is strength descending, then size descending, then id ascending.
pub fn select_communities(stats: &[CommunityStats], criteria: &SelectionCriteria) -> Result<Vec<usize>> {
    criteria.validate()?;
    if stats.is_empty() {
        return Err(Error::InvalidPartition("no communities to select from".into()));
    }
    let total: usize = stats.iter().map(|s| s.size).sum();
    let floor = min_count(criteria.min_size_fraction, total);
    let mut passing: Vec<&CommunityStats> = stats.iter().filter(|s| s.size >= floor).collect();
    if passing.is_empty() {
        return Err(Error::NoCommunityPassesFloor { floor, fraction: criteria.min_size_fraction });
    }
    passing.sort_by(|a, b| {
        b.strength
            .total_cmp(&a.strength)
            .then(b.size.cmp(&a.size))
            .then(a.id.cmp(&b.id))
    });
    Ok(passing.into_iter().take(criteria.top_k).map(|s| s.id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use proptest::prelude::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SimilarityGraph {
        SimilarityGraph::from_edges(n, edges.iter().map(|&(u, v, weight)| Edge { u, v, weight })).unwrap()
    }

    /// Direct O(n²) evaluation of the modularity definition.
    fn modularity_oracle(g: &SimilarityGraph, labels: &[usize]) -> f64 {
        let n = g.node_count();
        let mut a = vec![vec![0.0; n]; n];
        for e in g.edges() {
            a[e.u][e.v] = e.weight;
            a[e.v][e.u] = e.weight;
        }
        let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
        let two_m: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] == labels[j] {
                    q += a[i][j] - k[i] * k[j] / two_m;
                }
            }
        }
        q / two_m
    }

    fn triangles() -> SimilarityGraph {
        graph(6, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)])
    }

    #[test]
    fn modularity_anchors() {
        let g = triangles();
        assert_eq!(modularity(&g, &Partition::from_labels(&[0; 6])).unwrap(), 0.0);
        let by_triangle = Partition::from_labels(&[0, 0, 0, 1, 1, 1]);
        assert!((modularity(&g, &by_triangle).unwrap() - 0.5).abs() < 1e-12);
        assert!((modularity_oracle(&g, &[0, 0, 0, 1, 1, 1]) - 0.5).abs() < 1e-12);
        // singletons: -Σ k_i² / (2m)² = -6·4/144
        let single = modularity(&g, &Partition::singletons(6)).unwrap();
        assert!((single + 24.0 / 144.0).abs() < 1e-12);
        assert!((single - modularity_oracle(&g, &[0, 1, 2, 3, 4, 5])).abs() < 1e-12);
    }

    #[test]
    fn modularity_errors() {
        let g = graph(3, &[]);
        assert!(matches!(modularity(&g, &Partition::singletons(3)), Err(Error::EdgelessGraph)));
        assert!(matches!(
            modularity(&triangles(), &Partition::singletons(3)),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn louvain_single_triangle() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]);
        assert_eq!(louvain(&g).assignment(), &[0, 0, 0]);
    }

    #[test]
    fn louvain_two_cliques_with_bridge() {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        edges.push((3, 4, 1.0));
        let p = louvain(&graph(8, &edges));
        assert_eq!(p.assignment(), &[0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn louvain_keeps_components_apart() {
        let g = graph(7, &[(0, 1, 0.9), (1, 2, 0.8), (3, 4, 0.7), (4, 5, 0.95)]);
        let p = louvain(&g);
        for e in [(0, 3), (0, 4), (2, 5), (1, 3)] {
            assert_ne!(p.community_of(e.0), p.community_of(e.1));
        }
        // isolated node 6 stays alone
        assert_eq!(p.members(p.community_of(6)), &[6]);
    }

    #[test]
    fn fine_tuning_splits_weighted_path() {
        // Path 3-0-2-1: greedy sweeps merge it whole (Q = 0), the best
        // split pairs each end with its neighbor.
        let g = graph(4, &[(0, 2, 0.714), (0, 3, 0.436), (1, 2, 0.434)]);
        let p = louvain(&g);
        assert_eq!(p.assignment(), &[0, 1, 1, 0]);
        assert!(modularity(&g, &p).unwrap() > 0.0);
    }

    #[test]
    fn louvain_edgeless_is_singletons() {
        assert_eq!(louvain(&graph(4, &[])), Partition::singletons(4));
    }

    #[test]
    fn aggregation_preserves_modularity() {
        let g = graph(
            8,
            &[
                (0, 1, 0.9),
                (0, 2, 0.7),
                (1, 2, 0.8),
                (2, 3, 0.2),
                (3, 4, 0.9),
                (4, 5, 0.6),
                (3, 5, 0.7),
                (5, 6, 0.3),
                (6, 7, 0.9),
            ],
        );
        let p = louvain(&g);
        let fine = modularity(&g, &p).unwrap();
        let level = LevelGraph::from_graph(&g).aggregate(p.assignment(), p.community_count());
        let identity: Vec<usize> = (0..p.community_count()).collect();
        assert!((level.modularity(&identity) - fine).abs() < 1e-12);
    }

    #[test]
    fn strength_anchors() {
        // component {0,1,2} sealed; {3} only touches {4,5}
        let g = graph(6, &[(0, 1, 0.5), (1, 2, 0.5), (3, 4, 0.5), (3, 5, 0.25), (4, 5, 1.0)]);
        let p = Partition::from_labels(&[0, 0, 0, 1, 2, 2]);
        let stats = community_stats(&g, &p).unwrap();
        assert_eq!(stats[0].strength, 1.0);
        assert_eq!(stats[1].strength, 0.0);
        assert_eq!(stats[1].incident_weight, 0.75);
        assert_eq!(stats[2].intra_weight, 1.0);
    }

    #[test]
    fn strength_three_to_one() {
        // intra: 1.0 + 1.0 + 1.0 ; boundary: 0.5 + 0.5
        let g = graph(5, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (2, 3, 0.5), (0, 4, 0.5)]);
        let p = Partition::from_labels(&[0, 0, 0, 1, 2]);
        let s = &community_stats(&g, &p).unwrap()[0];
        assert_eq!((s.intra_weight, s.incident_weight), (3.0, 4.0));
        assert_eq!(s.strength, 0.75);
        assert_eq!(s.size, 3);
    }

    #[test]
    fn isolated_community_strength_is_zero() {
        let g = graph(3, &[(0, 1, 1.0)]);
        let stats = community_stats(&g, &Partition::from_labels(&[0, 0, 1])).unwrap();
        assert_eq!(stats[1].strength, 0.0);
        assert_eq!(stats[1].incident_weight, 0.0);
    }

    fn stat(id: usize, size: usize, strength: f64) -> CommunityStats {
        CommunityStats { id, size, strength, intra_weight: 0.0, incident_weight: 0.0 }
    }

    #[test]
    fn selection_floor_is_inclusive() {
        let stats = vec![stat(0, 50, 0.9), stat(1, 500, 0.6), stat(2, 450, 0.1)];
        let criteria = SelectionCriteria::new(0.05, 1).unwrap();
        assert_eq!(select_communities(&stats, &criteria).unwrap(), vec![0]);
    }

    #[test]
    fn selection_ties_and_truncation() {
        let stats = vec![stat(0, 10, 0.5), stat(1, 30, 0.5), stat(2, 30, 0.5), stat(3, 2, 0.99)];
        let criteria = SelectionCriteria::new(0.1, 10).unwrap();
        assert_eq!(select_communities(&stats, &criteria).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn selection_nothing_passes() {
        let stats = vec![stat(0, 1, 0.9), stat(1, 1, 0.6)];
        let criteria = SelectionCriteria::new(0.9, 1).unwrap();
        let err = select_communities(&stats, &criteria).unwrap_err();
        assert!(err.to_string().contains("lower min_size_fraction"));
        assert!(SelectionCriteria::new(1.5, 1).is_err());
        assert!(SelectionCriteria::new(0.5, 0).is_err());
    }

    #[test]
    fn partition_file_round_trip() {
        let p = Partition::from_labels(&[7, 7, 3, 9, 3]);
        assert_eq!(p.assignment(), &[0, 0, 1, 2, 1]);
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0 0\n1 0\n2 1\n3 2\n4 1\n");
        assert_eq!(Partition::read_from(&buf[..], 5).unwrap(), p);
        assert!(Partition::read_from(&buf[..], 6).is_err());
    }

    fn arb_graph() -> impl Strategy<Value = SimilarityGraph> {
        (2usize..10).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let len = pairs.len();
            prop::collection::vec(prop::option::weighted(0.45, 0.05f64..1.0), len).prop_map(
                move |weights| {
                    let edges = pairs
                        .iter()
                        .zip(weights)
                        .filter_map(|(&(u, v), w)| w.map(|weight| Edge { u, v, weight }));
                    SimilarityGraph::from_edges(n, edges).unwrap()
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn incremental_gain_matches_recomputation(g in arb_graph()) {
            prop_assume!(g.edge_count() > 0);
            let mut moves = Vec::new();
            let p = louvain_traced(&g, &mut |mv| moves.push(mv.clone()));
            let mut last = modularity_oracle(&g, &(0..g.node_count()).collect::<Vec<_>>());
            for mv in &moves {
                let before = modularity_oracle(&g, &mv.before);
                let after = modularity_oracle(&g, &mv.after);
                prop_assert!((mv.gain - (after - before)).abs() < 1e-9);
                prop_assert!(mv.gain > 0.0);
                prop_assert!(before >= last - 1e-12);
                last = after;
            }
            let final_q = modularity(&g, &p).unwrap();
            prop_assert!((final_q - last).abs() < 1e-9);
        }

        #[test]
        fn louvain_is_locally_optimal(g in arb_graph()) {
            prop_assume!(g.edge_count() > 0);
            let p = louvain(&g);
            let q = modularity_oracle(&g, p.assignment());
            for node in 0..g.node_count() {
                for (nb, _) in g.neighbors(node) {
                    let mut labels = p.assignment().to_vec();
                    labels[node] = p.community_of(nb);
                    prop_assert!(modularity_oracle(&g, &labels) - q <= 1e-10);
                }
            }
        }

        #[test]
        fn louvain_is_deterministic(g in arb_graph()) {
            prop_assert_eq!(louvain(&g), louvain(&g));
        }

        #[test]
        fn strength_is_scale_invariant(g in arb_graph(), labels in prop::collection::vec(0usize..3, 10)) {
            let p = Partition::from_labels(&labels[..g.node_count()]);
            let base = community_stats(&g, &p).unwrap();
            for factor in [0.5, 2.0, 8.0] {
                let scaled = community_stats(&g.scaled(factor).unwrap(), &p).unwrap();
                for (a, b) in base.iter().zip(&scaled) {
                    prop_assert_eq!(a.strength, b.strength);
                }
            }
            let odd = community_stats(&g.scaled(3.7).unwrap(), &p).unwrap();
            for (a, b) in base.iter().zip(&odd) {
                prop_assert!((a.strength - b.strength).abs() <= 1e-12);
            }
        }

        #[test]
        fn stats_invariants(g in arb_graph(), labels in prop::collection::vec(0usize..4, 10)) {
            let p = Partition::from_labels(&labels[..g.node_count()]);
            let q = modularity(&g, &p);
            if let Ok(q) = q {
                prop_assert!((-0.5 - 1e-12..=1.0 + 1e-12).contains(&q));
                prop_assert!((q - modularity_oracle(&g, p.assignment())).abs() < 1e-12);
            }
            for s in community_stats(&g, &p).unwrap() {
                prop_assert!((0.0..=1.0).contains(&s.strength));
                prop_assert!(s.intra_weight <= s.incident_weight);
            }
        }
    }
}
