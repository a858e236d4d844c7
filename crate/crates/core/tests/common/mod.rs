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

//! Synthetic data generators and brute-force oracles shared by the
//! integration and acceptance tests. Nothing here calls into the mining or
//! community code paths it is used to check.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;

use catrules::{Edge, ItemId, SimilarityGraph, Transaction};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Planted two-block dataset

pub const PLANTED_COLUMNS: usize = 10;

/// Which generator branch produced each row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    BlockA,
    BlockB,
    Noise,
}

pub struct Planted {
    pub csv: String,
    pub origins: Vec<Origin>,
}

/// 1,000 rows over 10 columns: two blocks of 475 rows plus 50 noise rows,
/// shuffled. In block `A`, columns c0..c2 always read `A0`, `A1`, `A2`
/// (the planted implication); c3..c9 read their dominant `A<j>` with
/// probability 0.8 and otherwise one of four shared noise values. Block
/// `B` mirrors this with `B<j>`. Noise rows draw every cell uniformly
/// from all six values of the column.
pub fn planted(seed: u64) -> Planted {
    let mut rng = rng(seed);
    let noise_values = ["x1", "x2", "x3", "x4"];
    let mut rows: Vec<(Origin, Vec<String>)> = Vec::new();
    for (origin, tag) in [(Origin::BlockA, "A"), (Origin::BlockB, "B")] {
        for _ in 0..475 {
            let row = (0..PLANTED_COLUMNS)
                .map(|j| {
                    if j < 3 || rng.gen_bool(0.8) {
                        format!("{tag}{j}")
                    } else {
                        noise_values.choose(&mut rng).unwrap().to_string()
                    }
                })
                .collect();
            rows.push((origin, row));
        }
    }
    for _ in 0..50 {
        let row = (0..PLANTED_COLUMNS)
            .map(|j| {
                let pool = [format!("A{j}"), format!("B{j}"), "x1".into(), "x2".into(), "x3".into(), "x4".into()];
                pool.choose(&mut rng).unwrap().clone()
            })
            .collect();
        rows.push((Origin::Noise, row));
    }
    rows.shuffle(&mut rng);

    let mut csv = (0..PLANTED_COLUMNS).map(|j| format!("c{j}")).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for (_, row) in &rows {
        csv += &row.join(",");
        csv.push('\n');
    }
    Planted { csv, origins: rows.iter().map(|(o, _)| *o).collect() }
}

/// Scale-shaped table: `rows` x 14 categorical columns, four latent blocks
/// (dominant value per column with probability 0.75, else one of six
/// shared values) plus 5% uniform noise rows.
pub fn scale_csv(rows: usize, seed: u64) -> String {
    const COLUMNS: usize = 14;
    const BLOCKS: usize = 4;
    let mut rng = rng(seed);
    let mut csv = (0..COLUMNS).map(|j| format!("col{j}")).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for _ in 0..rows {
        let noise_row = rng.gen_bool(0.05);
        let block = rng.gen_range(0..BLOCKS);
        let cells: Vec<String> = (0..COLUMNS)
            .map(|j| {
                if noise_row {
                    let v = rng.gen_range(0..BLOCKS + 6);
                    if v < BLOCKS { format!("b{v}v{j}") } else { format!("s{}", v - BLOCKS) }
                } else if rng.gen_bool(0.75) {
                    format!("b{block}v{j}")
                } else {
                    format!("s{}", rng.gen_range(0..6))
                }
            })
            .collect();
        writeln!(csv, "{}", cells.join(",")).unwrap();
    }
    csv
}

// ---------------------------------------------------------------------------
// Random transaction sets and the brute-force mining oracle

pub fn random_transactions(rng: &mut impl Rng, max_items: u32, max_rows: usize) -> Vec<Transaction> {
    let items = rng.gen_range(1..=max_items);
    let rows = rng.gen_range(1..=max_rows);
    let density = rng.gen_range(0.2..0.8);
    (0..rows)
        .map(|r| {
            let ids = (0..items).filter(|_| rng.gen_bool(density)).map(ItemId).collect();
            Transaction::new(r, ids)
        })
        .collect()
}

fn contains_all(t: &Transaction, set: &[ItemId]) -> bool {
    set.iter().all(|i| t.items.contains(i))
}

/// Counts by direct scan for every subset of the item universe.
/// `support_tenths` is the threshold in tenths so the comparison is exact.
pub fn brute_force_frequent(
    transactions: &[Transaction],
    support_tenths: usize,
) -> Vec<(Vec<ItemId>, usize)> {
    let universe: BTreeSet<ItemId> = transactions.iter().flat_map(|t| t.items.iter().copied()).collect();
    let universe: Vec<ItemId> = universe.into_iter().collect();
    let n = transactions.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << universe.len()) {
        let set: Vec<ItemId> =
            universe.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| *id).collect();
        let count = transactions.iter().filter(|t| contains_all(t, &set)).count();
        if count > 0 && 10 * count >= support_tenths * n {
            out.push((set, count));
        }
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
    out
}

/// `(antecedent, consequent, support, confidence, lift)` for every
/// bipartition of every frequent itemset, by direct recount.
pub type OracleRule = (Vec<ItemId>, Vec<ItemId>, f64, f64, f64);

pub fn brute_force_rules(
    transactions: &[Transaction],
    support_tenths: usize,
    confidence_tenths: usize,
) -> Vec<OracleRule> {
    let n = transactions.len();
    let count = |set: &[ItemId]| transactions.iter().filter(|t| contains_all(t, set)).count();
    let mut out = Vec::new();
    for (z, z_count) in brute_force_frequent(transactions, support_tenths) {
        if z.len() < 2 {
            continue;
        }
        for mask in 1u32..(1 << z.len()) - 1 {
            let consequent: Vec<ItemId> =
                z.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| *id).collect();
            let antecedent: Vec<ItemId> =
                z.iter().enumerate().filter(|(i, _)| mask & (1 << i) == 0).map(|(_, id)| *id).collect();
            let x_count = count(&antecedent);
            if 10 * z_count < confidence_tenths * x_count {
                continue;
            }
            let confidence = z_count as f64 / x_count as f64;
            let lift = confidence / (count(&consequent) as f64 / n as f64);
            out.push((antecedent, consequent, z_count as f64 / n as f64, confidence, lift));
        }
    }
    out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    out
}

// ---------------------------------------------------------------------------
// Modularity oracle and exhaustive partition search

pub fn random_graph(rng: &mut impl Rng, max_nodes: usize) -> SimilarityGraph {
    loop {
        let n = rng.gen_range(3..=max_nodes);
        let p = rng.gen_range(0.25..0.75);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push(Edge { u, v, weight: rng.gen_range(0.05..=1.0) });
                }
            }
        }
        if !edges.is_empty() {
            return SimilarityGraph::from_edges(n, edges).unwrap();
        }
    }
}

/// Direct O(n²) evaluation of weighted modularity over a dense matrix.
pub fn modularity_oracle(g: &SimilarityGraph, labels: &[usize]) -> f64 {
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

/// Maximum modularity over every set partition (restricted growth strings).
pub fn exhaustive_max_modularity(g: &SimilarityGraph) -> (f64, Vec<usize>) {
    let n = g.node_count();
    let mut labels = vec![0usize; n];
    let mut best = (f64::NEG_INFINITY, labels.clone());
    fn recurse(g: &SimilarityGraph, labels: &mut [usize], pos: usize, max_label: usize, best: &mut (f64, Vec<usize>)) {
        if pos == labels.len() {
            let q = modularity_oracle(g, labels);
            if q > best.0 {
                *best = (q, labels.to_vec());
            }
            return;
        }
        for label in 0..=max_label + 1 {
            labels[pos] = label;
            recurse(g, labels, pos + 1, max_label.max(label), best);
        }
    }
    if n == 0 {
        return (0.0, labels);
    }
    labels[0] = 0;
    recurse(g, &mut labels, 1, 0, &mut best);
    best
}

/// True when no single node can move to a neighbor's community and raise Q.
pub fn is_locally_optimal(g: &SimilarityGraph, labels: &[usize], tolerance: f64) -> bool {
    let q = modularity_oracle(g, labels);
    (0..g.node_count()).all(|node| {
        g.neighbors(node).all(|(nb, _)| {
            let mut moved = labels.to_vec();
            moved[node] = labels[nb];
            modularity_oracle(g, &moved) - q <= tolerance
        })
    })
}

/// Peak resident set size of this process in bytes (Linux), if available.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
