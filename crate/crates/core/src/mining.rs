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

//! Level-wise apriori and association rule generation.
//!
//! Thresholds are applied to exact integer counts: an itemset is frequent
//! when `count >= ceil(min_support * N)` and a rule `X -> Y` is kept when
//! `count(X ∪ Y) >= ceil(min_confidence * count(X))`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ItemId, Transaction};
use crate::error::{Error, Result};
use crate::threshold::min_count;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_itemset_size: Option<usize>,
}

impl MiningConfig {
    pub fn new(min_support: f64, min_confidence: f64, max_itemset_size: Option<usize>) -> Result<Self> {
        let config = MiningConfig { min_support, min_confidence, max_itemset_size };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("min_support", self.min_support), ("min_confidence", self.min_confidence)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {value}")));
            }
        }
        if self.max_itemset_size == Some(0) {
            return Err(Error::Config("max_itemset_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemset {
    /// Ascending item ids.
    pub items: Vec<ItemId>,
    pub support_count: usize,
    pub support: f64,
}

/// Apriori output: itemsets ordered by size, then lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemsets {
    pub transaction_count: usize,
    pub itemsets: Vec<FrequentItemset>,
}

impl FrequentItemsets {
    pub fn len(&self) -> usize {
        self.itemsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.itemsets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<ItemId>,
    pub consequent: Vec<ItemId>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(len: usize) -> Self {
        Bitset(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, idx: usize) {
        self.0[idx / 64] |= 1 << (idx % 64);
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and(&self, other: &Bitset) -> (Bitset, usize) {
        let words: Vec<u64> = self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect();
        let count = words.iter().map(|w| w.count_ones() as usize).sum();
        (Bitset(words), count)
    }
}

struct LevelEntry {
    items: Vec<ItemId>,
    tids: Bitset,
    count: usize,
}

pub fn apriori(transactions: &[Transaction], config: &MiningConfig) -> FrequentItemsets {
    let refs: Vec<&Transaction> = transactions.iter().collect();
    apriori_refs(&refs, config)
}

fn apriori_refs(transactions: &[&Transaction], config: &MiningConfig) -> FrequentItemsets {
    let n = transactions.len();
    let mut itemsets = Vec::new();
    if n == 0 {
        return FrequentItemsets { transaction_count: 0, itemsets };
    }
    let floor = min_count(config.min_support, n).max(1);
    let max_size = config.max_itemset_size.unwrap_or(usize::MAX);
    let support = |count: usize| count as f64 / n as f64;

    let item_count = transactions
        .iter()
        .filter_map(|t| t.items.last())
        .map(|id| id.index() + 1)
        .max()
        .unwrap_or(0);
    let mut singles: Vec<Bitset> = (0..item_count).map(|_| Bitset::new(n)).collect();
    for (tid, t) in transactions.iter().enumerate() {
        for id in &t.items {
            singles[id.index()].set(tid);
        }
    }
    let mut level: Vec<LevelEntry> = singles
        .into_iter()
        .enumerate()
        .filter_map(|(id, tids)| {
            let count = tids.count();
            (count >= floor).then(|| LevelEntry { items: vec![ItemId(id as u32)], tids, count })
        })
        .collect();

    let mut size = 1;
    while !level.is_empty() {
        itemsets.extend(level.iter().map(|e| FrequentItemset {
            items: e.items.clone(),
            support_count: e.count,
            support: support(e.count),
        }));
        if size >= max_size {
            break;
        }
        level = next_level(&level, floor);
        size += 1;
    }
    FrequentItemsets { transaction_count: n, itemsets }
}

/// Joins sorted k-itemsets sharing a (k-1)-prefix, drops candidates with an
/// infrequent k-subset, and counts the rest by intersecting parent tid sets.
fn next_level(level: &[LevelEntry], floor: usize) -> Vec<LevelEntry> {
    let k = level[0].items.len();
    let is_frequent = |candidate: &[ItemId]| {
        level.binary_search_by(|e| e.items.as_slice().cmp(candidate)).is_ok()
    };
    (0..level.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let left = &level[i];
            let prefix = &left.items[..k - 1];
            let mut out = Vec::new();
            let mut subset = Vec::with_capacity(k);
            for right in level[i + 1..].iter().take_while(|e| &e.items[..k - 1] == prefix) {
                let mut candidate = left.items.clone();
                candidate.push(right.items[k - 1]);
                // the two parents drop one of the last two items; check the others
                let pruned = (0..k - 1).any(|skip| {
                    subset.clear();
                    subset.extend(candidate.iter().enumerate().filter(|&(p, _)| p != skip).map(|(_, id)| *id));
                    !is_frequent(&subset)
                });
                if pruned {
                    continue;
                }
                let (tids, count) = left.tids.and(&right.tids);
                if count >= floor {
                    out.push(LevelEntry { items: candidate, tids, count });
                }
            }
            out
        })
        .collect()
}

/// Every rule `X -> Y` with `X ∪ Y` frequent, both sides non-empty and
/// disjoint, meeting the confidence floor. Metrics come from the stored
/// counts only.
///
/// Rules are emitted in itemset order; within an itemset, consequents are
/// enumerated by ascending bitmask over the itemset's positions.
pub fn generate_rules(frequent: &FrequentItemsets, config: &MiningConfig) -> Result<Vec<AssociationRule>> {
    let n = frequent.transaction_count as f64;
    let counts: HashMap<&[ItemId], usize> =
        frequent.itemsets.iter().map(|f| (f.items.as_slice(), f.support_count)).collect();
    let lookup = |items: &[ItemId]| {
        counts.get(items).copied().ok_or_else(|| Error::MissingSupport(items.to_vec()))
    };

    let per_itemset: Vec<Vec<AssociationRule>> = frequent
        .itemsets
        .par_iter()
        .filter(|z| z.items.len() >= 2)
        .map(|z| {
            let k = z.items.len();
            if k >= 64 {
                return Err(Error::Internal(format!("itemset of size {k} is too large for rule generation")));
            }
            let mut rules = Vec::new();
            for mask in 1u64..(1 << k) - 1 {
                let (mut antecedent, mut consequent) = (Vec::new(), Vec::new());
                for (pos, &id) in z.items.iter().enumerate() {
                    if mask & (1 << pos) != 0 {
                        consequent.push(id);
                    } else {
                        antecedent.push(id);
                    }
                }
                let x_count = lookup(&antecedent)?;
                if z.support_count < min_count(config.min_confidence, x_count) {
                    continue;
                }
                let y_count = lookup(&consequent)?;
                let confidence = z.support_count as f64 / x_count as f64;
                let lift = confidence / (y_count as f64 / n);
                rules.push(AssociationRule { antecedent, consequent, support: z.support, confidence, lift });
            }
            Ok(rules)
        })
        .collect::<Result<_>>()?;
    Ok(per_itemset.into_iter().flatten().collect())
}

/// Mines the transactions of `members` only; supports are fractions of the
/// member count.
pub fn mine_community(
    transactions: &[Transaction],
    members: &[usize],
    config: &MiningConfig,
) -> Result<Vec<AssociationRule>> {
    Ok(mine_community_detailed(transactions, members, config)?.1)
}

/// [`mine_community`] that also returns the frequent itemsets.
pub fn mine_community_detailed(
    transactions: &[Transaction],
    members: &[usize],
    config: &MiningConfig,
) -> Result<(FrequentItemsets, Vec<AssociationRule>)> {
    config.validate()?;
    if members.is_empty() {
        return Err(Error::EmptyCommunity);
    }
    let subset = members
        .iter()
        .map(|&row| transactions.get(row).ok_or(Error::RowOutOfRange(row)))
        .collect::<Result<Vec<_>>>()?;
    let frequent = apriori_refs(&subset, config);
    let rules = generate_rules(&frequent, config)?;
    Ok((frequent, rules))
}
