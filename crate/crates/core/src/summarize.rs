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

//! Consequent-based rule summaries.
//!
//! Single-consequent rules are grouped by consequent. Each group keeps its
//! antecedent items ranked by how many of the group's rules mention them,
//! plus the min/max of support, confidence and lift.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ItemId;
use crate::error::{Error, Result};
use crate::mining::AssociationRule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRange {
    pub min: f64,
    pub max: f64,
}

impl MetricRange {
    fn point(value: f64) -> Self {
        MetricRange { min: value, max: value }
    }

    fn include(&mut self, value: f64) {
        self.min = self.min.min(value);
        self.max = self.max.max(value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub consequent: ItemId,
    /// `(item, number of folded rules whose antecedent holds it)`, count
    /// descending then item id ascending.
    pub antecedents: Vec<(ItemId, usize)>,
    pub support: MetricRange,
    pub confidence: MetricRange,
    pub lift: MetricRange,
    pub rule_count: usize,
}

pub fn filter_single_consequent(mut rules: Vec<AssociationRule>) -> Vec<AssociationRule> {
    rules.retain(|r| r.consequent.len() == 1);
    rules
}

/// One summary per distinct consequent, ordered by consequent id.
pub fn summarize(rules: &[AssociationRule]) -> Result<Vec<RuleSummary>> {
    struct Group {
        counts: BTreeMap<ItemId, usize>,
        support: MetricRange,
        confidence: MetricRange,
        lift: MetricRange,
        rule_count: usize,
    }

    let mut groups: BTreeMap<ItemId, Group> = BTreeMap::new();
    for rule in rules {
        let &[consequent] = rule.consequent.as_slice() else {
            return Err(Error::Internal(format!(
                "summarize needs single-item consequents, got {:?}",
                rule.consequent
            )));
        };
        let group = groups.entry(consequent).or_insert_with(|| Group {
            counts: BTreeMap::new(),
            support: MetricRange::point(rule.support),
            confidence: MetricRange::point(rule.confidence),
            lift: MetricRange::point(rule.lift),
            rule_count: 0,
        });
        for &item in &rule.antecedent {
            *group.counts.entry(item).or_default() += 1;
        }
        group.support.include(rule.support);
        group.confidence.include(rule.confidence);
        group.lift.include(rule.lift);
        group.rule_count += 1;
    }

    Ok(groups
        .into_iter()
        .map(|(consequent, g)| {
            let mut antecedents: Vec<(ItemId, usize)> = g.counts.into_iter().collect();
            // BTreeMap order is ascending id; a stable sort keeps it for ties
            antecedents.sort_by_key(|a| std::cmp::Reverse(a.1));
            RuleSummary {
                consequent,
                antecedents,
                support: g.support,
                confidence: g.confidence,
                lift: g.lift,
                rule_count: g.rule_count,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKey {
    #[default]
    RuleCount,
    MaxLift,
    MaxConfidence,
}

impl FromStr for RankKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule_count" => Ok(RankKey::RuleCount),
            "max_lift" => Ok(RankKey::MaxLift),
            "max_confidence" => Ok(RankKey::MaxConfidence),
            other => Err(Error::Config(format!(
                "unknown rank key `{other}` (expected rule_count, max_lift or max_confidence)"
            ))),
        }
    }
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKey::RuleCount => "rule_count",
            RankKey::MaxLift => "max_lift",
            RankKey::MaxConfidence => "max_confidence",
        })
    }
}

/// Descending by `key`; ties by consequent id.
pub fn rank_summaries(mut summaries: Vec<RuleSummary>, key: RankKey) -> Vec<RuleSummary> {
    summaries.sort_by(|a, b| {
        let by_key = match key {
            RankKey::RuleCount => b.rule_count.cmp(&a.rule_count),
            RankKey::MaxLift => b.lift.max.total_cmp(&a.lift.max),
            RankKey::MaxConfidence => b.confidence.max.total_cmp(&a.confidence.max),
        };
        by_key.then(a.consequent.cmp(&b.consequent))
    });
    summaries
}
