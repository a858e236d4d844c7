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

//! Business-insight and root-cause mining for categorical tables.
//!
//! Rows are turned into transactions, linked into an epsilon-ball cosine
//! similarity graph, and split into communities with Louvain. The strongest
//! communities are mined with apriori, and the resulting association rules
//! are folded into one summary per consequent.

pub mod community;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod mining;
pub mod pipeline;
pub mod summarize;
mod threshold;

pub use community::{
    community_stats, louvain, louvain_traced, modularity, select_communities, CommunityStats, LouvainMove,
    Partition, SelectionCriteria,
};
pub use dataset::{
    bin_numeric, encode, interval_label, load_csv, read_csv, ColumnKind, ColumnSchema, CsvOptions, Dataset,
    Item, ItemId, Transaction, Vocabulary,
};
pub use error::{Error, ErrorKind, Result};
pub use graph::{build_graph, cosine_similarity, Edge, GraphConfig, SimilarityGraph};
pub use mining::{
    apriori, generate_rules, mine_community, AssociationRule, FrequentItemset, FrequentItemsets, MiningConfig,
};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, RunReport, Stage};
pub use summarize::{filter_single_consequent, rank_summaries, summarize, MetricRange, RankKey, RuleSummary};
