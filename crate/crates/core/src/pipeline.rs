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

//! End-to-end orchestration: CSV in, rule summaries and a report out.
//!
//! Every stage writes plain-text artifacts into the output directory and
//! the next stage can be started from those files alone:
//!
//! | stage       | reads                                   | writes |
//! |-------------|-----------------------------------------|--------|
//! | `encode`    | input CSV                               | `schema.json`, `vocabulary.csv`, `transactions.txt` |
//! | `graph`     | encode artifacts                        | `graph.edgelist` |
//! | `cluster`   | + `graph.edgelist`                      | `partition.txt`, `communities.csv` |
//! | `mine`      | + `partition.txt`, `communities.csv`    | `rules.jsonl` |
//! | `summarize` | + `rules.jsonl`                         | `summaries.csv`, `summaries.json`, `report.json`, `report.txt` |
//!
//! Each stage also rewrites `config.toml`. [`run_pipeline`] additionally
//! writes `timings.json`, the only artifact that varies between runs.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::community::{
    community_stats, louvain, modularity, select_communities, CommunityStats, Partition,
    SelectionCriteria,
};
use crate::dataset::{
    bin_numeric, encode, load_csv, ColumnKind, ColumnSchema, CsvOptions, Item, ItemId, Transaction,
    Vocabulary, DEFAULT_MISSING,
};
use crate::error::{Error, Result};
use crate::graph::{build_graph, GraphConfig, SimilarityGraph};
use crate::mining::{mine_community, AssociationRule, MiningConfig};
use crate::summarize::{filter_single_consequent, rank_summaries, summarize, RankKey, RuleSummary};

pub const CONFIG_FILE: &str = "config.toml";
pub const SCHEMA_FILE: &str = "schema.json";
pub const VOCABULARY_FILE: &str = "vocabulary.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.txt";
pub const GRAPH_FILE: &str = "graph.edgelist";
pub const PARTITION_FILE: &str = "partition.txt";
pub const COMMUNITIES_FILE: &str = "communities.csv";
pub const RULES_FILE: &str = "rules.jsonl";
pub const SUMMARIES_CSV_FILE: &str = "summaries.csv";
pub const SUMMARIES_JSON_FILE: &str = "summaries.json";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const TIMINGS_FILE: &str = "timings.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    pub column: String,
    pub boundaries: Vec<f64>,
}

fn default_delimiter() -> char {
    ','
}
fn default_missing() -> String {
    DEFAULT_MISSING.to_string()
}
fn default_min_size_fraction() -> f64 {
    SelectionCriteria::default().min_size_fraction
}
fn default_top_k() -> usize {
    SelectionCriteria::default().top_k
}
fn default_min_support() -> f64 {
    0.2
}
fn default_min_confidence() -> f64 {
    0.5
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("catrules-out")
}

/// Everything one run needs. Read from TOML; CLI flags override fields.
///
/// `output_dir` and `workers` never change artifact contents and are left
/// out of the `config.toml` copy written next to the artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_missing")]
    pub missing: String,
    pub epsilon: f64,
    #[serde(default = "default_min_size_fraction")]
    pub min_size_fraction: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_min_support")]
    pub min_support: f64,
    #[serde(default = "default_min_confidence")]
    pub min_confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_itemset_size: Option<usize>,
    #[serde(default)]
    pub rank_by: RankKey,
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<BinSpec>,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, epsilon: f64) -> Self {
        PipelineConfig {
            input: input.into(),
            output_dir: output_dir.into(),
            delimiter: default_delimiter(),
            missing: default_missing(),
            epsilon,
            min_size_fraction: default_min_size_fraction(),
            top_k: default_top_k(),
            min_support: default_min_support(),
            min_confidence: default_min_confidence(),
            max_itemset_size: None,
            rank_by: RankKey::default(),
            workers: None,
            bins: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn graph_config(&self) -> Result<GraphConfig> {
        GraphConfig::new(self.epsilon)
    }

    pub fn selection(&self) -> Result<SelectionCriteria> {
        SelectionCriteria::new(self.min_size_fraction, self.top_k)
    }

    pub fn mining(&self) -> Result<MiningConfig> {
        MiningConfig::new(self.min_support, self.min_confidence, self.max_itemset_size)
    }

    pub fn csv_options(&self) -> Result<CsvOptions> {
        if !self.delimiter.is_ascii() {
            return Err(Error::Config(format!("delimiter `{}` is not ASCII", self.delimiter)));
        }
        Ok(CsvOptions { delimiter: self.delimiter as u8, missing: self.missing.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        self.graph_config()?;
        self.selection()?;
        self.mining()?;
        self.csv_options()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for spec in &self.bins {
            if !seen.insert(spec.column.as_str()) {
                return Err(Error::Config(format!("column `{}` is binned twice", spec.column)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Encode,
    Graph,
    Cluster,
    Mine,
    Summarize,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Encode => "encode",
            Stage::Graph => "graph",
            Stage::Cluster => "cluster",
            Stage::Mine => "mine",
            Stage::Summarize => "summarize",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

pub type StageResult<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaArtifact {
    pub rows: usize,
    pub missing: String,
    pub columns: Vec<ColumnSchema>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub schema: SchemaArtifact,
    pub vocabulary: Vocabulary,
    pub transactions: Vec<Transaction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub partition: Partition,
    pub stats: Vec<CommunityStats>,
    /// Selected community ids, best first.
    pub selected: Vec<usize>,
    pub modularity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRules {
    pub community: usize,
    pub transactions: usize,
    pub rules: Vec<AssociationRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetShape {
    pub rows: usize,
    pub columns: usize,
    pub items: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub total_weight: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityReport {
    #[serde(flatten)]
    pub stats: CommunityStats,
    pub selected: bool,
    pub selection_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub community: usize,
    pub transactions: usize,
    pub rules: usize,
    pub single_consequent_rules: usize,
    pub summaries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: DatasetShape,
    pub graph: GraphReport,
    pub modularity: Option<f64>,
    pub communities: Vec<CommunityReport>,
    pub mining: Vec<MiningReport>,
    /// Wall-clock per stage; written to `timings.json`, never to `report.json`.
    #[serde(skip)]
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub community_id: usize,
    pub consequent: String,
    pub consequent_id: ItemId,
    pub antecedents: Vec<AntecedentRecord>,
    pub support: crate::summarize::MetricRange,
    pub confidence: crate::summarize::MetricRange,
    pub lift: crate::summarize::MetricRange,
    pub rule_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntecedentRecord {
    pub item: String,
    pub item_id: ItemId,
    pub count: usize,
}

/// One line of `rules.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub community: usize,
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
    pub antecedent_ids: Vec<ItemId>,
    pub consequent_ids: Vec<ItemId>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut out: BufWriter<File>) -> Result<()> {
    out.flush().map_err(|e| Error::io(path, e))
}

fn open_artifact(dir: &Path, name: &str, producer: &str) -> Result<BufReader<File>> {
    let path = dir.join(name);
    File::open(&path).map(BufReader::new).map_err(|e| {
        Error::artifact(&path, format!("cannot open upstream artifact ({e}); run `catrules {producer}` first"))
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn prepare_output(config: &PipelineConfig) -> Result<()> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join(CONFIG_FILE), &config.to_toml_string()?)
}

/// Loads the input CSV and applies every configured binning.
pub fn ingest(config: &PipelineConfig) -> Result<crate::dataset::Dataset> {
    let mut dataset = load_csv(&config.input, None, &config.csv_options()?)?;
    for spec in &config.bins {
        dataset = bin_numeric(dataset, &spec.column, &spec.boundaries)?;
    }
    Ok(dataset)
}

pub fn encode_stage(config: &PipelineConfig) -> StageResult<Encoded> {
    config.validate().at(Stage::Config)?;
    prepare_output(config).at(Stage::Config)?;
    let dataset = ingest(config).at(Stage::Ingest)?;
    let (vocabulary, transactions) = encode(&dataset);
    let encoded = Encoded {
        schema: SchemaArtifact {
            rows: dataset.row_count(),
            missing: dataset.missing_sentinel().to_string(),
            columns: dataset.schema().to_vec(),
        },
        vocabulary,
        transactions,
    };
    write_encoded(&config.output_dir, &encoded).at(Stage::Encode)?;
    Ok(encoded)
}

fn write_encoded(dir: &Path, encoded: &Encoded) -> Result<()> {
    let path = dir.join(SCHEMA_FILE);
    let json = serde_json::to_string_pretty(&encoded.schema).map_err(|e| Error::Internal(e.to_string()))?;
    write_text(&path, &(json + "\n"))?;

    let path = dir.join(VOCABULARY_FILE);
    let mut writer = csv::Writer::from_writer(create(&path)?);
    writer.write_record(["item_id", "column_index", "column", "value"])?;
    let vocab = &encoded.vocabulary;
    for (id, item) in vocab.items().iter().enumerate() {
        writer.write_record([
            id.to_string(),
            item.column.to_string(),
            vocab.columns()[item.column].clone(),
            item.value.clone(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(TRANSACTIONS_FILE);
    let mut out = create(&path)?;
    for t in &encoded.transactions {
        let line = if t.is_empty() {
            "-".to_string()
        } else {
            t.items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
        };
        writeln!(out, "{line}").map_err(|e| Error::io(&path, e))?;
    }
    finish(&path, out)
}

pub fn load_encoded(dir: &Path) -> Result<Encoded> {
    let path = dir.join(SCHEMA_FILE);
    let schema: SchemaArtifact = serde_json::from_reader(open_artifact(dir, SCHEMA_FILE, "encode")?)
        .map_err(|e| Error::artifact(&path, e))?;
    let columns: Vec<String> = schema.columns.iter().map(|c| c.name.clone()).collect();

    let path = dir.join(VOCABULARY_FILE);
    let mut reader = csv::Reader::from_reader(open_artifact(dir, VOCABULARY_FILE, "encode")?);
    let mut items = Vec::new();
    for (expected_id, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |msg: &str| Error::artifact(&path, format!("record {}: {msg}", expected_id + 1));
        if record.len() != 4 {
            return Err(bad("expected item_id,column_index,column,value"));
        }
        let id: usize = record[0].parse().map_err(|_| bad("bad item_id"))?;
        let column: usize = record[1].parse().map_err(|_| bad("bad column_index"))?;
        if id != expected_id || columns.get(column).map(String::as_str) != Some(&record[2]) {
            return Err(bad("item does not match schema.json"));
        }
        items.push(Item { column, value: record[3].to_string() });
    }
    let vocabulary =
        Vocabulary::from_items(columns, items).map_err(|e| Error::artifact(&path, e))?;

    let path = dir.join(TRANSACTIONS_FILE);
    let mut transactions = Vec::with_capacity(schema.rows);
    for (row, line) in open_artifact(dir, TRANSACTIONS_FILE, "encode")?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let items = if line == "-" {
            Vec::new()
        } else {
            line.split(' ')
                .map(|s| match s.parse::<u32>() {
                    Ok(id) if (id as usize) < vocabulary.len() => Ok(ItemId(id)),
                    _ => Err(Error::artifact(&path, format!("line {}: bad item id `{s}`", row + 1))),
                })
                .collect::<Result<Vec<_>>>()?
        };
        transactions.push(Transaction::new(row, items));
    }
    if transactions.len() != schema.rows {
        return Err(Error::artifact(
            &path,
            format!("{} transactions but schema.json records {} rows", transactions.len(), schema.rows),
        ));
    }
    Ok(Encoded { schema, vocabulary, transactions })
}

pub fn graph_stage(config: &PipelineConfig, encoded: &Encoded) -> StageResult<SimilarityGraph> {
    let graph_config = config.graph_config().at(Stage::Config)?;
    let graph = build_graph(&encoded.transactions, &graph_config).at(Stage::Graph)?;
    let path = config.output_dir.join(GRAPH_FILE);
    (|| {
        let mut out = create(&path)?;
        graph.write_edge_list(&mut out).map_err(|e| Error::io(&path, e))?;
        finish(&path, out)
    })()
    .at(Stage::Graph)?;
    Ok(graph)
}

pub fn load_graph(dir: &Path, node_count: usize) -> Result<SimilarityGraph> {
    let reader = open_artifact(dir, GRAPH_FILE, "graph")?;
    SimilarityGraph::read_edge_list(reader, node_count).map_err(|e| Error::artifact(dir.join(GRAPH_FILE), e))
}

pub fn cluster_stage(config: &PipelineConfig, graph: &SimilarityGraph) -> StageResult<Clustering> {
    let criteria = config.selection().at(Stage::Config)?;
    let partition = louvain(graph);
    let clustering = clustering_for(graph, partition, &criteria).at(Stage::Cluster)?;
    write_clustering(&config.output_dir, &clustering).at(Stage::Cluster)?;
    Ok(clustering)
}

fn clustering_for(
    graph: &SimilarityGraph,
    partition: Partition,
    criteria: &SelectionCriteria,
) -> Result<Clustering> {
    let stats = community_stats(graph, &partition)?;
    let selected = select_communities(&stats, criteria)?;
    let modularity = if graph.edge_count() > 0 { Some(modularity(graph, &partition)?) } else { None };
    Ok(Clustering { partition, stats, selected, modularity })
}

fn write_clustering(dir: &Path, clustering: &Clustering) -> Result<()> {
    let path = dir.join(PARTITION_FILE);
    let mut out = create(&path)?;
    clustering.partition.write_to(&mut out).map_err(|e| Error::io(&path, e))?;
    finish(&path, out)?;

    let path = dir.join(COMMUNITIES_FILE);
    let mut writer = csv::Writer::from_writer(create(&path)?);
    writer.write_record(["community_id", "size", "strength", "intra_weight", "incident_weight", "selection_rank"])?;
    for s in &clustering.stats {
        let rank = clustering.selected.iter().position(|&id| id == s.id);
        writer.write_record([
            s.id.to_string(),
            s.size.to_string(),
            s.strength.to_string(),
            s.intra_weight.to_string(),
            s.incident_weight.to_string(),
            rank.map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))
}

/// Reloads the partition and selection; statistics are recomputed from the graph.
pub fn load_clustering(dir: &Path, graph: &SimilarityGraph) -> Result<Clustering> {
    let partition = Partition::read_from(open_artifact(dir, PARTITION_FILE, "cluster")?, graph.node_count())
        .map_err(|e| Error::artifact(dir.join(PARTITION_FILE), e))?;
    let stats = community_stats(graph, &partition)?;
    let path = dir.join(COMMUNITIES_FILE);
    let mut reader = csv::Reader::from_reader(open_artifact(dir, COMMUNITIES_FILE, "cluster")?);
    let mut ranked = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let bad = || Error::artifact(&path, format!("record {}: malformed", rows + 1));
        let id: usize = record.get(0).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if id != rows || id >= stats.len() {
            return Err(Error::artifact(&path, "community ids do not match partition.txt"));
        }
        match record.get(5) {
            Some("") => {}
            Some(rank) => ranked.push((rank.parse::<usize>().map_err(|_| bad())?, id)),
            None => return Err(bad()),
        }
        rows += 1;
    }
    if rows != stats.len() {
        return Err(Error::artifact(&path, "community count does not match partition.txt"));
    }
    ranked.sort_unstable();
    let selected = ranked.into_iter().map(|(_, id)| id).collect();
    let modularity = if graph.edge_count() > 0 { Some(modularity(graph, &partition)?) } else { None };
    Ok(Clustering { partition, stats, selected, modularity })
}

pub fn mine_stage(
    config: &PipelineConfig,
    encoded: &Encoded,
    clustering: &Clustering,
) -> StageResult<Vec<CommunityRules>> {
    let mining = config.mining().at(Stage::Config)?;
    let mined = clustering
        .selected
        .iter()
        .map(|&community| {
            let members = clustering.partition.members(community);
            Ok(CommunityRules {
                community,
                transactions: members.len(),
                rules: mine_community(&encoded.transactions, members, &mining)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .at(Stage::Mine)?;
    write_rules(&config.output_dir, &encoded.vocabulary, &mined).at(Stage::Mine)?;
    Ok(mined)
}

fn write_rules(dir: &Path, vocab: &Vocabulary, mined: &[CommunityRules]) -> Result<()> {
    let path = dir.join(RULES_FILE);
    let mut out = create(&path)?;
    let labels = |ids: &[ItemId]| ids.iter().map(|&id| vocab.label(id)).collect::<Vec<_>>();
    for group in mined {
        for rule in &group.rules {
            let record = RuleRecord {
                community: group.community,
                antecedent: labels(&rule.antecedent),
                consequent: labels(&rule.consequent),
                support: rule.support,
                confidence: rule.confidence,
                lift: rule.lift,
                antecedent_ids: rule.antecedent.clone(),
                consequent_ids: rule.consequent.clone(),
            };
            serde_json::to_writer(&mut out, &record).map_err(|e| Error::Internal(e.to_string()))?;
            out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
    }
    finish(&path, out)
}

pub fn load_rules(dir: &Path, vocab: &Vocabulary, clustering: &Clustering) -> Result<Vec<CommunityRules>> {
    let path = dir.join(RULES_FILE);
    let mut mined: Vec<CommunityRules> = clustering
        .selected
        .iter()
        .map(|&community| CommunityRules {
            community,
            transactions: clustering.partition.members(community).len(),
            rules: Vec::new(),
        })
        .collect();
    for (idx, line) in open_artifact(dir, RULES_FILE, "mine")?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        let bad = |msg: String| Error::artifact(&path, format!("line {}: {msg}", idx + 1));
        let record: RuleRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let known = |ids: &[ItemId]| ids.iter().all(|id| id.index() < vocab.len());
        if !known(&record.antecedent_ids) || !known(&record.consequent_ids) {
            return Err(bad("item id outside vocabulary.csv".into()));
        }
        let group = mined
            .iter_mut()
            .find(|g| g.community == record.community)
            .ok_or_else(|| bad(format!("community {} was not selected", record.community)))?;
        group.rules.push(AssociationRule {
            antecedent: record.antecedent_ids,
            consequent: record.consequent_ids,
            support: record.support,
            confidence: record.confidence,
            lift: record.lift,
        });
    }
    Ok(mined)
}

/// Per selected community: filtered, summarized and ranked rules.
pub fn summarize_rules(mined: &[CommunityRules], key: RankKey) -> Result<Vec<(usize, usize, Vec<RuleSummary>)>> {
    mined
        .iter()
        .map(|group| {
            let single = filter_single_consequent(group.rules.clone());
            let summaries = rank_summaries(summarize(&single)?, key);
            Ok((group.community, single.len(), summaries))
        })
        .collect()
}

pub fn summary_records(vocab: &Vocabulary, community: usize, summaries: &[RuleSummary]) -> Vec<SummaryRecord> {
    summaries
        .iter()
        .map(|s| SummaryRecord {
            community_id: community,
            consequent: vocab.label(s.consequent),
            consequent_id: s.consequent,
            antecedents: s
                .antecedents
                .iter()
                .map(|&(item, count)| AntecedentRecord { item: vocab.label(item), item_id: item, count })
                .collect(),
            support: s.support,
            confidence: s.confidence,
            lift: s.lift,
            rule_count: s.rule_count,
        })
        .collect()
}

pub fn summarize_stage(
    config: &PipelineConfig,
    encoded: &Encoded,
    graph: &SimilarityGraph,
    clustering: &Clustering,
    mined: &[CommunityRules],
) -> StageResult<RunReport> {
    let summarized = summarize_rules(mined, config.rank_by).at(Stage::Summarize)?;
    let records: Vec<SummaryRecord> = summarized
        .iter()
        .flat_map(|(community, _, summaries)| summary_records(&encoded.vocabulary, *community, summaries))
        .collect();
    write_summaries(&config.output_dir, &records).at(Stage::Summarize)?;

    let report = RunReport {
        dataset: DatasetShape {
            rows: encoded.schema.rows,
            columns: encoded.schema.columns.len(),
            items: encoded.vocabulary.len(),
        },
        graph: GraphReport {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            mean_degree: graph.mean_degree(),
            total_weight: graph.total_weight(),
            epsilon: config.epsilon,
        },
        modularity: clustering.modularity,
        communities: clustering
            .stats
            .iter()
            .map(|s| {
                let rank = clustering.selected.iter().position(|&id| id == s.id);
                CommunityReport { stats: s.clone(), selected: rank.is_some(), selection_rank: rank }
            })
            .collect(),
        mining: mined
            .iter()
            .zip(&summarized)
            .map(|(group, (_, single, summaries))| MiningReport {
                community: group.community,
                transactions: group.transactions,
                rules: group.rules.len(),
                single_consequent_rules: *single,
                summaries: summaries.len(),
            })
            .collect(),
        timings: Vec::new(),
    };
    write_report(&config.output_dir, &report, &encoded.schema).at(Stage::Summarize)?;
    Ok(report)
}

fn write_summaries(dir: &Path, records: &[SummaryRecord]) -> Result<()> {
    let path = dir.join(SUMMARIES_CSV_FILE);
    let mut writer = csv::Writer::from_writer(create(&path)?);
    writer.write_record([
        "community_id",
        "consequent",
        "ranked_antecedents",
        "support_min",
        "support_max",
        "confidence_min",
        "confidence_max",
        "lift_min",
        "lift_max",
        "rule_count",
    ])?;
    for r in records {
        let antecedents =
            r.antecedents.iter().map(|a| format!("{}:{}", a.item, a.count)).collect::<Vec<_>>().join(";");
        writer.write_record([
            r.community_id.to_string(),
            r.consequent.clone(),
            antecedents,
            r.support.min.to_string(),
            r.support.max.to_string(),
            r.confidence.min.to_string(),
            r.confidence.max.to_string(),
            r.lift.min.to_string(),
            r.lift.max.to_string(),
            r.rule_count.to_string(),
        ])?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(SUMMARIES_JSON_FILE);
    let json = serde_json::to_string_pretty(records).map_err(|e| Error::Internal(e.to_string()))?;
    write_text(&path, &(json + "\n"))
}

fn write_report(dir: &Path, report: &RunReport, schema: &SchemaArtifact) -> Result<()> {
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Internal(e.to_string()))?;
    write_text(&dir.join(REPORT_JSON_FILE), &(json + "\n"))?;
    write_text(&dir.join(REPORT_TEXT_FILE), &render_report(report, schema))
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Plain-text rendering of a report.
pub fn render_report(report: &RunReport, schema: &SchemaArtifact) -> String {
    let mut s = String::new();
    let d = &report.dataset;
    s += &format!("dataset     {} rows x {} columns, {} distinct items\n", d.rows, d.columns, d.items);
    let binned: Vec<&str> = schema
        .columns
        .iter()
        .filter(|c| c.kind == ColumnKind::Numeric)
        .map(|c| c.name.as_str())
        .collect();
    if !binned.is_empty() {
        s += &format!("binned      {}\n", binned.join(", "));
    }
    let g = &report.graph;
    s += &format!(
        "graph       {} nodes, {} edges, mean degree {:.3}, epsilon {}\n",
        g.nodes, g.edges, g.mean_degree, g.epsilon
    );
    match report.modularity {
        Some(q) => s += &format!("modularity  {q:.6}\n"),
        None => s += "modularity  undefined (no edges)\n",
    }
    s += &format!("communities {}\n\n", report.communities.len());

    s += &format!("{:>9}  {:>7}  {:>8}  {:>12}  {:>12}  {:>8}\n", "community", "size", "strength", "intra", "incident", "selected");
    let mut shown: Vec<&CommunityReport> = report.communities.iter().collect();
    shown.sort_by(|a, b| b.stats.size.cmp(&a.stats.size).then(a.stats.id.cmp(&b.stats.id)));
    const MAX_ROWS: usize = 20;
    for c in shown.iter().take(MAX_ROWS) {
        s += &format!(
            "{:>9}  {:>7}  {:>8.4}  {:>12.4}  {:>12.4}  {:>8}\n",
            c.stats.id,
            c.stats.size,
            c.stats.strength,
            c.stats.intra_weight,
            c.stats.incident_weight,
            c.selection_rank.map(|r| format!("#{}", r + 1)).unwrap_or_default()
        );
    }
    if shown.len() > MAX_ROWS {
        s += &format!("{:>9}  ({} smaller communities not shown)\n", "...", shown.len() - MAX_ROWS);
    }

    s += &format!("\n{:>9}  {:>12}  {:>10}  {:>14}  {:>9}\n", "community", "transactions", "rules", "single-conseq.", "summaries");
    for m in &report.mining {
        s += &format!(
            "{:>9}  {:>12}  {:>10}  {:>14}  {:>9}\n",
            m.community, m.transactions, m.rules, m.single_consequent_rules, m.summaries
        );
    }
    s
}

/// Human-readable top summaries, used by the CLI after a run.
pub fn render_summaries(records: &[SummaryRecord], limit: usize) -> String {
    let mut s = String::new();
    for r in records.iter().take(limit) {
        let antecedents =
            r.antecedents.iter().map(|a| format!("({}, {})", a.item, a.count)).collect::<Vec<_>>().join(", ");
        s += &format!(
            "[{}] ({}) -> {}  support [{}, {}]  confidence [{}, {}]  lift [{:.2}, {:.2}]  rules {}\n",
            r.community_id,
            antecedents,
            r.consequent,
            pct(r.support.min),
            pct(r.support.max),
            pct(r.confidence.min),
            pct(r.confidence.max),
            r.lift.min,
            r.lift.max,
            r.rule_count
        );
    }
    s
}

pub fn load_summaries(dir: &Path) -> Result<Vec<SummaryRecord>> {
    serde_json::from_reader(open_artifact(dir, SUMMARIES_JSON_FILE, "summarize")?)
        .map_err(|e| Error::artifact(dir.join(SUMMARIES_JSON_FILE), e))
}

/// Runs `f` on a rayon pool of `workers` threads, or the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Internal(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs all stages in order, writing every artifact plus `timings.json`.
pub fn run_pipeline(config: &PipelineConfig) -> StageResult<RunReport> {
    config.validate().at(Stage::Config)?;
    with_workers(config.workers, || {
        let mut timings = Vec::new();
        let mut clock = Instant::now();
        let mut lap = |stage: Stage, timings: &mut Vec<StageTiming>| {
            timings.push(StageTiming { stage: stage.to_string(), millis: clock.elapsed().as_secs_f64() * 1e3 });
            clock = Instant::now();
        };
        let encoded = encode_stage(config)?;
        lap(Stage::Encode, &mut timings);
        let graph = graph_stage(config, &encoded)?;
        lap(Stage::Graph, &mut timings);
        let clustering = cluster_stage(config, &graph)?;
        lap(Stage::Cluster, &mut timings);
        let mined = mine_stage(config, &encoded, &clustering)?;
        lap(Stage::Mine, &mut timings);
        let mut report = summarize_stage(config, &encoded, &graph, &clustering, &mined)?;
        lap(Stage::Summarize, &mut timings);
        let json = serde_json::to_string_pretty(&timings).map_err(|e| Error::Internal(e.to_string()));
        json.and_then(|j| write_text(&config.output_dir.join(TIMINGS_FILE), &(j + "\n")))
            .at(Stage::Summarize)?;
        report.timings = timings;
        Ok(report)
    })
    .at(Stage::Config)?
}

/// Stage entry points that start from the artifacts already on disk.
pub mod from_disk {
    use super::*;

    pub fn graph(config: &PipelineConfig) -> StageResult<SimilarityGraph> {
        config.validate().at(Stage::Config)?;
        let encoded = load_encoded(&config.output_dir).at(Stage::Graph)?;
        prepare_output(config).at(Stage::Config)?;
        with_workers(config.workers, || graph_stage(config, &encoded)).at(Stage::Config)?
    }

    pub fn cluster(config: &PipelineConfig) -> StageResult<Clustering> {
        config.validate().at(Stage::Config)?;
        let dir = &config.output_dir;
        let encoded = load_encoded(dir).at(Stage::Cluster)?;
        let graph = load_graph(dir, encoded.transactions.len()).at(Stage::Cluster)?;
        prepare_output(config).at(Stage::Config)?;
        cluster_stage(config, &graph)
    }

    pub fn mine(config: &PipelineConfig) -> StageResult<Vec<CommunityRules>> {
        config.validate().at(Stage::Config)?;
        let dir = &config.output_dir;
        let encoded = load_encoded(dir).at(Stage::Mine)?;
        let graph = load_graph(dir, encoded.transactions.len()).at(Stage::Mine)?;
        let clustering = load_clustering(dir, &graph).at(Stage::Mine)?;
        prepare_output(config).at(Stage::Config)?;
        with_workers(config.workers, || mine_stage(config, &encoded, &clustering)).at(Stage::Config)?
    }

    pub fn summarize(config: &PipelineConfig) -> StageResult<RunReport> {
        config.validate().at(Stage::Config)?;
        let dir = &config.output_dir;
        let encoded = load_encoded(dir).at(Stage::Summarize)?;
        let graph = load_graph(dir, encoded.transactions.len()).at(Stage::Summarize)?;
        let clustering = load_clustering(dir, &graph).at(Stage::Summarize)?;
        let mined = load_rules(dir, &encoded.vocabulary, &clustering).at(Stage::Summarize)?;
        prepare_output(config).at(Stage::Config)?;
        summarize_stage(config, &encoded, &graph, &clustering, &mined)
    }
}
