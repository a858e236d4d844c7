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

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use catrules::pipeline::{self, from_disk, BinSpec, PipelineConfig, Stage};
use catrules::{Error, RankKey};

#[derive(Parser)]
#[command(name = "catrules", version, about = "Community-aware association rule mining for categorical data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage: encode, graph, cluster, mine, summarize.
    Run(Overrides),
    /// Load the CSV, bin numeric columns and encode rows as transactions.
    Encode(Overrides),
    /// Build the epsilon-ball similarity graph.
    Graph(Overrides),
    /// Detect communities with Louvain and select the strongest.
    Cluster(Overrides),
    /// Mine association rules inside the selected communities.
    Mine(Overrides),
    /// Summarize rules by consequent and write the report.
    Summarize(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    /// TOML config file; flags below take precedence over its values.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Input CSV with a header row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for artifacts [default: catrules-out].
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Single-byte field separator [default: ,].
    #[arg(long)]
    delimiter: Option<char>,
    /// Cell value treated as missing (empty cells always are).
    #[arg(long)]
    missing: Option<String>,
    /// Link rows whose cosine similarity exceeds this, in (0, 1].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Smallest community eligible for mining, as a share of all rows [default: 0.05].
    #[arg(long)]
    min_size_fraction: Option<f64>,
    /// Number of strongest communities to mine [default: 1].
    #[arg(long)]
    top_k: Option<usize>,
    /// Minimum itemset support within a community [default: 0.2].
    #[arg(long)]
    min_support: Option<f64>,
    /// Minimum rule confidence [default: 0.5].
    #[arg(long)]
    min_confidence: Option<f64>,
    /// Largest itemset apriori grows to [default: unbounded].
    #[arg(long)]
    max_itemset_size: Option<usize>,
    /// Summary order: rule_count, max_lift or max_confidence [default: rule_count].
    #[arg(long)]
    rank_by: Option<String>,
    /// Numeric column binning, e.g. `price=50,100,200`. Repeatable.
    #[arg(long = "bin", value_name = "COLUMN=B1,B2,...")]
    bins: Vec<String>,
    /// Worker threads; output does not depend on it [default: all cores].
    #[arg(long, env = "CATRULES_WORKERS")]
    workers: Option<usize>,
}

fn parse_bin(spec: &str) -> Result<BinSpec, Error> {
    let bad = || Error::Config(format!("--bin expects COLUMN=B1,B2,..., got `{spec}`"));
    let (column, list) = spec.rsplit_once('=').ok_or_else(bad)?;
    let boundaries = list
        .split(',')
        .map(|b| b.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BinSpec { column: column.trim().to_string(), boundaries })
}

impl Overrides {
    fn resolve(self) -> Result<PipelineConfig, Error> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => {
                let input = self.input.clone().ok_or_else(|| Error::Config("--input or --config is required".into()))?;
                let epsilon = self.epsilon.ok_or_else(|| Error::Config("--epsilon or --config is required".into()))?;
                let output = self.output_dir.clone().unwrap_or_else(|| PathBuf::from("catrules-out"));
                PipelineConfig::new(input, output, epsilon)
            }
        };
        if let Some(v) = self.input {
            config.input = v;
        }
        if let Some(v) = self.output_dir {
            config.output_dir = v;
        }
        if let Some(v) = self.delimiter {
            config.delimiter = v;
        }
        if let Some(v) = self.missing {
            config.missing = v;
        }
        if let Some(v) = self.epsilon {
            config.epsilon = v;
        }
        if let Some(v) = self.min_size_fraction {
            config.min_size_fraction = v;
        }
        if let Some(v) = self.top_k {
            config.top_k = v;
        }
        if let Some(v) = self.min_support {
            config.min_support = v;
        }
        if let Some(v) = self.min_confidence {
            config.min_confidence = v;
        }
        if let Some(v) = self.max_itemset_size {
            config.max_itemset_size = Some(v);
        }
        if let Some(v) = self.rank_by {
            config.rank_by = v.parse::<RankKey>()?;
        }
        if let Some(v) = self.workers {
            config.workers = Some(v);
        }
        for spec in &self.bins {
            let spec = parse_bin(spec)?;
            config.bins.retain(|b| b.column != spec.column);
            config.bins.push(spec);
        }
        config.validate()?;
        Ok(config)
    }
}

fn fail(stage: Stage, err: &dyn std::fmt::Display, code: i32) -> ExitCode {
    eprintln!("catrules: {stage} stage failed: {err}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };

    let (overrides, stage) = match cli.command {
        Command::Run(o) => (o, None),
        Command::Encode(o) => (o, Some(Stage::Encode)),
        Command::Graph(o) => (o, Some(Stage::Graph)),
        Command::Cluster(o) => (o, Some(Stage::Cluster)),
        Command::Mine(o) => (o, Some(Stage::Mine)),
        Command::Summarize(o) => (o, Some(Stage::Summarize)),
    };
    let config = match overrides.resolve() {
        Ok(c) => c,
        Err(e) => return fail(Stage::Config, &e, e.exit_code()),
    };

    let outcome = match stage {
        None => pipeline::run_pipeline(&config).map(Some),
        Some(Stage::Encode) => pipeline::with_workers(config.workers, || pipeline::encode_stage(&config))
            .map_err(|source| pipeline::PipelineError { stage: Stage::Config, source })
            .and_then(|r| r)
            .map(|_| None),
        Some(Stage::Graph) => from_disk::graph(&config).map(|_| None),
        Some(Stage::Cluster) => from_disk::cluster(&config).map(|_| None),
        Some(Stage::Mine) => from_disk::mine(&config).map(|_| None),
        Some(_) => from_disk::summarize(&config).map(Some),
    };

    match outcome {
        Ok(Some(_)) => {
            let dir = &config.output_dir;
            if let Ok(text) = std::fs::read_to_string(dir.join(pipeline::REPORT_TEXT_FILE)) {
                print!("{text}");
            }
            if let Ok(records) = pipeline::load_summaries(dir) {
                if !records.is_empty() {
                    println!("\ntop rule summaries");
                    print!("{}", pipeline::render_summaries(&records, 10));
                }
            }
            println!("\nartifacts written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catrules: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
