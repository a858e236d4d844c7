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

mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const ARTIFACTS: &[&str] = &[
    "config.toml",
    "schema.json",
    "vocabulary.csv",
    "transactions.txt",
    "graph.edgelist",
    "partition.txt",
    "communities.csv",
    "rules.jsonl",
    "summaries.csv",
    "summaries.json",
    "report.json",
    "report.txt",
];

fn catrules(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catrules")).args(args).env_remove("CATRULES_WORKERS").output().unwrap()
}

fn write_input(dir: &Path, csv: &str) -> PathBuf {
    let path = dir.join("input.csv");
    fs::write(&path, csv).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn common_flags<'a>(input: &'a str, out: &'a str) -> Vec<&'a str> {
    vec!["--input", input, "-o", out, "--epsilon", "0.6", "--top-k", "2", "--min-support", "0.3", "--min-confidence", "0.6"]
}

#[test]
fn run_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &common::planted(1).csv);
    let out = tmp.path().join("out");
    let mut args = vec!["run"];
    args.extend(common_flags(input.to_str().unwrap(), out.to_str().unwrap()));
    args.extend(["--workers", "2"]);
    let result = catrules(&args);
    assert!(result.status.success(), "{}", stderr(&result));
    for name in ARTIFACTS.iter().chain(&["timings.json"]) {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("top rule summaries"));
}

#[test]
fn separate_stages_reproduce_run_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &common::planted(2).csv);
    let input = input.to_str().unwrap();
    let whole = tmp.path().join("whole");
    let staged = tmp.path().join("staged");
    let whole_s = whole.to_str().unwrap();
    let staged_s = staged.to_str().unwrap();

    let mut args = vec!["run"];
    args.extend(common_flags(input, whole_s));
    assert!(catrules(&args).status.success());
    for stage in ["encode", "graph", "cluster", "mine", "summarize"] {
        let mut args = vec![stage];
        args.extend(common_flags(input, staged_s));
        let result = catrules(&args);
        assert!(result.status.success(), "{stage}: {}", stderr(&result));
    }
    for name in ARTIFACTS {
        assert_eq!(fs::read(whole.join(name)).unwrap(), fs::read(staged.join(name)).unwrap(), "{name} differs");
    }
    assert!(!staged.join("timings.json").exists());
}

#[test]
fn config_file_and_flags_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), &common::planted(3).csv);
    let config = tmp.path().join("catrules.toml");
    fs::write(
        &config,
        format!("input = {:?}\nepsilon = 0.6\nmin_support = 0.3\nmin_confidence = 0.6\ntop_k = 2\n", input.to_str().unwrap()),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let result = catrules(&["run", "--config", config.to_str().unwrap(), "-o", out.to_str().unwrap(), "--rank-by", "max_lift"]);
    assert!(result.status.success(), "{}", stderr(&result));
    let copied = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(copied.contains("rank_by = \"max_lift\""));
    assert!(!copied.contains("output_dir"));
}

#[test]
fn zero_rules_is_still_success() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "a,b\nx,1\nx,2\nx,3\nx,4\n");
    let out = tmp.path().join("out");
    let result = catrules(&["run", "--input", input.to_str().unwrap(), "-o", out.to_str().unwrap(), "--epsilon", "0.4", "--min-support", "0.9", "--min-confidence", "0.9"]);
    assert!(result.status.success(), "{}", stderr(&result));
    assert_eq!(fs::read_to_string(out.join("rules.jsonl")).unwrap(), "");
    assert_eq!(fs::read_to_string(out.join("summaries.json")).unwrap().trim(), "[]");
}

#[test]
fn unreadable_input_is_a_data_error_naming_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let result = catrules(&["run", "--input", missing.to_str().unwrap(), "-o", tmp.path().join("o").to_str().unwrap(), "--epsilon", "0.5"]);
    assert_eq!(result.status.code(), Some(2));
    let err = stderr(&result);
    assert!(err.contains("ingest"), "{err}");
    assert!(err.contains("nope.csv"), "{err}");
}

#[test]
fn ragged_row_reports_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "a,b\n1,2\n3\n");
    let result = catrules(&["encode", "--input", input.to_str().unwrap(), "-o", tmp.path().join("o").to_str().unwrap(), "--epsilon", "0.5"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("line 3"), "{}", stderr(&result));
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "a,b\n1,2\n");
    let input = input.to_str().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    for bad in [
        vec!["run", "--input", input, "-o", out, "--epsilon", "0"],
        vec!["run", "--input", input, "-o", out, "--epsilon", "1.5"],
        vec!["run", "--input", input, "-o", out, "--epsilon", "0.5", "--min-support", "0"],
        vec!["run", "--input", input, "-o", out, "--epsilon", "0.5", "--rank-by", "vibes"],
        vec!["run", "--input", input, "-o", out, "--epsilon", "0.5", "--bin", "a"],
        vec!["run", "--input", input, "-o", out],
        vec!["frobnicate"],
    ] {
        let result = catrules(&bad);
        assert_eq!(result.status.code(), Some(1), "{bad:?}: {}", stderr(&result));
    }
}

#[test]
fn unreachable_size_floor_asks_to_lower_it() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "a,b\nx,1\ny,2\nz,3\nw,4\n");
    let result = catrules(&["run", "--input", input.to_str().unwrap(), "-o", tmp.path().join("o").to_str().unwrap(), "--epsilon", "0.9", "--min-size-fraction", "0.5"]);
    assert_eq!(result.status.code(), Some(1));
    assert!(stderr(&result).contains("lower min_size_fraction"), "{}", stderr(&result));
}

#[test]
fn stage_without_upstream_artifacts_names_the_producer() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "a,b\n1,2\n");
    let result = catrules(&["cluster", "--input", input.to_str().unwrap(), "-o", tmp.path().join("empty").to_str().unwrap(), "--epsilon", "0.5"]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("catrules"), "{}", stderr(&result));
}

#[test]
fn numeric_bins_become_interval_items() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write_input(tmp.path(), "color,price\nred,5\nred,15\nblue,25\nblue,NA\n");
    let out = tmp.path().join("o");
    let result = catrules(&["encode", "--input", input.to_str().unwrap(), "-o", out.to_str().unwrap(), "--epsilon", "0.5", "--bin", "price=10,20"]);
    assert!(result.status.success(), "{}", stderr(&result));
    let vocab = fs::read_to_string(out.join("vocabulary.csv")).unwrap();
    for label in ["price,min-10", "price,10-20", "price,20-max"] {
        assert!(vocab.contains(label), "{label} not in {vocab}");
    }
    let transactions = fs::read_to_string(out.join("transactions.txt")).unwrap();
    assert_eq!(transactions.lines().count(), 4);
}

#[test]
fn help_and_version_exit_zero() {
    assert!(catrules(&["--help"]).status.success());
    assert!(catrules(&["--version"]).status.success());
    assert!(catrules(&["run", "--help"]).status.success());
}
