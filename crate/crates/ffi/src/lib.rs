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

//! C ABI for catrules.
//!
//! Every object crosses the boundary as an opaque handle that the caller
//! releases with its matching `*_free` function. Fallible calls return a
//! [`CatrulesStatus`]; on failure the message is available from
//! [`catrules_last_error`] on the same thread. Strings handed out by the
//! library are released with [`catrules_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use libc::{c_char, c_double};

use catrules::pipeline::{summary_records, RuleRecord};
use catrules::{
    bin_numeric, build_graph, community_stats, encode, filter_single_consequent, load_csv, louvain,
    mine_community, modularity, rank_summaries, run_pipeline, select_communities, summarize,
    AssociationRule, CsvOptions, Dataset, ErrorKind, GraphConfig, ItemId, MiningConfig, Partition,
    PipelineConfig, RankKey, SelectionCriteria, SimilarityGraph, Transaction, Vocabulary,
};

/// Result of a fallible call. The numeric values of the first four match
/// the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatrulesStatus {
    Ok = 0,
    /// Invalid configuration or parameter value.
    Usage = 1,
    /// Unreadable or malformed input data.
    Data = 2,
    /// Internal invariant violation or caught panic.
    Internal = 3,
    /// Null pointer, bad UTF-8 or out-of-range index passed by the caller.
    InvalidArgument = 4,
}

/// Loaded table, before encoding.
pub struct CatrulesDataset(Dataset);

/// Item vocabulary plus one transaction per row.
pub struct CatrulesEncoded {
    vocabulary: Vocabulary,
    transactions: Vec<Transaction>,
}

/// Epsilon-ball similarity graph over the rows.
pub struct CatrulesGraph(SimilarityGraph);

/// Community assignment of every node.
pub struct CatrulesPartition(Partition);

/// Association rules mined from one community.
pub struct CatrulesRules(Vec<AssociationRule>);

struct Failure {
    status: CatrulesStatus,
    message: String,
}

impl From<catrules::Error> for Failure {
    fn from(e: catrules::Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Usage => CatrulesStatus::Usage,
            ErrorKind::Data => CatrulesStatus::Data,
            ErrorKind::Internal => CatrulesStatus::Internal,
        };
        Failure { status, message: e.to_string() }
    }
}

impl From<catrules::PipelineError> for Failure {
    fn from(e: catrules::PipelineError) -> Self {
        let message = e.to_string();
        Failure { message, ..Failure::from(e.source) }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { status: CatrulesStatus::InvalidArgument, message: message.into() }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CatrulesStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|panic| {
        let detail = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(Failure { status: CatrulesStatus::Internal, message: format!("panic: {detail}") })
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CatrulesStatus::Ok
        }
        Err(failure) => {
            set_last_error(&failure.message);
            failure.status
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn optional_text<'a>(ptr: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if ptr.is_null() {
        Ok(None)
    } else {
        text(ptr, name).map(Some)
    }
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

/// Writes `value` through `out`, boxing it into a fresh handle.
unsafe fn emit<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn clear<T>(out: *mut *mut T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    *out = ptr::null_mut();
    Ok(())
}

fn owned_string(value: String) -> Result<*mut c_char, Failure> {
    CString::new(value).map(CString::into_raw).map_err(|_| Failure {
        status: CatrulesStatus::Internal,
        message: "output contains an interior NUL byte".into(),
    })
}

unsafe fn release<T>(ptr: *mut T) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

// ---------------------------------------------------------------------------
// Library-wide

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn catrules_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into the library on this
/// thread; do not free.
#[no_mangle]
pub extern "C" fn catrules_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn catrules_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------------------
// Dataset

/// Loads a CSV file with a header row. All columns are categorical.
/// `missing` is the cell value treated as absent; NULL means `"NA"`.
///
/// # Safety
/// `path` and a non-NULL `missing` must be NUL-terminated strings; `out`
/// must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn catrules_dataset_load_csv(
    path: *const c_char,
    delimiter: c_char,
    missing: *const c_char,
    out: *mut *mut CatrulesDataset,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let path = text(path, "path")?;
        let missing = optional_text(missing, "missing")?.unwrap_or(catrules::dataset::DEFAULT_MISSING);
        let delimiter = u8::try_from(delimiter).map_err(|_| invalid("delimiter must be an ASCII byte"))?;
        let options = CsvOptions { delimiter, missing: missing.to_string() };
        emit(out, CatrulesDataset(load_csv(path, None, &options)?));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_dataset_row_count(dataset: *const CatrulesDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.row_count())
}

/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_dataset_column_count(dataset: *const CatrulesDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.column_count())
}

/// Replaces a numeric column with interval labels cut at `boundaries`
/// (strictly increasing, `len` values). On failure the dataset is unchanged.
///
/// # Safety
/// `dataset` must be a live handle, `column` a NUL-terminated string and
/// `boundaries` readable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn catrules_dataset_bin_numeric(
    dataset: *mut CatrulesDataset,
    column: *const c_char,
    boundaries: *const c_double,
    len: usize,
) -> CatrulesStatus {
    guard(|| {
        let target = dataset.as_mut().ok_or_else(|| invalid("dataset is null"))?;
        let column = text(column, "column")?;
        if boundaries.is_null() && len > 0 {
            return Err(invalid("boundaries is null"));
        }
        let cuts = if len == 0 { &[][..] } else { std::slice::from_raw_parts(boundaries, len) };
        target.0 = bin_numeric(target.0.clone(), column, cuts)?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn catrules_dataset_free(dataset: *mut CatrulesDataset) {
    release(dataset);
}

// ---------------------------------------------------------------------------
// Encoding

/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_encode(
    dataset: *const CatrulesDataset,
    out: *mut *mut CatrulesEncoded,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let (vocabulary, transactions) = encode(&handle(dataset, "dataset")?.0);
        emit(out, CatrulesEncoded { vocabulary, transactions });
        Ok(())
    })
}

/// # Safety
/// `encoded` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_encoded_transaction_count(encoded: *const CatrulesEncoded) -> usize {
    encoded.as_ref().map_or(0, |e| e.transactions.len())
}

/// # Safety
/// `encoded` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_encoded_item_count(encoded: *const CatrulesEncoded) -> usize {
    encoded.as_ref().map_or(0, |e| e.vocabulary.len())
}

/// `column=value` label of an item id. Free the result with
/// [`catrules_string_free`].
///
/// # Safety
/// `encoded` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_encoded_item_label(
    encoded: *const CatrulesEncoded,
    item: u32,
    out: *mut *mut c_char,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let encoded = handle(encoded, "encoded")?;
        if item as usize >= encoded.vocabulary.len() {
            return Err(invalid(format!("item {item} is out of range")));
        }
        *out = owned_string(encoded.vocabulary.label(ItemId(item)))?;
        Ok(())
    })
}

/// # Safety
/// `encoded` must be NULL or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn catrules_encoded_free(encoded: *mut CatrulesEncoded) {
    release(encoded);
}

// ---------------------------------------------------------------------------
// Graph and communities

/// Links every pair of rows whose cosine similarity exceeds `epsilon`,
/// which must lie in (0, 1].
///
/// # Safety
/// `encoded` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_graph_build(
    encoded: *const CatrulesEncoded,
    epsilon: c_double,
    out: *mut *mut CatrulesGraph,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let encoded = handle(encoded, "encoded")?;
        let graph = build_graph(&encoded.transactions, &GraphConfig::new(epsilon)?)?;
        emit(out, CatrulesGraph(graph));
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_graph_node_count(graph: *const CatrulesGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.node_count())
}

/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_graph_edge_count(graph: *const CatrulesGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Sum of all edge weights.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_graph_total_weight(graph: *const CatrulesGraph) -> c_double {
    graph.as_ref().map_or(0.0, |g| g.0.total_weight())
}

/// # Safety
/// `graph` must be NULL or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn catrules_graph_free(graph: *mut CatrulesGraph) {
    release(graph);
}

/// Deterministic Louvain community detection.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_louvain(
    graph: *const CatrulesGraph,
    out: *mut *mut CatrulesPartition,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        emit(out, CatrulesPartition(louvain(&handle(graph, "graph")?.0)));
        Ok(())
    })
}

/// Modularity of `partition` on `graph`. Fails on an edgeless graph.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_modularity(
    graph: *const CatrulesGraph,
    partition: *const CatrulesPartition,
    out: *mut c_double,
) -> CatrulesStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        *out = modularity(&handle(graph, "graph")?.0, &handle(partition, "partition")?.0)?;
        Ok(())
    })
}

/// # Safety
/// `partition` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_partition_community_count(partition: *const CatrulesPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.community_count())
}

/// # Safety
/// `partition` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_partition_community_of(
    partition: *const CatrulesPartition,
    node: usize,
    out: *mut usize,
) -> CatrulesStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| invalid("out is null"))?;
        let partition = &handle(partition, "partition")?.0;
        if node >= partition.node_count() {
            return Err(invalid(format!("node {node} is out of range")));
        }
        *out = partition.community_of(node);
        Ok(())
    })
}

/// # Safety
/// `partition` must be NULL or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn catrules_partition_free(partition: *mut CatrulesPartition) {
    release(partition);
}

/// Ranks communities by strength (then size, then id) among those holding
/// at least `min_size_fraction` of the nodes and keeps the best `top_k`.
/// Up to `capacity` ids are written to `ids`; `out_len` receives the full
/// number selected.
///
/// # Safety
/// Handles must be live; `ids` must be writable for `capacity` entries
/// (may be NULL when `capacity` is 0); `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_select_communities(
    graph: *const CatrulesGraph,
    partition: *const CatrulesPartition,
    min_size_fraction: c_double,
    top_k: usize,
    ids: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> CatrulesStatus {
    guard(|| {
        let out_len = out_len.as_mut().ok_or_else(|| invalid("out_len is null"))?;
        if ids.is_null() && capacity > 0 {
            return Err(invalid("ids is null"));
        }
        let stats = community_stats(&handle(graph, "graph")?.0, &handle(partition, "partition")?.0)?;
        let selected = select_communities(&stats, &SelectionCriteria::new(min_size_fraction, top_k)?)?;
        for (slot, id) in selected.iter().take(capacity).enumerate() {
            *ids.add(slot) = *id;
        }
        *out_len = selected.len();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Mining and summaries

/// Mines association rules among the rows of one community.
/// `max_itemset_size` of 0 means unbounded.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_mine_community(
    encoded: *const CatrulesEncoded,
    partition: *const CatrulesPartition,
    community: usize,
    min_support: c_double,
    min_confidence: c_double,
    max_itemset_size: usize,
    out: *mut *mut CatrulesRules,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let encoded = handle(encoded, "encoded")?;
        let partition = &handle(partition, "partition")?.0;
        if community >= partition.community_count() {
            return Err(invalid(format!("community {community} is out of range")));
        }
        let cap = (max_itemset_size > 0).then_some(max_itemset_size);
        let config = MiningConfig::new(min_support, min_confidence, cap)?;
        let rules = mine_community(&encoded.transactions, partition.members(community), &config)?;
        emit(out, CatrulesRules(rules));
        Ok(())
    })
}

/// # Safety
/// `rules` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn catrules_rules_count(rules: *const CatrulesRules) -> usize {
    rules.as_ref().map_or(0, |r| r.0.len())
}

/// All rules as a JSON array of objects with `antecedent`, `consequent`,
/// `support`, `confidence`, `lift` and the matching item ids. `community`
/// is copied into each object. Free with [`catrules_string_free`].
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_rules_json(
    rules: *const CatrulesRules,
    encoded: *const CatrulesEncoded,
    community: usize,
    out: *mut *mut c_char,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let vocab = &handle(encoded, "encoded")?.vocabulary;
        let labels = |ids: &[ItemId]| ids.iter().map(|&id| vocab.label(id)).collect::<Vec<_>>();
        let records: Vec<RuleRecord> = handle(rules, "rules")?
            .0
            .iter()
            .map(|r| RuleRecord {
                community,
                antecedent: labels(&r.antecedent),
                consequent: labels(&r.consequent),
                support: r.support,
                confidence: r.confidence,
                lift: r.lift,
                antecedent_ids: r.antecedent.clone(),
                consequent_ids: r.consequent.clone(),
            })
            .collect();
        let json = serde_json::to_string(&records).map_err(|e| Failure {
            status: CatrulesStatus::Internal,
            message: e.to_string(),
        })?;
        *out = owned_string(json)?;
        Ok(())
    })
}

/// Folds the single-consequent rules into one summary per consequent and
/// returns them as a JSON array, ranked by `rank_by` (`rule_count`,
/// `max_lift` or `max_confidence`; NULL means `rule_count`). Free with
/// [`catrules_string_free`].
///
/// # Safety
/// Handles must be live; a non-NULL `rank_by` must be NUL-terminated;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_rules_summaries_json(
    rules: *const CatrulesRules,
    encoded: *const CatrulesEncoded,
    community: usize,
    rank_by: *const c_char,
    out: *mut *mut c_char,
) -> CatrulesStatus {
    guard(|| {
        clear(out, "out")?;
        let vocab = &handle(encoded, "encoded")?.vocabulary;
        let key = match optional_text(rank_by, "rank_by")? {
            Some(name) => name.parse::<RankKey>()?,
            None => RankKey::default(),
        };
        let single = filter_single_consequent(handle(rules, "rules")?.0.clone());
        let ranked = rank_summaries(summarize(&single)?, key);
        let records = summary_records(vocab, community, &ranked);
        let json = serde_json::to_string(&records).map_err(|e| Failure {
            status: CatrulesStatus::Internal,
            message: e.to_string(),
        })?;
        *out = owned_string(json)?;
        Ok(())
    })
}

/// # Safety
/// `rules` must be NULL or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn catrules_rules_free(rules: *mut CatrulesRules) {
    release(rules);
}

// ---------------------------------------------------------------------------
// Whole pipeline

/// Runs every stage from a TOML config file, writing all artifacts.
/// A non-NULL `output_dir` overrides the config's. When `report_json` is
/// non-NULL it receives the run report as JSON, to be freed with
/// [`catrules_string_free`].
///
/// # Safety
/// `config_path` and a non-NULL `output_dir` must be NUL-terminated
/// strings; a non-NULL `report_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn catrules_run_pipeline(
    config_path: *const c_char,
    output_dir: *const c_char,
    report_json: *mut *mut c_char,
) -> CatrulesStatus {
    guard(|| {
        if !report_json.is_null() {
            *report_json = ptr::null_mut();
        }
        let mut config = PipelineConfig::load(text(config_path, "config_path")?)?;
        if let Some(dir) = optional_text(output_dir, "output_dir")? {
            config.output_dir = PathBuf::from(dir);
        }
        let report = run_pipeline(&config)?;
        if !report_json.is_null() {
            let json = serde_json::to_string(&report).map_err(|e| Failure {
                status: CatrulesStatus::Internal,
                message: e.to_string(),
            })?;
            *report_json = owned_string(json)?;
        }
        Ok(())
    })
}
