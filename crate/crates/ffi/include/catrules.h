/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CATRULES_H
#define CATRULES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result of a fallible call. The numeric values of the first four match
 * the command-line exit codes.
 */
typedef enum {
  CATRULES_STATUS_OK = 0,
  /**
   * Invalid configuration or parameter value.
   */
  CATRULES_STATUS_USAGE = 1,
  /**
   * Unreadable or malformed input data.
   */
  CATRULES_STATUS_DATA = 2,
  /**
   * Internal invariant violation or caught panic.
   */
  CATRULES_STATUS_INTERNAL = 3,
  /**
   * Null pointer, bad UTF-8 or out-of-range index passed by the caller.
   */
  CATRULES_STATUS_INVALID_ARGUMENT = 4,
} CatrulesStatus;

/**
 * Loaded table, before encoding.
 */
typedef struct CatrulesDataset CatrulesDataset;

/**
 * Item vocabulary plus one transaction per row.
 */
typedef struct CatrulesEncoded CatrulesEncoded;

/**
 * Epsilon-ball similarity graph over the rows.
 */
typedef struct CatrulesGraph CatrulesGraph;

/**
 * Community assignment of every node.
 */
typedef struct CatrulesPartition CatrulesPartition;

/**
 * Association rules mined from one community.
 */
typedef struct CatrulesRules CatrulesRules;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *catrules_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful call. Valid until the next call into the library on this
 * thread; do not free.
 */
const char *catrules_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void catrules_string_free(char *s);

/**
 * Loads a CSV file with a header row. All columns are categorical.
 * `missing` is the cell value treated as absent; NULL means `"NA"`.
 *
 * # Safety
 * `path` and a non-NULL `missing` must be NUL-terminated strings; `out`
 * must be a valid pointer to writable storage.
 */
CatrulesStatus catrules_dataset_load_csv(const char *path,
                                         char delimiter,
                                         const char *missing,
                                         CatrulesDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
uintptr_t catrules_dataset_row_count(const CatrulesDataset *dataset);

/**
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
uintptr_t catrules_dataset_column_count(const CatrulesDataset *dataset);

/**
 * Replaces a numeric column with interval labels cut at `boundaries`
 * (strictly increasing, `len` values). On failure the dataset is unchanged.
 *
 * # Safety
 * `dataset` must be a live handle, `column` a NUL-terminated string and
 * `boundaries` readable for `len` doubles.
 */
CatrulesStatus catrules_dataset_bin_numeric(CatrulesDataset *dataset,
                                            const char *column,
                                            const double *boundaries,
                                            uintptr_t len);

/**
 * # Safety
 * `dataset` must be NULL or a live handle, not used afterwards.
 */
void catrules_dataset_free(CatrulesDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
CatrulesStatus catrules_encode(const CatrulesDataset *dataset, CatrulesEncoded **out);

/**
 * # Safety
 * `encoded` must be NULL or a live handle.
 */
uintptr_t catrules_encoded_transaction_count(const CatrulesEncoded *encoded);

/**
 * # Safety
 * `encoded` must be NULL or a live handle.
 */
uintptr_t catrules_encoded_item_count(const CatrulesEncoded *encoded);

/**
 * `column=value` label of an item id. Free the result with
 * [`catrules_string_free`].
 *
 * # Safety
 * `encoded` must be a live handle; `out` must be writable.
 */
CatrulesStatus catrules_encoded_item_label(const CatrulesEncoded *encoded,
                                           uint32_t item,
                                           char **out);

/**
 * # Safety
 * `encoded` must be NULL or a live handle, not used afterwards.
 */
void catrules_encoded_free(CatrulesEncoded *encoded);

/**
 * Links every pair of rows whose cosine similarity exceeds `epsilon`,
 * which must lie in (0, 1].
 *
 * # Safety
 * `encoded` must be a live handle; `out` must be writable.
 */
CatrulesStatus catrules_graph_build(const CatrulesEncoded *encoded,
                                    double epsilon,
                                    CatrulesGraph **out);

/**
 * # Safety
 * `graph` must be NULL or a live handle.
 */
uintptr_t catrules_graph_node_count(const CatrulesGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or a live handle.
 */
uintptr_t catrules_graph_edge_count(const CatrulesGraph *graph);

/**
 * Sum of all edge weights.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
double catrules_graph_total_weight(const CatrulesGraph *graph);

/**
 * # Safety
 * `graph` must be NULL or a live handle, not used afterwards.
 */
void catrules_graph_free(CatrulesGraph *graph);

/**
 * Deterministic Louvain community detection.
 *
 * # Safety
 * `graph` must be a live handle; `out` must be writable.
 */
CatrulesStatus catrules_louvain(const CatrulesGraph *graph, CatrulesPartition **out);

/**
 * Modularity of `partition` on `graph`. Fails on an edgeless graph.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
CatrulesStatus catrules_modularity(const CatrulesGraph *graph,
                                   const CatrulesPartition *partition,
                                   double *out);

/**
 * # Safety
 * `partition` must be NULL or a live handle.
 */
uintptr_t catrules_partition_community_count(const CatrulesPartition *partition);

/**
 * # Safety
 * `partition` must be a live handle; `out` must be writable.
 */
CatrulesStatus catrules_partition_community_of(const CatrulesPartition *partition,
                                               uintptr_t node,
                                               uintptr_t *out);

/**
 * # Safety
 * `partition` must be NULL or a live handle, not used afterwards.
 */
void catrules_partition_free(CatrulesPartition *partition);

/**
 * Ranks communities by strength (then size, then id) among those holding
 * at least `min_size_fraction` of the nodes and keeps the best `top_k`.
 * Up to `capacity` ids are written to `ids`; `out_len` receives the full
 * number selected.
 *
 * # Safety
 * Handles must be live; `ids` must be writable for `capacity` entries
 * (may be NULL when `capacity` is 0); `out_len` must be writable.
 */
CatrulesStatus catrules_select_communities(const CatrulesGraph *graph,
                                           const CatrulesPartition *partition,
                                           double min_size_fraction,
                                           uintptr_t top_k,
                                           uintptr_t *ids,
                                           uintptr_t capacity,
                                           uintptr_t *out_len);

/**
 * Mines association rules among the rows of one community.
 * `max_itemset_size` of 0 means unbounded.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
CatrulesStatus catrules_mine_community(const CatrulesEncoded *encoded,
                                       const CatrulesPartition *partition,
                                       uintptr_t community,
                                       double min_support,
                                       double min_confidence,
                                       uintptr_t max_itemset_size,
                                       CatrulesRules **out);

/**
 * # Safety
 * `rules` must be NULL or a live handle.
 */
uintptr_t catrules_rules_count(const CatrulesRules *rules);

/**
 * All rules as a JSON array of objects with `antecedent`, `consequent`,
 * `support`, `confidence`, `lift` and the matching item ids. `community`
 * is copied into each object. Free with [`catrules_string_free`].
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
CatrulesStatus catrules_rules_json(const CatrulesRules *rules,
                                   const CatrulesEncoded *encoded,
                                   uintptr_t community,
                                   char **out);

/**
 * Folds the single-consequent rules into one summary per consequent and
 * returns them as a JSON array, ranked by `rank_by` (`rule_count`,
 * `max_lift` or `max_confidence`; NULL means `rule_count`). Free with
 * [`catrules_string_free`].
 *
 * # Safety
 * Handles must be live; a non-NULL `rank_by` must be NUL-terminated;
 * `out` must be writable.
 */
CatrulesStatus catrules_rules_summaries_json(const CatrulesRules *rules,
                                             const CatrulesEncoded *encoded,
                                             uintptr_t community,
                                             const char *rank_by,
                                             char **out);

/**
 * # Safety
 * `rules` must be NULL or a live handle, not used afterwards.
 */
void catrules_rules_free(CatrulesRules *rules);

/**
 * Runs every stage from a TOML config file, writing all artifacts.
 * A non-NULL `output_dir` overrides the config's. When `report_json` is
 * non-NULL it receives the run report as JSON, to be freed with
 * [`catrules_string_free`].
 *
 * # Safety
 * `config_path` and a non-NULL `output_dir` must be NUL-terminated
 * strings; a non-NULL `report_json` must be writable.
 */
CatrulesStatus catrules_run_pipeline(const char *config_path,
                                     const char *output_dir,
                                     char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CATRULES_H */
