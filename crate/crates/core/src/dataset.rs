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

//! Categorical table ingestion, numeric binning and transaction encoding.
//!
//! A row becomes a [`Transaction`]: the set of `(column, value)` items it
//! carries, with item ids drawn from a shared [`Vocabulary`]. Cells are
//! trimmed; empty cells and cells equal to the missing-value sentinel carry
//! no item.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MISSING: &str = "NA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Ascending interval boundaries; present iff `kind` is numeric.
    pub bins: Option<Vec<f64>>,
}

impl ColumnSchema {
    pub fn categorical(name: impl Into<String>) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Categorical, bins: None }
    }

    pub fn numeric(name: impl Into<String>, bins: Vec<f64>) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Numeric, bins: Some(bins) }
    }

    fn validate(&self) -> Result<()> {
        match (self.kind, &self.bins) {
            (ColumnKind::Categorical, None) => Ok(()),
            (ColumnKind::Numeric, Some(bins)) => check_boundaries(bins),
            (ColumnKind::Categorical, Some(_)) => Err(Error::InvalidBins(format!(
                "categorical column `{}` cannot carry bins",
                self.name
            ))),
            (ColumnKind::Numeric, None) => Err(Error::InvalidBins(format!(
                "numeric column `{}` needs bin boundaries",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub missing: String,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions { delimiter: b',', missing: DEFAULT_MISSING.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    rows: Vec<Vec<String>>,
    missing: String,
}

impl Dataset {
    /// Builds a dataset from already-split rows. Cells are trimmed.
    pub fn from_rows(
        schema: Vec<ColumnSchema>,
        rows: Vec<Vec<String>>,
        missing: impl Into<String>,
    ) -> Result<Self> {
        check_unique_names(schema.iter().map(|c| c.name.as_str()))?;
        for column in &schema {
            column.validate()?;
        }
        let width = schema.len();
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != width {
                    // header is line 1
                    return Err(Error::RaggedRow {
                        line: i as u64 + 2,
                        expected: width,
                        found: row.len(),
                    });
                }
                Ok(row.into_iter().map(|c| c.trim().to_string()).collect())
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        let mut dataset = Dataset { schema: Vec::new(), rows, missing: missing.into() };
        // Binning happens after the raw table exists so numeric cells can be checked.
        let mut pending = Vec::new();
        for column in schema {
            if let Some(bins) = column.bins.clone() {
                pending.push((column.name.clone(), bins));
            }
            dataset.schema.push(ColumnSchema::categorical(column.name));
        }
        for (name, bins) in pending {
            dataset = bin_numeric(dataset, &name, &bins)?;
        }
        Ok(dataset)
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column_count(&self) -> usize {
        self.schema.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.schema.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn missing_sentinel(&self) -> &str {
        &self.missing
    }

    pub fn is_missing(&self, cell: &str) -> bool {
        cell.is_empty() || cell == self.missing
    }
}

fn check_unique_names<'a>(names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(Error::DuplicateColumn(name.to_string()));
        }
    }
    Ok(())
}

fn check_boundaries(boundaries: &[f64]) -> Result<()> {
    if boundaries.is_empty() {
        return Err(Error::InvalidBins("boundary list is empty".into()));
    }
    if boundaries.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidBins("boundaries must be finite".into()));
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidBins(format!(
            "boundaries must be strictly ascending: {boundaries:?}"
        )));
    }
    Ok(())
}

/// Reads a header-first CSV file. Without a schema every column is categorical.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: Option<&[ColumnSchema]>,
    options: &CsvOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema, options)
}

pub fn read_csv<R: Read>(
    reader: R,
    schema: Option<&[ColumnSchema]>,
    options: &CsvOptions,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header: Vec<String> =
        reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    check_unique_names(header.iter().map(String::as_str))?;

    let schema = match schema {
        Some(schema) => {
            let expected: Vec<String> = schema.iter().map(|c| c.name.clone()).collect();
            if expected != header {
                return Err(Error::SchemaMismatch { expected, found: header });
            }
            schema.to_vec()
        }
        None => header.iter().map(ColumnSchema::categorical).collect(),
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != header.len() {
            let line = record.position().map_or(0, |p| p.line());
            return Err(Error::RaggedRow { line, expected: header.len(), found: record.len() });
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    Dataset::from_rows(schema, rows, options.missing.clone())
}

/// Label of the half-open interval holding `value`; open ends read `min` / `max`.
pub fn interval_label(boundaries: &[f64], value: f64) -> String {
    // number of boundaries <= value
    let idx = boundaries.partition_point(|&b| b <= value);
    match idx {
        0 => format!("min-{}", boundaries[0]),
        i if i == boundaries.len() => format!("{}-max", boundaries[i - 1]),
        i => format!("{}-{}", boundaries[i - 1], boundaries[i]),
    }
}

/// Replaces every numeric cell of `column` by its interval label.
pub fn bin_numeric(mut dataset: Dataset, column: &str, boundaries: &[f64]) -> Result<Dataset> {
    let col = dataset
        .column_index(column)
        .ok_or_else(|| Error::UnknownColumn(column.to_string()))?;
    check_boundaries(boundaries)?;

    let missing = dataset.missing.clone();
    for (row_idx, row) in dataset.rows.iter_mut().enumerate() {
        let cell = &mut row[col];
        if cell.is_empty() || *cell == missing {
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
            column: column.to_string(),
            row: row_idx,
            value: cell.clone(),
        })?;
        if value.is_nan() {
            return Err(Error::NonNumeric {
                column: column.to_string(),
                row: row_idx,
                value: cell.clone(),
            });
        }
        *cell = interval_label(boundaries, value);
    }
    dataset.schema[col] = ColumnSchema::numeric(column, boundaries.to_vec());
    Ok(dataset)
}

/// Dense id of a `(column, value)` item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Item {
    pub column: usize,
    pub value: String,
}

/// Bijection between `(column, value)` pairs and dense item ids.
///
/// Ids are laid out column by column; within a column, values are numbered
/// in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    columns: Vec<String>,
    items: Vec<Item>,
    index: HashMap<(usize, String), ItemId>,
    ranges: Vec<Range<u32>>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its item list, which must already be in id order.
    pub fn from_items(columns: Vec<String>, items: Vec<Item>) -> Result<Self> {
        let mut ranges = vec![0..0; columns.len()];
        let mut index = HashMap::with_capacity(items.len());
        let mut last_column = 0;
        for (id, item) in items.iter().enumerate() {
            if item.column >= columns.len() {
                return Err(Error::Internal(format!(
                    "item {id} refers to column {} of {}",
                    item.column,
                    columns.len()
                )));
            }
            if item.column < last_column {
                return Err(Error::Internal(format!("item {id} breaks column-major id order")));
            }
            last_column = item.column;
            let id = id as u32;
            let range = &mut ranges[item.column];
            if range.start == range.end {
                *range = id..id;
            }
            range.end = id + 1;
            if index.insert((item.column, item.value.clone()), ItemId(id)).is_some() {
                return Err(Error::Internal(format!(
                    "duplicate item `{}={}`",
                    columns[item.column], item.value
                )));
            }
        }
        // empty columns get an empty range positioned where they would sit
        let mut next = 0;
        for range in &mut ranges {
            if range.start == range.end {
                *range = next..next;
            }
            next = range.end;
        }
        Ok(Vocabulary { columns, items, index, ranges })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.items[id.index()]
    }

    pub fn id_of(&self, column: usize, value: &str) -> Option<ItemId> {
        self.index.get(&(column, value.to_string())).copied()
    }

    pub fn column_range(&self, column: usize) -> Range<u32> {
        self.ranges[column].clone()
    }

    /// `column=value` rendering used in exported rules and summaries.
    pub fn label(&self, id: ItemId) -> String {
        let item = self.item(id);
        format!("{}={}", self.columns[item.column], item.value)
    }

    /// Row cells recovered from a transaction; `None` where the row had no item.
    pub fn decode(&self, transaction: &Transaction) -> Vec<Option<&str>> {
        let mut row = vec![None; self.columns.len()];
        for &id in &transaction.items {
            let item = self.item(id);
            row[item.column] = Some(item.value.as_str());
        }
        row
    }
}

/// One row as a sorted set of item ids, at most one per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub row_id: usize,
    pub items: Vec<ItemId>,
}

impl Transaction {
    pub fn new(row_id: usize, mut items: Vec<ItemId>) -> Self {
        items.sort_unstable();
        items.dedup();
        Transaction { row_id, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }
}

pub fn encode(dataset: &Dataset) -> (Vocabulary, Vec<Transaction>) {
    let columns = dataset.column_names();
    let mut items = Vec::new();
    let mut index = HashMap::new();
    let mut ranges = Vec::with_capacity(columns.len());

    for col in 0..dataset.column_count() {
        let start = items.len() as u32;
        for row in dataset.rows() {
            let cell = &row[col];
            if dataset.is_missing(cell) || index.contains_key(&(col, cell.clone())) {
                continue;
            }
            index.insert((col, cell.clone()), ItemId(items.len() as u32));
            items.push(Item { column: col, value: cell.clone() });
        }
        ranges.push(start..items.len() as u32);
    }

    let transactions = dataset
        .rows()
        .iter()
        .enumerate()
        .map(|(row_id, row)| {
            let ids = row
                .iter()
                .enumerate()
                .filter(|(_, cell)| !dataset.is_missing(cell))
                .map(|(col, cell)| index[&(col, cell.clone())])
                .collect();
            // column-major ids are already ascending
            Transaction { row_id, items: ids }
        })
        .collect();

    (Vocabulary { columns, items, index, ranges }, transactions)
}
