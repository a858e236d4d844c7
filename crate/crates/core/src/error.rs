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

use std::fmt;
use std::io;
use std::path::PathBuf;

use crate::dataset::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure classes. Each maps onto one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad flags, bad config values, unattainable selection criteria.
    Usage,
    /// Unreadable or malformed input data and artifacts.
    Data,
    /// A broken internal invariant.
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("header does not match schema: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("column `{column}` row {row}: `{value}` is not numeric")]
    NonNumeric { column: String, row: usize, value: String },

    #[error("invalid bin boundaries: {0}")]
    InvalidBins(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("transaction {0} has no items; similarity is undefined")]
    EmptyTransaction(usize),

    #[error("graph has no edges; modularity is undefined")]
    EdgelessGraph,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error(
        "no community has at least {floor} nodes (min_size_fraction = {fraction}); \
         lower min_size_fraction"
    )]
    NoCommunityPassesFloor { floor: usize, fraction: f64 },

    #[error("community member list is empty")]
    EmptyCommunity,

    #[error("row id {0} is out of range")]
    RowOutOfRange(usize),

    #[error("support of itemset {0:?} is missing from the frequent itemset table")]
    MissingSupport(Vec<ItemId>),

    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn artifact(path: impl Into<PathBuf>, message: impl fmt::Display) -> Self {
        Error::Artifact { path: path.into(), message: message.to_string() }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::NoCommunityPassesFloor { .. } | Error::UnknownColumn(_) => {
                ErrorKind::Usage
            }
            Error::MissingSupport(_) | Error::Internal(_) => ErrorKind::Internal,
            _ => ErrorKind::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }
}
