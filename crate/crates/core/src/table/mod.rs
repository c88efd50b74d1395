//! Tables: typed cell grids, ingestion, dtype inference, rule-based cleaning
//! and row snapshots.

mod clean;
mod csv_io;
mod infer;
mod json_io;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{
    clean, CleanAction, CleanReport, HorizontalPolicy, RejectReason, RuleEvent, RuleId, RuleSet,
    Verdict,
};
pub use csv_io::{parse_csv, to_csv};
pub use infer::{infer_dtypes, parse_datetime};
pub use json_io::{from_json, to_json};
pub use snapshot::{sample_pair_indices, sample_snapshot_pair, PairMode, Snapshot, SnapshotPair};

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("malformed CSV: {0}")]
    MalformedCsv(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid JSON table: {0}")]
    InvalidJson(String),
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("column {0} has an empty name")]
    EmptyColumnName(usize),
    #[error("cell ({row}, {col}) does not match dtype {dtype}")]
    TypeMismatch {
        row: usize,
        col: usize,
        dtype: DType,
    },
    #[error("table has no rows")]
    NoRows,
    #[error("table has no columns")]
    NoColumns,
    #[error("invalid sample size {requested} for {available} rows")]
    InvalidSampleSize { requested: usize, available: usize },
}

/// Field values read as Missing.
pub const MISSING_MARKERS: [&str; 6] = ["", "NaN", "nan", "null", "NULL", "-"];

pub fn is_missing_marker(s: &str) -> bool {
    MISSING_MARKERS.contains(&s.trim())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Int,
    Float,
    Text,
    Bool,
    Datetime,
}

impl DType {
    pub fn as_str(self) -> &'static str {
        match self {
            DType::Int => "int",
            DType::Float => "float",
            DType::Text => "text",
            DType::Bool => "bool",
            DType::Datetime => "datetime",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "int" => DType::Int,
            "float" => DType::Float,
            "text" => DType::Text,
            "bool" => DType::Bool,
            "datetime" => DType::Datetime,
            other => return Err(format!("unknown dtype {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub dtype: DType,
    pub is_primary_key: bool,
}

impl ColumnMeta {
    pub fn text(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            dtype: DType::Text,
            is_primary_key: false,
        }
    }

    pub fn new(name: impl Into<String>, dtype: DType, is_primary_key: bool) -> Self {
        Self {
            name: name.into(),
            dtype,
            is_primary_key,
        }
    }
}

/// A typed scalar or Missing. Datetimes keep their validated ISO-8601 text.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Datetime(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    /// Canonical text: integers without a decimal point, floats in shortest
    /// round-trip form, Missing as the empty string.
    pub fn render(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:?}"),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) | Cell::Datetime(s) => s.clone(),
        }
    }

    /// Parses `text` under `dtype`. Missing markers yield Missing.
    pub fn parse_as(text: &str, dtype: DType) -> Option<Cell> {
        if is_missing_marker(text) {
            return Some(Cell::Missing);
        }
        match dtype {
            DType::Text => Some(Cell::Text(text.to_string())),
            DType::Bool => match text {
                "true" => Some(Cell::Bool(true)),
                "false" => Some(Cell::Bool(false)),
                _ => None,
            },
            DType::Int => text.parse::<i64>().ok().map(Cell::Int),
            DType::Float => text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Cell::Float),
            DType::Datetime => parse_datetime(text).then(|| Cell::Datetime(text.to_string())),
        }
    }

    fn matches(&self, dtype: DType) -> bool {
        match (self, dtype) {
            (Cell::Missing, _) => true,
            (Cell::Int(_), DType::Int)
            | (Cell::Bool(_), DType::Bool)
            | (Cell::Text(_), DType::Text) => true,
            (Cell::Float(v), DType::Float) => v.is_finite(),
            (Cell::Datetime(s), DType::Datetime) => parse_datetime(s),
            _ => false,
        }
    }
}

/// A named, typed, rectangular grid of cells stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    columns: Vec<ColumnMeta>,
    cells: Vec<Cell>,
    n_rows: usize,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<ColumnMeta>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, TableError> {
        let n = columns.len();
        if n == 0 {
            return Err(TableError::NoColumns);
        }
        if rows.is_empty() {
            return Err(TableError::NoRows);
        }
        if let Some(j) = columns.iter().position(|c| c.name.trim().is_empty()) {
            return Err(TableError::EmptyColumnName(j));
        }
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(TableError::Ragged {
                    row: i,
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, cell) in row.iter().enumerate() {
                if !cell.matches(columns[j].dtype) {
                    return Err(TableError::TypeMismatch {
                        row: i,
                        col: j,
                        dtype: columns[j].dtype,
                    });
                }
            }
            cells.extend(row);
        }
        Ok(Self {
            name: name.into(),
            columns,
            cells,
            n_rows,
        })
    }

    /// Builds an all-text table from raw strings; missing markers become
    /// Missing.
    pub fn from_text(
        name: impl Into<String>,
        headers: &[&str],
        rows: &[Vec<&str>],
    ) -> Result<Self, TableError> {
        let columns = headers.iter().map(|h| ColumnMeta::text(*h)).collect();
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| text_cell(s)).collect())
            .collect();
        Self::new(name, columns, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    /// Marks column `j` as primary key (or not).
    pub fn set_primary_key(&mut self, j: usize, flag: bool) {
        self.columns[j].is_primary_key = flag;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let n = self.n_cols();
        &self.cells[row * n..(row + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cell]> {
        self.cells.chunks(self.n_cols())
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &Cell> {
        self.rows().map(move |r| &r[col])
    }

    /// New table holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Table, TableError> {
        let grid = rows.iter().map(|&i| self.row(i).to_vec()).collect();
        Table::new(self.name.clone(), self.columns.clone(), grid)
    }

    /// New table holding the given columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Table, TableError> {
        let columns = cols.iter().map(|&j| self.columns[j].clone()).collect();
        let grid = self
            .rows()
            .map(|r| cols.iter().map(|&j| r[j].clone()).collect())
            .collect();
        Table::new(self.name.clone(), columns, grid)
    }

    /// Rendered text grid, row-major.
    pub fn rendered_rows(&self) -> Vec<Vec<String>> {
        self.rows()
            .map(|r| r.iter().map(Cell::render).collect())
            .collect()
    }

    /// Rows reordered by their rendered content; row-permuted copies of a
    /// table share the same canonical form.
    pub fn canonical_row_order(&self) -> Table {
        // Missing and empty text render alike, so missingness joins the key.
        let rendered: Vec<Vec<(String, bool)>> = self
            .rows()
            .map(|r| r.iter().map(|c| (c.render(), c.is_missing())).collect())
            .collect();
        let mut order: Vec<usize> = (0..self.n_rows).collect();
        order.sort_by(|&a, &b| rendered[a].cmp(&rendered[b]));
        self.select_rows(&order).expect("indices in range")
    }
}

fn text_cell(s: &str) -> Cell {
    if is_missing_marker(s) {
        Cell::Missing
    } else {
        Cell::Text(s.to_string())
    }
}
