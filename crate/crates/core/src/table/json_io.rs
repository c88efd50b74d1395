use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Cell, ColumnMeta, DType, Table, TableError};

#[derive(Serialize, Deserialize)]
struct JsonColumn {
    name: String,
    dtype: DType,
    primary_key: bool,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    name: String,
    columns: Vec<JsonColumn>,
    rows: Vec<Vec<Value>>,
}

/// Canonical JSON table text (compact, trailing newline).
pub fn to_json(table: &Table) -> String {
    let doc = JsonTable {
        name: table.name().to_string(),
        columns: table
            .columns()
            .iter()
            .map(|c| JsonColumn {
                name: c.name.clone(),
                dtype: c.dtype,
                primary_key: c.is_primary_key,
            })
            .collect(),
        rows: table
            .rows()
            .map(|r| r.iter().map(cell_to_value).collect())
            .collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("table serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Table, TableError> {
    let doc: JsonTable =
        serde_json::from_str(text).map_err(|e| TableError::InvalidJson(e.to_string()))?;
    let columns: Vec<ColumnMeta> = doc
        .columns
        .into_iter()
        .map(|c| ColumnMeta::new(c.name, c.dtype, c.primary_key))
        .collect();
    let mut rows = Vec::with_capacity(doc.rows.len());
    for (i, row) in doc.rows.into_iter().enumerate() {
        if row.len() != columns.len() {
            return Err(TableError::Ragged {
                row: i,
                expected: columns.len(),
                found: row.len(),
            });
        }
        let cells = row
            .into_iter()
            .zip(&columns)
            .enumerate()
            .map(|(j, (v, c))| {
                value_to_cell(v, c.dtype).ok_or(TableError::TypeMismatch {
                    row: i,
                    col: j,
                    dtype: c.dtype,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(cells);
    }
    Table::new(doc.name, columns, rows)
}

fn cell_to_value(cell: &Cell) -> Value {
    match cell {
        Cell::Missing => Value::Null,
        Cell::Int(v) => Value::from(*v),
        Cell::Float(v) => Value::from(*v),
        Cell::Bool(v) => Value::Bool(*v),
        Cell::Text(s) | Cell::Datetime(s) => Value::String(s.clone()),
    }
}

fn value_to_cell(v: Value, dtype: DType) -> Option<Cell> {
    match (v, dtype) {
        (Value::Null, _) => Some(Cell::Missing),
        (Value::Number(n), DType::Int) => n.as_i64().map(Cell::Int),
        (Value::Number(n), DType::Float) => n.as_f64().filter(|f| f.is_finite()).map(Cell::Float),
        (Value::Bool(b), DType::Bool) => Some(Cell::Bool(b)),
        (Value::String(s), DType::Text) => Some(Cell::Text(s)),
        (Value::String(s), DType::Datetime) => Cell::parse_as(&s, DType::Datetime),
        _ => None,
    }
}
