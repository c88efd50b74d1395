//! Random table generators shared by the integration tests.

#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use tabenc::table::{Cell, ColumnMeta, DType, Table};

/// Characters that exercise the escaping rules of every serializer.
const HOSTILE: &[char] = &[
    ',', '.', '(', ')', '|', '[', ']', '<', '>', '\\', '/', '"', '\'', '{', '}', ':', '_', '-',
    ' ', 'é', '中', '\t',
];
const PLAIN: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'k', 'm', 'q', 'x', 'z', 'A', 'Q', '0', '1', '7', '9',
];

pub fn random_string<R: Rng>(rng: &mut R, max_len: usize, hostile: bool) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| {
            if hostile && rng.random_bool(0.35) {
                *HOSTILE.choose(rng).unwrap()
            } else {
                *PLAIN.choose(rng).unwrap()
            }
        })
        .collect()
}

fn random_name<R: Rng>(rng: &mut R, hostile: bool) -> String {
    loop {
        let s = random_string(rng, 8, hostile);
        if !s.trim().is_empty() {
            return s;
        }
    }
}

fn random_cell<R: Rng>(rng: &mut R, dtype: DType, hostile: bool) -> Cell {
    if rng.random_bool(0.1) {
        return Cell::Missing;
    }
    match dtype {
        DType::Int => Cell::Int(rng.random_range(-10_000..10_000)),
        DType::Float => Cell::Float(rng.random_range(-1e4..1e4)),
        DType::Bool => Cell::Bool(rng.random_bool(0.5)),
        DType::Datetime => Cell::Datetime(format!(
            "{}-{:02}-{:02}",
            rng.random_range(1990..2030),
            rng.random_range(1..=12),
            rng.random_range(1..=28)
        )),
        DType::Text => Cell::Text(random_string(rng, 12, hostile)),
    }
}

/// A table with `1..=max_rows` rows and `1..=max_cols` columns of mixed
/// dtypes. With `hostile`, names and text cells draw from characters the
/// grammar must escape.
pub fn random_table<R: Rng>(rng: &mut R, max_rows: usize, max_cols: usize, hostile: bool) -> Table {
    let (m, n) = (
        rng.random_range(1..=max_rows),
        rng.random_range(1..=max_cols),
    );
    let dtypes = [
        DType::Int,
        DType::Float,
        DType::Text,
        DType::Bool,
        DType::Datetime,
    ];
    let columns: Vec<ColumnMeta> = (0..n)
        .map(|_| {
            ColumnMeta::new(
                random_name(rng, hostile),
                *dtypes.choose(rng).unwrap(),
                rng.random_bool(0.2),
            )
        })
        .collect();
    let rows = (0..m)
        .map(|_| {
            columns
                .iter()
                .map(|c| random_cell(rng, c.dtype, hostile))
                .collect()
        })
        .collect();
    Table::new(random_name(rng, hostile), columns, rows)
        .expect("generated cells match their dtypes")
}

/// Builds a text table and infers dtypes, as ingestion would.
pub fn grid(name: &str, headers: &[&str], rows: &[Vec<String>]) -> Table {
    let rows: Vec<Vec<&str>> = rows
        .iter()
        .map(|r| r.iter().map(String::as_str).collect())
        .collect();
    tabenc::table::infer_dtypes(&Table::from_text(name, headers, &rows).unwrap())
}
