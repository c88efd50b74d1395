//! Hybrid table representation: a schema string with one `<col_emb>` slot
//! per column, and splicing of column embeddings into a token-embedding
//! sequence at those slots.
//!
//! Canonical grammar:
//!
//! ```text
//! table NAME, columns=[COL(, COL)*]
//! COL := NAME.COLNAME(<col_emb>|DTYPE|PK)|[V(,V)*]
//! PK  := "primary_key" | ""
//! ```
//!
//! Names escape `\ , . ( ) | [ ] <` and values escape `\ , | [ ] <` with a
//! backslash, so no cell or name can forge a slot marker.

mod grammar;
mod splice;
mod variants;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::Table;

pub use grammar::{parse, ParsedColumn, ParsedRepr};
pub use splice::{splice, tokenize, Origin, SplicedSequence, TokenEmbedder, Unit, UnitKind};
pub use variants::{serialize_variant, variant_ids, Layout, Variant, CANONICAL};

pub const SLOT: &str = "<col_emb>";
pub const TAB_OPEN: &str = "<tab>";
pub const TAB_CLOSE: &str = "</tab>";
pub const PRIMARY_KEY: &str = "primary_key";
pub const DEFAULT_VALUES_PER_COL: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum HybridError {
    #[error("grammar error at offset {offset}: {message}")]
    Grammar { offset: usize, message: String },
    #[error("column embeddings have width {found}, token embedder has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("representation has {slots} slots but {columns} column embeddings were given")]
    SlotCountMismatch { slots: usize, columns: usize },
    #[error("unknown serializer variant {0:?}")]
    UnknownVariant(String),
}

/// One `<col_emb>` occurrence: character offset into the text and the
/// column it stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub offset: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridRepr {
    pub table: String,
    pub text: String,
    pub slots: Vec<Slot>,
}

impl HybridRepr {
    /// The representation enclosed in `<tab>` ... `</tab>`, slots shifted.
    pub fn wrapped(&self) -> HybridRepr {
        let shift = TAB_OPEN.chars().count();
        HybridRepr {
            table: self.table.clone(),
            text: format!("{TAB_OPEN}{}{TAB_CLOSE}", self.text),
            slots: self
                .slots
                .iter()
                .map(|s| Slot {
                    offset: s.offset + shift,
                    column: s.column,
                })
                .collect(),
        }
    }
}

pub(crate) fn escape(s: &str, special: &[char]) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        if c == '\\' || special.contains(&c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

pub(crate) const NAME_SPECIAL: [char; 8] = [',', '.', '(', ')', '|', '[', ']', '<'];
pub(crate) const VALUE_SPECIAL: [char; 5] = [',', '|', '[', ']', '<'];

pub fn escape_name(s: &str) -> String {
    escape(s, &NAME_SPECIAL)
}

pub fn escape_value(s: &str) -> String {
    escape(s, &VALUE_SPECIAL)
}

/// First `count` non-Missing rendered values of column `j`, in row order.
/// Values rendering to the empty string are skipped like Missing.
pub fn value_head(t: &Table, j: usize, count: usize) -> Vec<String> {
    t.column(j)
        .filter(|c| !c.is_missing())
        .map(|c| c.render())
        .filter(|s| !s.is_empty())
        .take(count)
        .collect()
}

/// Incrementally built text that tracks its length in characters.
pub(crate) struct Builder {
    text: String,
    chars: usize,
    slots: Vec<Slot>,
}

impl Builder {
    pub(crate) fn new() -> Self {
        Self {
            text: String::new(),
            chars: 0,
            slots: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.chars += s.chars().count();
    }

    pub(crate) fn slot(&mut self, column: usize) {
        self.slots.push(Slot {
            offset: self.chars,
            column,
        });
        self.push(SLOT);
    }

    pub(crate) fn finish(self, table: &str) -> HybridRepr {
        HybridRepr {
            table: table.to_string(),
            text: self.text,
            slots: self.slots,
        }
    }
}

/// Canonical serialization.
pub fn serialize(t: &Table, values_per_col: usize) -> HybridRepr {
    let name = escape_name(t.name());
    let mut b = Builder::new();
    b.push("table ");
    b.push(&name);
    b.push(", columns=[");
    for (j, col) in t.columns().iter().enumerate() {
        if j > 0 {
            b.push(", ");
        }
        b.push(&name);
        b.push(".");
        b.push(&escape_name(&col.name));
        b.push("(");
        b.slot(j);
        b.push("|");
        b.push(col.dtype.as_str());
        b.push("|");
        if col.is_primary_key {
            b.push(PRIMARY_KEY);
        }
        b.push(")|[");
        let values: Vec<String> = value_head(t, j, values_per_col)
            .iter()
            .map(|v| escape_value(v))
            .collect();
        b.push(&values.join(","));
        b.push("]");
    }
    b.push("]");
    b.finish(t.name())
}

/// Schema and value heads as recovered by [`parse`], for comparing a table
/// against a parsed representation.
pub fn expected_parse(t: &Table, values_per_col: usize) -> (String, Vec<ParsedColumn>) {
    let cols = t
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| ParsedColumn {
            name: c.name.clone(),
            dtype: c.dtype,
            primary_key: c.is_primary_key,
            values: value_head(t, j, values_per_col),
        })
        .collect();
    (t.name().to_string(), cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::FeatureHashEmbedder;
    use crate::numerics::Tensor;
    use crate::table::{Cell, ColumnMeta, DType};

    fn single_pk() -> Table {
        Table::new(
            "t",
            vec![ColumnMeta::new("a", DType::Int, true)],
            vec![vec![Cell::Int(1)], vec![Cell::Int(2)]],
        )
        .unwrap()
    }

    #[test]
    fn single_column_golden() {
        let r = serialize(&single_pk(), DEFAULT_VALUES_PER_COL);
        assert_eq!(
            r.text,
            "table t, columns=[t.a(<col_emb>|int|primary_key)|[1,2]]"
        );
        assert_eq!(
            r.slots,
            vec![Slot {
                offset: 22,
                column: 0
            }]
        );
        assert_eq!(
            serialize(&single_pk(), 0).text,
            "table t, columns=[t.a(<col_emb>|int|primary_key)|[]]"
        );
    }

    #[test]
    fn comma_fixture_golden_and_round_trip() {
        let t = Table::new(
            "people",
            vec![
                ColumnMeta::new("id", DType::Int, true),
                ColumnMeta::new("name", DType::Text, false),
            ],
            vec![
                vec![Cell::Int(7), Cell::Text("Doe, Jane".into())],
                vec![Cell::Int(8), Cell::Missing],
                vec![Cell::Int(9), Cell::Text("a|b[c]".into())],
            ],
        )
        .unwrap();
        let r = serialize(&t, 3);
        assert_eq!(
            r.text,
            "table people, columns=[people.id(<col_emb>|int|primary_key)|[7,8,9], \
             people.name(<col_emb>|text|)|[Doe\\, Jane,a\\|b\\[c\\]]]"
        );
        let parsed = parse(&r.text).unwrap();
        let (name, cols) = expected_parse(&t, 3);
        assert_eq!(parsed.table, name);
        assert_eq!(parsed.columns, cols);
        assert_eq!(parsed.slots, r.slots);
    }

    #[test]
    fn missing_paren_reports_offset() {
        let text = "table t, columns=[t.a(<col_emb>|int|primary_key|[1,2]]";
        let at = text.find("primary_key").unwrap() + PRIMARY_KEY.len();
        match parse(text) {
            Err(HybridError::Grammar { offset, .. }) => assert_eq!(offset, at),
            other => panic!("expected grammar error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_bad_escapes_and_trailing_text() {
        assert!(parse("table t, columns=[t.a(<col_emb>|int|)|[\\q]]").is_err());
        assert!(parse("table t, columns=[t.a(<col_emb>|int|)|[1]] ").is_err());
        assert!(parse("table t, columns=[u.a(<col_emb>|int|)|[1]]").is_err());
        assert!(parse("table t, columns=[t.a(<col_emb>|float64|)|[1]]").is_err());
    }

    #[test]
    fn escaped_names_round_trip() {
        let t = Table::from_text("a.b, c", &["x(1)", "y\\z"], &[vec!["[", "<tab>"]]).unwrap();
        let r = serialize(&t, 3);
        let parsed = parse(&r.text).unwrap();
        assert_eq!((parsed.table, parsed.columns), expected_parse(&t, 3));
    }

    fn repr_with_units(n_text: usize, n_slots: usize) -> HybridRepr {
        let mut b = Builder::new();
        for i in 0..n_text {
            b.push(&format!("w{i} "));
        }
        for j in 0..n_slots {
            b.slot(j);
        }
        b.finish("t")
    }

    #[test]
    fn splice_length_arithmetic() {
        let phi = FeatureHashEmbedder::new(6, 0);
        let repr = repr_with_units(18, 2);
        assert_eq!(tokenize(&repr.text).len(), 20);
        let c = Tensor::full(&[2, 4, 6], 0.5);
        let s = splice(&repr, &phi, &c).unwrap();
        assert_eq!(s.len(), 26);
        assert_eq!(
            s.origin[18],
            Origin::ColumnEmbedding {
                column: 0,
                query: 0
            }
        );
        assert_eq!(
            s.origin[25],
            Origin::ColumnEmbedding {
                column: 1,
                query: 3
            }
        );
        let k1 = splice(&repr, &phi, &Tensor::full(&[2, 1, 6], 0.5)).unwrap();
        assert_eq!(k1.len(), 20);
    }

    #[test]
    fn splice_contract_errors() {
        let phi = FeatureHashEmbedder::new(6, 0);
        let repr = serialize(&single_pk(), 3);
        assert_eq!(
            splice(&repr, &phi, &Tensor::zeros(&[2, 1, 6])).unwrap_err(),
            HybridError::SlotCountMismatch {
                slots: 1,
                columns: 2
            }
        );
        assert_eq!(
            splice(&repr, &phi, &Tensor::zeros(&[1, 1, 5])).unwrap_err(),
            HybridError::DimensionMismatch {
                expected: 6,
                found: 5
            }
        );
    }

    #[test]
    fn wrapped_shifts_slots() {
        let r = serialize(&single_pk(), 3).wrapped();
        assert!(r.text.starts_with("<tab>table t"));
        assert!(r.text.ends_with("]]</tab>"));
        let at: usize = r
            .text
            .char_indices()
            .position(|(i, _)| r.text[i..].starts_with(SLOT))
            .unwrap();
        assert_eq!(r.slots[0].offset, at);
        let units = tokenize(&r.text);
        assert_eq!(units.first().unwrap().kind, UnitKind::TabOpen);
        assert_eq!(units.last().unwrap().kind, UnitKind::TabClose);
    }
}
