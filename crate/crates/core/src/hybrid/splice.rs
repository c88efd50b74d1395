//! Unit tokenization and column-embedding splicing.

use super::{HybridError, HybridRepr, SLOT, TAB_CLOSE, TAB_OPEN};
use crate::encoder::CellEmbedder;
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    Text,
    Slot,
    TabOpen,
    TabClose,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub text: String,
    pub kind: UnitKind,
    /// Character offset of the unit in the source text.
    pub offset: usize,
}

/// Splits text into units: the markers `<col_emb>`, `<tab>` and `</tab>`,
/// backslash escape pairs, alphanumeric runs and single other characters.
/// Whitespace separates units and is dropped. An escaped `<` never starts
/// a marker.
pub fn tokenize(text: &str) -> Vec<Unit> {
    let chars: Vec<char> = text.chars().collect();
    let mut units = Vec::new();
    let mut i = 0;
    let starts = |i: usize, lit: &str| {
        lit.chars()
            .enumerate()
            .all(|(k, c)| chars.get(i + k) == Some(&c))
    };
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let kind = if c.is_whitespace() {
            i += 1;
            continue;
        } else if c == '\\' && i + 1 < chars.len() {
            i += 2;
            UnitKind::Text
        } else if let Some((lit, kind)) = [
            (SLOT, UnitKind::Slot),
            (TAB_OPEN, UnitKind::TabOpen),
            (TAB_CLOSE, UnitKind::TabClose),
        ]
        .into_iter()
        .find(|(lit, _)| starts(i, lit))
        {
            i += lit.chars().count();
            kind
        } else if c.is_alphanumeric() {
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            UnitKind::Text
        } else {
            i += 1;
            UnitKind::Text
        };
        units.push(Unit {
            text: chars[start..i].iter().collect(),
            kind,
            offset: start,
        });
    }
    units
}

/// Maps a text unit to an embedding row.
pub trait TokenEmbedder {
    fn dim(&self) -> usize;
    fn embed_unit(&self, unit: &str) -> Vec<f64>;
}

impl<T: CellEmbedder> TokenEmbedder for T {
    fn dim(&self) -> usize {
        CellEmbedder::dim(self)
    }

    fn embed_unit(&self, unit: &str) -> Vec<f64> {
        self.embed(unit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// Index into the unit sequence of the source text.
    TextToken(usize),
    ColumnEmbedding {
        column: usize,
        query: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplicedSequence {
    pub rows: Vec<Vec<f64>>,
    pub origin: Vec<Origin>,
}

impl SplicedSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Replaces each `<col_emb>` unit by the `k` rows of its column in `c`
/// (`[n, k, d']`, query order); every other unit is embedded as text.
pub fn splice(
    repr: &HybridRepr,
    embedder: &dyn TokenEmbedder,
    c: &Tensor,
) -> Result<SplicedSequence, HybridError> {
    let units = tokenize(&repr.text);
    let slots: Vec<usize> = units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.kind == UnitKind::Slot)
        .map(|(i, _)| i)
        .collect();
    let n = repr.slots.len();
    if slots.len() != n {
        return Err(HybridError::SlotCountMismatch {
            slots: slots.len(),
            columns: n,
        });
    }
    let shape = c.shape();
    if shape.len() != 3 || shape[0] != n {
        return Err(HybridError::SlotCountMismatch {
            slots: n,
            columns: shape[0],
        });
    }
    let (k, d) = (shape[1], shape[2]);
    if d != embedder.dim() {
        return Err(HybridError::DimensionMismatch {
            expected: embedder.dim(),
            found: d,
        });
    }
    let mut out = SplicedSequence {
        rows: Vec::with_capacity(units.len() - n + n * k),
        origin: Vec::with_capacity(units.len() - n + n * k),
    };
    let mut next_slot = 0;
    for (i, unit) in units.iter().enumerate() {
        if unit.kind == UnitKind::Slot {
            let column = repr.slots[next_slot].column;
            next_slot += 1;
            if column >= n {
                return Err(HybridError::SlotCountMismatch {
                    slots: n,
                    columns: column + 1,
                });
            }
            for q in 0..k {
                let start = (column * k + q) * d;
                out.rows.push(c.data()[start..start + d].to_vec());
                out.origin
                    .push(Origin::ColumnEmbedding { column, query: q });
            }
        } else {
            out.rows.push(embedder.embed_unit(&unit.text));
            out.origin.push(Origin::TextToken(i));
        }
    }
    assert_eq!(
        out.len(),
        units.len() - n + n * k,
        "splice length invariant"
    );
    Ok(out)
}
