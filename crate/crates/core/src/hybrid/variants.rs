//! Alternate layouts of the table description. All share the slot
//! contract: exactly one `<col_emb>` per column, in column order.

use super::{escape, serialize, value_head, Builder, HybridError, HybridRepr, PRIMARY_KEY};
use crate::table::Table;

pub const CANONICAL: &str = "canonical";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Markdown,
    Json,
    KeyValue,
}

impl Layout {
    const ALL: [Layout; 3] = [Layout::Markdown, Layout::Json, Layout::KeyValue];

    fn as_str(self) -> &'static str {
        match self {
            Layout::Markdown => "markdown",
            Layout::Json => "json",
            Layout::KeyValue => "kv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub layout: Layout,
    pub dtype: bool,
    pub values: bool,
    pub primary_key: bool,
}

impl Variant {
    /// `layout` followed by `+dtype`, `+values`, `+pk` for enabled fields.
    pub fn id(&self) -> String {
        let mut id = self.layout.as_str().to_string();
        for (on, tag) in [
            (self.dtype, "+dtype"),
            (self.values, "+values"),
            (self.primary_key, "+pk"),
        ] {
            if on {
                id.push_str(tag);
            }
        }
        id
    }

    pub fn all() -> Vec<Variant> {
        let mut out = Vec::with_capacity(24);
        for layout in Layout::ALL {
            for bits in 0..8u8 {
                out.push(Variant {
                    layout,
                    dtype: bits & 1 != 0,
                    values: bits & 2 != 0,
                    primary_key: bits & 4 != 0,
                });
            }
        }
        out
    }

    pub fn from_id(id: &str) -> Option<Variant> {
        Variant::all().into_iter().find(|v| v.id() == id)
    }

    pub fn serialize(&self, t: &Table, values_per_col: usize) -> HybridRepr {
        match self.layout {
            Layout::Markdown => markdown(t, self, values_per_col),
            Layout::Json => json(t, self, values_per_col),
            Layout::KeyValue => key_value(t, self, values_per_col),
        }
    }
}

/// Ids of the 24 alternate serializers.
pub fn variant_ids() -> Vec<String> {
    Variant::all().iter().map(Variant::id).collect()
}

/// Serializes with the named variant or with the canonical grammar.
pub fn serialize_variant(
    t: &Table,
    id: &str,
    values_per_col: usize,
) -> Result<HybridRepr, HybridError> {
    if id == CANONICAL {
        return Ok(serialize(t, values_per_col));
    }
    Variant::from_id(id)
        .map(|v| v.serialize(t, values_per_col))
        .ok_or_else(|| HybridError::UnknownVariant(id.to_string()))
}

fn md(s: &str) -> String {
    escape(s, &['|', '<', '\n'])
}

fn markdown(t: &Table, v: &Variant, vpc: usize) -> HybridRepr {
    let mut b = Builder::new();
    b.push(&format!("table: {}\n| column | embedding |", md(t.name())));
    let mut rule = String::from("| --- | --- |");
    for (on, head) in [
        (v.dtype, "dtype"),
        (v.primary_key, PRIMARY_KEY),
        (v.values, "values"),
    ] {
        if on {
            b.push(&format!(" {head} |"));
            rule.push_str(" --- |");
        }
    }
    b.push("\n");
    b.push(&rule);
    for (j, col) in t.columns().iter().enumerate() {
        b.push(&format!("\n| {} | ", md(&col.name)));
        b.slot(j);
        b.push(" |");
        if v.dtype {
            b.push(&format!(" {} |", col.dtype));
        }
        if v.primary_key {
            b.push(&format!(
                " {} |",
                if col.is_primary_key { "yes" } else { "no" }
            ));
        }
        if v.values {
            let vals: Vec<String> = value_head(t, j, vpc).iter().map(|s| md(s)).collect();
            b.push(&format!(" {} |", vals.join(", ")));
        }
    }
    b.finish(t.name())
}

/// JSON string literal with `<` written as `\u003c`.
fn js(s: &str) -> String {
    serde_json::to_string(s)
        .expect("strings always serialize")
        .replace('<', "\\u003c")
}

fn json(t: &Table, v: &Variant, vpc: usize) -> HybridRepr {
    let mut b = Builder::new();
    b.push(&format!("{{\"table\":{},\"columns\":[", js(t.name())));
    for (j, col) in t.columns().iter().enumerate() {
        if j > 0 {
            b.push(",");
        }
        b.push(&format!("{{\"name\":{},\"embedding\":\"", js(&col.name)));
        b.slot(j);
        b.push("\"");
        if v.dtype {
            b.push(&format!(",\"dtype\":\"{}\"", col.dtype));
        }
        if v.primary_key {
            b.push(&format!(",\"primary_key\":{}", col.is_primary_key));
        }
        if v.values {
            let vals: Vec<String> = value_head(t, j, vpc).iter().map(|s| js(s)).collect();
            b.push(&format!(",\"values\":[{}]", vals.join(",")));
        }
        b.push("}");
    }
    b.push("]}");
    b.finish(t.name())
}

fn kv(s: &str) -> String {
    escape(s, &[';', '=', ',', '<', '\n'])
}

fn key_value(t: &Table, v: &Variant, vpc: usize) -> HybridRepr {
    let mut b = Builder::new();
    b.push(&format!("table={}", kv(t.name())));
    for (j, col) in t.columns().iter().enumerate() {
        b.push(&format!("\ncolumn={}; embedding=", kv(&col.name)));
        b.slot(j);
        if v.dtype {
            b.push(&format!("; dtype={}", col.dtype));
        }
        if v.primary_key {
            b.push(&format!("; primary_key={}", col.is_primary_key));
        }
        if v.values {
            let vals: Vec<String> = value_head(t, j, vpc).iter().map(|s| kv(s)).collect();
            b.push(&format!("; values={}", vals.join(", ")));
        }
    }
    b.finish(t.name())
}
