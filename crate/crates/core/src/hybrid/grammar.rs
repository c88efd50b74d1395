//! Parser for the canonical grammar, the inverse of `serialize`.

use serde::{Deserialize, Serialize};

use super::{HybridError, Slot, NAME_SPECIAL, PRIMARY_KEY, SLOT, VALUE_SPECIAL};
use crate::table::DType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedColumn {
    pub name: String,
    pub dtype: DType,
    pub primary_key: bool,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedRepr {
    pub table: String,
    pub columns: Vec<ParsedColumn>,
    pub slots: Vec<Slot>,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, HybridError> {
        Err(HybridError::Grammar {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos == self.chars.len()
    }

    fn starts_with(&self, lit: &str) -> bool {
        lit.chars()
            .enumerate()
            .all(|(k, c)| self.chars.get(self.pos + k) == Some(&c))
    }

    /// Consumes `lit`, or fails at the first character that differs.
    fn expect(&mut self, lit: &str) -> Result<(), HybridError> {
        for c in lit.chars() {
            if self.peek() != Some(c) {
                return self.err(format!("expected {lit:?}"));
            }
            self.pos += 1;
        }
        Ok(())
    }

    /// Reads escaped text up to (not including) an unescaped terminator.
    /// Unescaped special characters other than the terminators are errors.
    fn escaped_until(
        &mut self,
        special: &[char],
        terminators: &[char],
    ) -> Result<String, HybridError> {
        let mut out = String::new();
        loop {
            match self.peek() {
                None => {
                    return self.err(format!(
                        "unexpected end of input, expected one of {terminators:?}"
                    ))
                }
                Some(c) if terminators.contains(&c) => return Ok(out),
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(c) if c == '\\' || special.contains(&c) => {
                            out.push(c);
                            self.pos += 1;
                        }
                        _ => return self.err("invalid escape"),
                    }
                }
                Some(c) if special.contains(&c) => return self.err(format!("unescaped {c:?}")),
                Some(c) => {
                    out.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn plain_until(&mut self, terminator: char) -> Result<String, HybridError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == terminator {
                return Ok(self.chars[start..self.pos].iter().collect());
            }
            self.pos += 1;
        }
        self.err(format!("unexpected end of input, expected {terminator:?}"))
    }
}

/// Parses canonical text back to its schema, value heads and slots.
pub fn parse(text: &str) -> Result<ParsedRepr, HybridError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        pos: 0,
    };
    cur.expect("table ")?;
    let table = cur.escaped_until(&NAME_SPECIAL, &[','])?;
    cur.expect(", columns=[")?;
    let mut columns = Vec::new();
    let mut slots = Vec::new();
    loop {
        let prefix_at = cur.pos;
        let prefix = cur.escaped_until(&NAME_SPECIAL, &['.'])?;
        if prefix != table {
            cur.pos = prefix_at;
            return cur.err(format!(
                "column prefix {prefix:?} differs from table name {table:?}"
            ));
        }
        cur.expect(".")?;
        let name = cur.escaped_until(&NAME_SPECIAL, &['('])?;
        if name.trim().is_empty() {
            return cur.err("empty column name");
        }
        cur.expect("(")?;
        slots.push(Slot {
            offset: cur.pos,
            column: columns.len(),
        });
        cur.expect(SLOT)?;
        cur.expect("|")?;
        let dtype_at = cur.pos;
        let dtype_text = cur.plain_until('|')?;
        let dtype = match dtype_text.parse::<DType>() {
            Ok(d) => d,
            Err(e) => {
                cur.pos = dtype_at;
                return cur.err(e);
            }
        };
        cur.expect("|")?;
        let primary_key = if cur.starts_with(PRIMARY_KEY) {
            cur.expect(PRIMARY_KEY)?;
            true
        } else {
            false
        };
        cur.expect(")")?;
        cur.expect("|[")?;
        let mut values = Vec::new();
        if cur.peek() != Some(']') {
            loop {
                let v = cur.escaped_until(&VALUE_SPECIAL, &[',', ']'])?;
                if v.is_empty() {
                    return cur.err("empty value");
                }
                values.push(v);
                if cur.peek() == Some(',') {
                    cur.pos += 1;
                } else {
                    break;
                }
            }
        }
        cur.expect("]")?;
        columns.push(ParsedColumn {
            name,
            dtype,
            primary_key,
            values,
        });
        if cur.starts_with(", ") {
            cur.pos += 2;
        } else {
            break;
        }
    }
    cur.expect("]")?;
    if !cur.at_end() {
        return cur.err("trailing input");
    }
    Ok(ParsedRepr {
        table,
        columns,
        slots,
    })
}
