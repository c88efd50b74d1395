//! Rule filters for (query, table info, output) tuples.

use std::collections::BTreeSet;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{read_jsonl, CurationError};
use crate::hybrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Python,
    Sql,
    Prose,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleSample {
    pub query: String,
    pub table_info: String,
    pub output: String,
    pub kind: OutputKind,
}

impl TupleSample {
    pub fn read_jsonl(text: &str) -> Result<Vec<TupleSample>, CurationError> {
        let rows: Vec<(usize, TupleSample)> = read_jsonl(text)?;
        rows.into_iter()
            .map(|(line, s)| {
                if s.query.trim().is_empty()
                    || s.table_info.trim().is_empty()
                    || s.output.trim().is_empty()
                {
                    Err(CurationError::Parse {
                        line,
                        message: "query, table_info and output must be non-empty".into(),
                    })
                } else {
                    Ok(s)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredRule {
    pub rule: String,
    pub span: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ExecStatus {
    NotChecked,
    Passed,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accept: bool,
    pub fired: Vec<FiredRule>,
    pub exec: ExecStatus,
}

/// Runs an output for real. Implementations are supplied by the caller.
pub trait ExecChecker {
    fn check(&self, sample: &TupleSample) -> ExecStatus;
}

/// Checker that never executes anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NotChecked;

impl ExecChecker for NotChecked {
    fn check(&self, _: &TupleSample) -> ExecStatus {
        ExecStatus::NotChecked
    }
}

pub const TABLE_REDEFINITION: &str = "table-redefinition";
pub const KIND_MISMATCH: &str = "kind-mismatch";
pub const COMMENT_ONLY: &str = "comment-only";
pub const EXEC_FAILED: &str = "exec-failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    pub table_redefinition: bool,
    pub kind_mismatch: bool,
    pub comment_only: bool,
}

impl Default for FilterRules {
    fn default() -> Self {
        Self {
            table_redefinition: true,
            kind_mismatch: true,
            comment_only: true,
        }
    }
}

/// Compiled rule set.
pub struct TupleFilter {
    rules: FilterRules,
    fence: Regex,
    dataframe: Regex,
    dict_key: Regex,
    columns_kw: Regex,
    quoted: Regex,
    create_table: Regex,
    python_marker: Regex,
    sql_marker: Regex,
}

impl TupleFilter {
    pub fn new(rules: FilterRules) -> Self {
        let re = |p: &str| Regex::new(p).expect("static pattern");
        Self {
            rules,
            fence: re(r"(?m)^\s*```[ \t]*([A-Za-z0-9_+-]*)"),
            dataframe: re(r"DataFrame\s*\("),
            dict_key: re(r#"^\s*['"]([^'"]+)['"]\s*:"#),
            columns_kw: re(r"columns\s*=\s*\["),
            quoted: re(r#"['"]([^'"]+)['"]"#),
            create_table: re(
                r"(?is)create\s+table\s+(?:if\s+not\s+exists\s+)?[`\x22\[]?[\w.]+[`\x22\]]?\s*\(",
            ),
            python_marker: re(
                r"(?m)^\s*(import\s+\w+|from\s+\w+(\.\w+)*\s+import\s|def\s+\w+\s*\(|print\s*\(|\w+\s*=\s*pd\.|df\s*(\[|\.\w+\s*\())",
            ),
            sql_marker: re(
                r"(?im)^\s*(select\s[\s\S]*?\sfrom\s|create\s+table\s|insert\s+into\s|update\s+\w+\s+set\s|delete\s+from\s|with\s+\w+\s+as\s*\()",
            ),
        }
    }

    pub fn apply(&self, s: &TupleSample, exec: &dyn ExecChecker) -> FilterVerdict {
        let mut fired = Vec::new();
        if self.rules.table_redefinition {
            if let Some(span) = self.table_redefinition(s) {
                fired.push(FiredRule {
                    rule: TABLE_REDEFINITION.into(),
                    span,
                });
            }
        }
        if self.rules.kind_mismatch {
            if let Some(span) = self.kind_mismatch(s) {
                fired.push(FiredRule {
                    rule: KIND_MISMATCH.into(),
                    span,
                });
            }
        }
        if self.rules.comment_only {
            if let Some(span) = self.comment_only(s) {
                fired.push(FiredRule {
                    rule: COMMENT_ONLY.into(),
                    span,
                });
            }
        }
        let status = exec.check(s);
        if let ExecStatus::Failed { message } = &status {
            fired.push(FiredRule {
                rule: EXEC_FAILED.into(),
                span: message.clone(),
            });
        }
        FilterVerdict {
            accept: fired.is_empty(),
            fired,
            exec: status,
        }
    }

    /// A literal table constructor in the output whose column set differs
    /// from the columns described in the table info.
    fn table_redefinition(&self, s: &TupleSample) -> Option<String> {
        let expected = info_headers(&s.table_info)?;
        for (span, cols) in self.constructors(&s.output) {
            if !cols.is_empty() && cols != expected {
                return Some(span);
            }
        }
        None
    }

    /// `(matched text, lowercased column names)` for every DataFrame literal
    /// or CREATE TABLE statement.
    fn constructors(&self, out: &str) -> Vec<(String, BTreeSet<String>)> {
        let mut found = Vec::new();
        for m in self.dataframe.find_iter(out) {
            let body = balanced(&out[m.end() - 1..], '(', ')');
            let mut cols = BTreeSet::new();
            if let Some(dict) = body.find('{').map(|i| balanced(&body[i..], '{', '}')) {
                for part in split_top_level(&dict[1..dict.len().saturating_sub(1)]) {
                    if let Some(c) = self.dict_key.captures(part) {
                        cols.insert(c[1].trim().to_lowercase());
                    }
                }
            }
            if let Some(kw) = self.columns_kw.find(body) {
                let list = balanced(&body[kw.end() - 1..], '[', ']');
                cols.extend(
                    self.quoted
                        .captures_iter(list)
                        .map(|c| c[1].trim().to_lowercase()),
                );
            }
            found.push((format!("{}{}", &out[m.start()..m.end() - 1], body), cols));
        }
        for m in self.create_table.find_iter(out) {
            let body = balanced(&out[m.end() - 1..], '(', ')');
            let inner = &body[1..body.len().saturating_sub(1)];
            let cols = split_top_level(inner)
                .into_iter()
                .filter_map(|def| def.split_whitespace().next())
                .map(|w| {
                    w.trim_matches(|c| matches!(c, '`' | '"' | '[' | ']'))
                        .to_lowercase()
                })
                .filter(|w| {
                    !w.is_empty()
                        && !matches!(
                            w.as_str(),
                            "primary" | "foreign" | "constraint" | "unique" | "check" | "key"
                        )
                })
                .collect();
            found.push((format!("{}{}", &out[m.start()..m.end() - 1], body), cols));
        }
        found
    }

    fn detected_kind(&self, out: &str) -> Option<(OutputKind, String)> {
        for c in self.fence.captures_iter(out) {
            let lang = c[1].to_lowercase();
            let kind = match lang.as_str() {
                "python" | "py" | "python3" => OutputKind::Python,
                "sql" | "mysql" | "sqlite" | "postgresql" | "postgres" => OutputKind::Sql,
                _ => continue,
            };
            return Some((kind, c[0].trim().to_string()));
        }
        None
    }

    /// Fence language or dialect markers that name a different kind than
    /// the declared one.
    fn kind_mismatch(&self, s: &TupleSample) -> Option<String> {
        if let Some((kind, span)) = self.detected_kind(&s.output) {
            return (kind != s.kind).then_some(span);
        }
        let py = self.python_marker.find(&s.output);
        let sql = self.sql_marker.find(&s.output);
        let first_line = |m: regex::Match<'_>| {
            m.as_str()
                .trim()
                .lines()
                .next()
                .unwrap_or_default()
                .to_string()
        };
        match s.kind {
            OutputKind::Python => sql.filter(|_| py.is_none()).map(first_line),
            OutputKind::Sql => py.filter(|_| sql.is_none()).map(first_line),
            OutputKind::Prose => py.or(sql).map(first_line),
        }
    }

    /// Declared code whose non-blank lines, fences aside, are all comments.
    fn comment_only(&self, s: &TupleSample) -> Option<String> {
        let code: Vec<&str> = s
            .output
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("```"))
            .collect();
        let all_comments = match s.kind {
            OutputKind::Python => code.iter().all(|l| l.starts_with('#')),
            OutputKind::Sql => sql_all_comments(&code),
            OutputKind::Prose => return None,
        };
        all_comments.then(|| code.join("\n"))
    }
}

impl Default for TupleFilter {
    fn default() -> Self {
        Self::new(FilterRules::default())
    }
}

fn sql_all_comments(lines: &[&str]) -> bool {
    let mut in_block = false;
    for l in lines {
        let mut rest = *l;
        loop {
            if in_block {
                match rest.find("*/") {
                    Some(i) => {
                        in_block = false;
                        rest = rest[i + 2..].trim_start();
                    }
                    None => break,
                }
            } else if rest.is_empty() || rest.starts_with("--") {
                break;
            } else if let Some(after) = rest.strip_prefix("/*") {
                in_block = true;
                rest = after;
            } else {
                return false;
            }
        }
    }
    true
}

/// The bracketed prefix of `s` starting at its first character `open`,
/// through the matching `close` (or to the end when unbalanced). Quoted
/// strings are skipped.
fn balanced(s: &str, open: char, close: char) -> &str {
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            c if c == open => depth += 1,
            c if c == close => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return &s[..i + c.len_utf8()];
                }
            }
            _ => {}
        }
    }
    s
}

/// Splits on commas not nested in brackets or quotes.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts.into_iter().filter(|p| !p.trim().is_empty()).collect()
}

/// Lowercased column names described by a table info block: a canonical
/// hybrid representation, a markdown header row, or a CSV header line.
fn info_headers(info: &str) -> Option<BTreeSet<String>> {
    let info = info.trim();
    let lower = |v: Vec<String>| -> Option<BTreeSet<String>> {
        let set: BTreeSet<String> = v
            .into_iter()
            .map(|s| s.trim().to_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        (!set.is_empty()).then_some(set)
    };
    let unwrapped = info
        .strip_prefix(hybrid::TAB_OPEN)
        .and_then(|s| s.strip_suffix(hybrid::TAB_CLOSE))
        .unwrap_or(info);
    if let Ok(parsed) = hybrid::parse(unwrapped) {
        return lower(parsed.columns.into_iter().map(|c| c.name).collect());
    }
    let first = info.lines().find(|l| !l.trim().is_empty())?.trim();
    if first.starts_with('|') {
        return lower(
            first
                .trim_matches('|')
                .split('|')
                .map(str::to_string)
                .collect(),
        );
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(first.as_bytes());
    let record = reader.records().next()?.ok()?;
    if record.len() < 2 {
        return None;
    }
    lower(record.iter().map(str::to_string).collect())
}

/// Applies the default rule set with no executor.
pub fn regex_filter(s: &TupleSample, rules: &FilterRules) -> FilterVerdict {
    TupleFilter::new(*rules).apply(s, &NotChecked)
}
