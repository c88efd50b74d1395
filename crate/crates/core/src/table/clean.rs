//! Rule-based table cleaning.
//!
//! Rules run in a fixed order: horizontal-table transpose, case-insensitive
//! duplicate columns, underscore-only columns, long-field columns, columns
//! over the missing-value limit, rows over the missing-value limit, columns
//! whose first value repeats the column name. The pass repeats until no rule
//! fires (dropping rows can push a column over the missing limit), then the
//! size gate decides the verdict. Repeating to a fixpoint is what makes
//! `clean` idempotent.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::infer::{classify, infer_dtypes};
use super::{text_cell, Cell, ColumnMeta, DType, Table};

const MAX_PASSES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizontalPolicy {
    Transpose,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleSet {
    pub horizontal: HorizontalPolicy,
    pub duplicate_columns: bool,
    pub underscore_columns: bool,
    pub long_fields: bool,
    pub max_field_chars: usize,
    pub nan_columns: bool,
    pub nan_rows: bool,
    /// Lines with a strictly larger missing fraction are dropped.
    pub max_nan_fraction: f64,
    pub first_value_is_name: bool,
    pub min_rows: usize,
    pub min_cols: usize,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            horizontal: HorizontalPolicy::Transpose,
            duplicate_columns: true,
            underscore_columns: true,
            long_fields: true,
            max_field_chars: 100,
            nan_columns: true,
            nan_rows: true,
            max_nan_fraction: 0.3,
            first_value_is_name: true,
            min_rows: 5,
            min_cols: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleId {
    HorizontalTranspose,
    DuplicateColumn,
    UnderscoreColumn,
    LongFieldColumn,
    NanColumn,
    NanRow,
    FirstValueIsName,
    SizeGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CleanAction {
    DropColumn,
    DropRow,
    Transpose,
    Reject,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEvent {
    pub rule: RuleId,
    pub action: CleanAction,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum RejectReason {
    TooFewRows { rows: usize },
    TooFewColumns { cols: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted(Table),
    Rejected(Vec<RejectReason>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanReport {
    pub verdict: Verdict,
    /// Every rule that fired, in application order, followed by the size
    /// gate outcome (action `None` when the table passes).
    pub log: Vec<RuleEvent>,
}

impl CleanReport {
    pub fn table(&self) -> Option<&Table> {
        match &self.verdict {
            Verdict::Accepted(t) => Some(t),
            Verdict::Rejected(_) => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.table().is_some()
    }

    /// Events that changed or rejected the table.
    pub fn fired(&self) -> impl Iterator<Item = &RuleEvent> {
        self.log.iter().filter(|e| e.action != CleanAction::None)
    }

    /// Distinct fired rule ids in first-firing order.
    pub fn fired_rules(&self) -> Vec<RuleId> {
        let mut out = Vec::new();
        for e in self.fired() {
            if !out.contains(&e.rule) {
                out.push(e.rule);
            }
        }
        out
    }
}

struct Work {
    name: String,
    columns: Vec<ColumnMeta>,
    rows: Vec<Vec<Cell>>,
    log: Vec<RuleEvent>,
}

impl Work {
    fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn n_cols(&self) -> usize {
        self.columns.len()
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.columns.is_empty()
    }

    fn event(&mut self, rule: RuleId, action: CleanAction, detail: String) {
        self.log.push(RuleEvent {
            rule,
            action,
            detail,
        });
    }

    fn drop_columns(
        &mut self,
        rule: RuleId,
        doomed: &[usize],
        why: impl Fn(&ColumnMeta) -> String,
    ) {
        for &j in doomed {
            let detail = why(&self.columns[j]);
            self.event(rule, CleanAction::DropColumn, detail);
        }
        let keep: Vec<bool> = (0..self.n_cols()).map(|j| !doomed.contains(&j)).collect();
        let mut k = keep.iter();
        self.columns.retain(|_| *k.next().unwrap());
        for row in &mut self.rows {
            let mut k = keep.iter();
            row.retain(|_| *k.next().unwrap());
        }
    }

    fn column_where(&self, mut pred: impl FnMut(usize, &ColumnMeta) -> bool) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&j| pred(j, &self.columns[j]))
            .collect()
    }

    fn missing_in_column(&self, j: usize) -> usize {
        self.rows.iter().filter(|r| r[j].is_missing()).count()
    }

    /// Fraction of columns whose non-missing cells all share one value class
    /// (int and float count as the same class).
    fn homogeneous_fraction(&self) -> f64 {
        let homogeneous = (0..self.n_cols())
            .filter(|&j| {
                let mut classes = self.rows.iter().filter(|r| !r[j].is_missing()).map(|r| {
                    match classify(&r[j].render()) {
                        DType::Int => DType::Float,
                        d => d,
                    }
                });
                match classes.next() {
                    None => false,
                    Some(first) => classes.all(|c| c == first),
                }
            })
            .count();
        homogeneous as f64 / self.n_cols() as f64
    }

    /// Treats the header as row zero and transposes the whole grid; the first
    /// column becomes the new header.
    fn transposed(&self) -> Option<Work> {
        if self.n_cols() < 2 {
            return None;
        }
        let mut grid: Vec<Vec<String>> = Vec::with_capacity(self.n_rows() + 1);
        grid.push(self.columns.iter().map(|c| c.name.clone()).collect());
        grid.extend(
            self.rows
                .iter()
                .map(|r| r.iter().map(Cell::render).collect()),
        );
        let header: Vec<String> = grid
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let h = row[0].trim();
                if h.is_empty() {
                    format!("col_{k}")
                } else {
                    h.to_string()
                }
            })
            .collect();
        let rows: Vec<Vec<Cell>> = (1..self.n_cols())
            .map(|j| grid.iter().map(|row| text_cell(&row[j])).collect())
            .collect();
        let columns = header.into_iter().map(ColumnMeta::text).collect();
        let table = Table::new(self.name.clone(), columns, rows).ok()?;
        let typed = infer_dtypes(&table);
        Some(Work {
            name: self.name.clone(),
            columns: typed.columns().to_vec(),
            rows: typed.rows().map(<[Cell]>::to_vec).collect(),
            log: Vec::new(),
        })
    }
}

/// Applies `rules` to `t`. Rejection is a verdict, never an error.
pub fn clean(t: &Table, rules: &RuleSet) -> CleanReport {
    let mut w = Work {
        name: t.name().to_string(),
        columns: t.columns().to_vec(),
        rows: t.rows().map(<[Cell]>::to_vec).collect(),
        log: Vec::new(),
    };
    for _ in 0..MAX_PASSES {
        let before = w.log.len();
        run_pass(&mut w, rules);
        if w.log.len() == before || w.is_empty() {
            break;
        }
    }

    let (m, n) = (w.n_rows(), w.n_cols());
    let mut reasons = Vec::new();
    if m < rules.min_rows {
        reasons.push(RejectReason::TooFewRows { rows: m });
        w.event(
            RuleId::SizeGate,
            CleanAction::Reject,
            format!("{m} rows, need at least {}", rules.min_rows),
        );
    }
    if n < rules.min_cols {
        reasons.push(RejectReason::TooFewColumns { cols: n });
        w.event(
            RuleId::SizeGate,
            CleanAction::Reject,
            format!("{n} columns, need at least {}", rules.min_cols),
        );
    }
    if !reasons.is_empty() {
        return CleanReport {
            verdict: Verdict::Rejected(reasons),
            log: w.log,
        };
    }
    w.event(
        RuleId::SizeGate,
        CleanAction::None,
        format!("accepted {m}x{n}"),
    );
    let table = Table::new(w.name, w.columns, w.rows)
        .expect("cleaning preserves rectangularity and cell types");
    CleanReport {
        verdict: Verdict::Accepted(table),
        log: w.log,
    }
}

fn run_pass(w: &mut Work, rules: &RuleSet) {
    if w.is_empty() {
        return;
    }
    if rules.horizontal == HorizontalPolicy::Transpose {
        if let Some(t) = w.transposed() {
            let (before, after) = (w.homogeneous_fraction(), t.homogeneous_fraction());
            if after > before {
                let detail = format!(
                    "{}x{} -> {}x{}; homogeneous columns {before:.3} -> {after:.3}",
                    w.n_rows(),
                    w.n_cols(),
                    t.n_rows(),
                    t.n_cols()
                );
                w.columns = t.columns;
                w.rows = t.rows;
                w.event(RuleId::HorizontalTranspose, CleanAction::Transpose, detail);
            }
        }
    }

    if rules.duplicate_columns {
        let mut seen = HashSet::new();
        let doomed = w.column_where(|_, c| !seen.insert(c.name.trim().to_lowercase()));
        w.drop_columns(RuleId::DuplicateColumn, &doomed, |c| {
            format!(
                "column {:?} duplicates an earlier name ignoring case",
                c.name
            )
        });
    }

    if rules.underscore_columns {
        let doomed = w.column_where(|j, _| {
            let mut vals = w.rows.iter().filter(|r| !r[j].is_missing()).peekable();
            vals.peek().is_some()
                && vals.all(|r| {
                    let s = r[j].render();
                    s.contains('_') && s.chars().all(|ch| ch == '_' || ch.is_whitespace())
                })
        });
        w.drop_columns(RuleId::UnderscoreColumn, &doomed, |c| {
            format!("column {:?} holds only underscores", c.name)
        });
    }

    if rules.long_fields {
        let limit = rules.max_field_chars;
        let doomed =
            w.column_where(|j, _| w.rows.iter().any(|r| r[j].render().chars().count() > limit));
        w.drop_columns(RuleId::LongFieldColumn, &doomed, |c| {
            format!(
                "column {:?} has a field longer than {limit} characters",
                c.name
            )
        });
    }

    if w.is_empty() {
        return;
    }

    if rules.nan_columns {
        let m = w.n_rows() as f64;
        let limit = rules.max_nan_fraction;
        let fractions: Vec<f64> = (0..w.n_cols())
            .map(|j| w.missing_in_column(j) as f64 / m)
            .collect();
        let doomed = w.column_where(|j, _| fractions[j] > limit);
        let names_fracs: Vec<(String, f64)> = doomed
            .iter()
            .map(|&j| (w.columns[j].name.clone(), fractions[j]))
            .collect();
        w.drop_columns(RuleId::NanColumn, &doomed, |c| {
            let f = names_fracs
                .iter()
                .find(|(n, _)| *n == c.name)
                .map_or(0.0, |x| x.1);
            format!("column {:?} is {:.1}% missing", c.name, f * 100.0)
        });
    }

    if rules.nan_rows && !w.columns.is_empty() {
        let n = w.n_cols() as f64;
        let limit = rules.max_nan_fraction;
        let mut kept = Vec::with_capacity(w.n_rows());
        let mut events = Vec::new();
        for (i, row) in std::mem::take(&mut w.rows).into_iter().enumerate() {
            let frac = row.iter().filter(|c| c.is_missing()).count() as f64 / n;
            if frac > limit {
                events.push(format!("row {i} is {:.1}% missing", frac * 100.0));
            } else {
                kept.push(row);
            }
        }
        w.rows = kept;
        for e in events {
            w.event(RuleId::NanRow, CleanAction::DropRow, e);
        }
    }

    if rules.first_value_is_name && !w.is_empty() {
        let doomed = w.column_where(|j, c| w.rows[0][j].render().trim() == c.name.trim());
        w.drop_columns(RuleId::FirstValueIsName, &doomed, |c| {
            format!("first value of column {:?} repeats its name", c.name)
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(headers: &[&str], rows: &[&[&str]]) -> Table {
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
        infer_dtypes(&Table::from_text("t", headers, &rows).unwrap())
    }

    #[test]
    fn too_few_rows_rejected() {
        let row: &[&str] = &["1", "x", "2.0"];
        let t = grid(&["a", "b", "c"], &[row; 4]);
        let r = clean(&t, &RuleSet::default());
        assert_eq!(
            r.verdict,
            Verdict::Rejected(vec![RejectReason::TooFewRows { rows: 4 }])
        );
        assert_eq!(r.fired_rules(), vec![RuleId::SizeGate]);
    }

    #[test]
    fn sparse_column_dropped_then_too_few_columns() {
        let rows: Vec<[&str; 2]> = (0..10)
            .map(|i| ["1", if i < 4 { "" } else { "v" }])
            .collect();
        let rows: Vec<&[&str]> = rows.iter().map(|r| r.as_slice()).collect();
        let t = grid(&["a", "b"], &rows);
        let r = clean(&t, &RuleSet::default());
        assert_eq!(r.fired_rules(), vec![RuleId::NanColumn, RuleId::SizeGate]);
        assert_eq!(
            r.verdict,
            Verdict::Rejected(vec![RejectReason::TooFewColumns { cols: 1 }])
        );
    }

    #[test]
    fn well_formed_table_untouched() {
        let rows: Vec<[String; 3]> = (0..8)
            .map(|i| [i.to_string(), format!("name{i}"), format!("{}.5", i * 3)])
            .collect();
        let rows: Vec<Vec<&str>> = rows
            .iter()
            .map(|r| r.iter().map(String::as_str).collect())
            .collect();
        let t = infer_dtypes(&Table::from_text("t", &["id", "name", "score"], &rows).unwrap());
        let r = clean(&t, &RuleSet::default());
        assert_eq!(r.fired().count(), 0);
        assert_eq!(r.table(), Some(&t));
    }

    #[test]
    fn row_drop_can_expose_sparse_column() {
        // Column c is 2/7 missing at first; once the two sparse rows go it is
        // 2/5 missing, which the second pass catches.
        let t = grid(
            &["a", "b", "c", "d"],
            &[
                &["1", "2", "", "4"],
                &["1", "2", "", "4"],
                &["1", "", "3", ""],
                &["1", "", "3", ""],
                &["1", "2", "3", "4"],
                &["1", "2", "3", "4"],
                &["1", "2", "3", "4"],
            ],
        );
        let r = clean(&t, &RuleSet::default());
        let out = r.table().expect("accepted");
        assert!(clean(out, &RuleSet::default()).fired().next().is_none());
    }

    #[test]
    fn horizontal_table_transposed() {
        let t = grid(
            &["field", "r1", "r2", "r3", "r4", "r5"],
            &[
                &["name", "ann", "bob", "cy", "dee", "eve"],
                &["age", "30", "41", "25", "38", "52"],
                &["city", "Oslo", "Rome", "Lima", "Kyiv", "Baku"],
            ],
        );
        let r = clean(&t, &RuleSet::default());
        assert_eq!(r.fired_rules(), vec![RuleId::HorizontalTranspose]);
        let out = r.table().unwrap();
        assert_eq!(out.n_rows(), 5);
        let names: Vec<&str> = out.columns().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["field", "name", "age", "city"]);
        assert_eq!(out.columns()[2].dtype, DType::Int);
    }

    #[test]
    fn horizontal_rule_can_be_disabled() {
        let t = grid(
            &["field", "r1", "r2", "r3", "r4", "r5"],
            &[
                &["name", "ann", "bob", "cy", "dee", "eve"],
                &["age", "30", "41", "25", "38", "52"],
            ],
        );
        let rules = RuleSet {
            horizontal: HorizontalPolicy::Ignore,
            ..RuleSet::default()
        };
        assert!(!clean(&t, &rules)
            .fired_rules()
            .contains(&RuleId::HorizontalTranspose));
    }
}
