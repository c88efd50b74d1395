//! Table-language alignment samples: column prediction (which column holds
//! a given value) and cell prediction (give a value of a given column).
//! Prompts carry the table as a `<tab>`-wrapped canonical hybrid
//! representation followed by an instruction drawn from a template set.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{
    escape_name, serialize, tokenize, UnitKind, DEFAULT_VALUES_PER_COL, TAB_CLOSE, TAB_OPEN,
};
use crate::table::Table;

/// Cell draws attempted before column prediction gives up.
pub const MAX_ATTEMPTS: usize = 32;

const DEFAULT_COLUMN_TEMPLATES: &str = include_str!("../templates/column_prediction.txt");
const DEFAULT_CELL_TEMPLATES: &str = include_str!("../templates/cell_prediction.txt");

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("no usable cell in table {0:?}")]
    NoUsableCell(String),
    #[error("invalid template set: {0}")]
    InvalidTemplates(String),
    #[error("no generator for task {0:?}")]
    Unsupported(Task),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ColumnPrediction,
    CellPrediction,
    QuestionGeneration,
    TableTitling,
    RowSummarization,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::ColumnPrediction => "column_prediction",
            Task::CellPrediction => "cell_prediction",
            Task::QuestionGeneration => "question_generation",
            Task::TableTitling => "table_titling",
            Task::RowSummarization => "row_summarization",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignSample {
    pub task: Task,
    pub table: String,
    pub prompt: String,
    pub target: String,
    pub seed: u64,
    /// `task/index` into the template set used.
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub column_prediction: Vec<String>,
    pub cell_prediction: Vec<String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::from_texts(DEFAULT_COLUMN_TEMPLATES, DEFAULT_CELL_TEMPLATES)
            .expect("bundled templates are valid")
    }
}

fn template_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

impl TemplateSet {
    /// Parses one template per non-blank line. Column templates must use
    /// `{value}`, cell templates `{column}`; `{table}` is optional.
    pub fn from_texts(column_prediction: &str, cell_prediction: &str) -> Result<Self, AlignError> {
        let set = Self {
            column_prediction: template_lines(column_prediction),
            cell_prediction: template_lines(cell_prediction),
        };
        for (list, required, task) in [
            (&set.column_prediction, "{value}", Task::ColumnPrediction),
            (&set.cell_prediction, "{column}", Task::CellPrediction),
        ] {
            if list.is_empty() {
                return Err(AlignError::InvalidTemplates(format!(
                    "no templates for {}",
                    task.as_str()
                )));
            }
            for t in list.iter() {
                if t.matches(required).count() != 1 {
                    return Err(AlignError::InvalidTemplates(format!(
                        "{t:?} must contain {required} once"
                    )));
                }
                if t.matches("{table}").count() > 1 || t.contains(TAB_OPEN) || t.contains(TAB_CLOSE)
                {
                    return Err(AlignError::InvalidTemplates(format!(
                        "{t:?} is not a usable template"
                    )));
                }
            }
        }
        Ok(set)
    }

    fn for_task(&self, task: Task) -> Result<&[String], AlignError> {
        match task {
            Task::ColumnPrediction => Ok(&self.column_prediction),
            Task::CellPrediction => Ok(&self.cell_prediction),
            other => Err(AlignError::Unsupported(other)),
        }
    }
}

/// Text that can be placed in an instruction without adding a delimiter.
fn usable(s: &str) -> bool {
    !s.is_empty() && !s.contains(TAB_OPEN) && !s.contains(TAB_CLOSE)
}

fn prompt(t: &Table, instruction: &str) -> String {
    format!(
        "{}\n{instruction}",
        serialize(t, DEFAULT_VALUES_PER_COL).wrapped().text
    )
}

fn fill(template: &str, t: &Table, key: &str, value: &str) -> String {
    template
        .replace("{table}", &escape_name(t.name()))
        .replace(key, value)
}

fn pick_template<'a>(
    templates: &'a TemplateSet,
    task: Task,
    rng: &mut ChaCha8Rng,
) -> Result<(usize, &'a str), AlignError> {
    let list = templates.for_task(task)?;
    let i = rng.random_range(0..list.len());
    Ok((i, &list[i]))
}

/// Task 1: a value is shown, the answer is the column it belongs to. Values
/// that render identically in more than one column are redrawn, up to
/// [`MAX_ATTEMPTS`] times.
pub fn gen_column_prediction(
    t: &Table,
    seed: u64,
    templates: &TemplateSet,
) -> Result<AlignSample, AlignError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let owners = value_owners(t);
    let (m, n) = (t.n_rows(), t.n_cols());
    for _ in 0..MAX_ATTEMPTS {
        let (i, j) = (rng.random_range(0..m), rng.random_range(0..n));
        let cell = t.cell(i, j);
        if cell.is_missing() {
            continue;
        }
        let value = cell.render();
        if !usable(&value) || owners.iter().filter(|(v, _)| *v == value).count() != 1 {
            continue;
        }
        let (k, template) = pick_template(templates, Task::ColumnPrediction, &mut rng)?;
        return Ok(AlignSample {
            task: Task::ColumnPrediction,
            table: t.name().to_string(),
            prompt: prompt(t, &fill(template, t, "{value}", &value)),
            target: t.columns()[j].name.clone(),
            seed,
            template: format!("{}/{k}", Task::ColumnPrediction.as_str()),
        });
    }
    Err(AlignError::NoUsableCell(t.name().to_string()))
}

/// Distinct (rendered value, column) pairs over non-Missing cells.
fn value_owners(t: &Table) -> HashSet<(String, usize)> {
    let mut out = HashSet::new();
    for row in t.rows() {
        for (j, c) in row.iter().enumerate() {
            if !c.is_missing() {
                out.insert((c.render(), j));
            }
        }
    }
    out
}

/// Task 2: a column is named, the answer is one of its values.
pub fn gen_cell_prediction(
    t: &Table,
    seed: u64,
    templates: &TemplateSet,
) -> Result<AlignSample, AlignError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<(usize, Vec<String>)> = t
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| usable(&c.name))
        .map(|(j, _)| {
            let vals = t
                .column(j)
                .filter(|c| !c.is_missing())
                .map(|c| c.render())
                .filter(|v| !v.is_empty())
                .collect::<Vec<_>>();
            (j, vals)
        })
        .filter(|(_, vals)| !vals.is_empty())
        .collect();
    if candidates.is_empty() {
        return Err(AlignError::NoUsableCell(t.name().to_string()));
    }
    let (j, values) = &candidates[rng.random_range(0..candidates.len())];
    let target = values[rng.random_range(0..values.len())].clone();
    let (k, template) = pick_template(templates, Task::CellPrediction, &mut rng)?;
    let column = &t.columns()[*j].name;
    Ok(AlignSample {
        task: Task::CellPrediction,
        table: t.name().to_string(),
        prompt: prompt(t, &fill(template, t, "{column}", column)),
        target,
        seed,
        template: format!("{}/{k}", Task::CellPrediction.as_str()),
    })
}

pub fn generate(
    task: Task,
    t: &Table,
    seed: u64,
    templates: &TemplateSet,
) -> Result<AlignSample, AlignError> {
    match task {
        Task::ColumnPrediction => gen_column_prediction(t, seed, templates),
        Task::CellPrediction => gen_cell_prediction(t, seed, templates),
        other => Err(AlignError::Unsupported(other)),
    }
}

/// Checks a sample against its source table: one `<tab>` then one `</tab>`
/// (as units, so escaped text never counts), the instruction matches the
/// recorded template, and the answer is consistent with table membership.
pub fn validate_sample(s: &AlignSample, t: &Table, templates: &TemplateSet) -> Result<(), String> {
    let units = tokenize(&s.prompt);
    let opens: Vec<usize> = units
        .iter()
        .filter(|u| u.kind == UnitKind::TabOpen)
        .map(|u| u.offset)
        .collect();
    let closes: Vec<usize> = units
        .iter()
        .filter(|u| u.kind == UnitKind::TabClose)
        .map(|u| u.offset)
        .collect();
    if opens.len() != 1 || closes.len() != 1 || opens[0] > closes[0] {
        return Err(format!(
            "expected one <tab> before one </tab>, got {opens:?} and {closes:?}"
        ));
    }
    let list = templates.for_task(s.task).map_err(|e| e.to_string())?;
    let index: usize = s
        .template
        .strip_prefix(s.task.as_str())
        .and_then(|r| r.strip_prefix('/'))
        .and_then(|r| r.parse().ok())
        .filter(|&i| i < list.len())
        .ok_or_else(|| format!("unknown template id {:?}", s.template))?;
    let instruction = s
        .prompt
        .split_once(&format!("{TAB_CLOSE}\n"))
        .map(|(_, rest)| rest)
        .ok_or("no instruction after </tab>")?;
    let (key, slot) = match s.task {
        Task::ColumnPrediction => ("{value}", "value"),
        _ => ("{column}", "column"),
    };
    let pattern = regex::escape(&list[index])
        .replace(&regex::escape("{table}"), "(?P<table>.*)")
        .replace(&regex::escape(key), &format!("(?P<{slot}>.*)"));
    let re = Regex::new(&format!("(?s)^{pattern}$")).map_err(|e| e.to_string())?;
    let caps = re
        .captures(instruction)
        .ok_or("instruction does not match its template")?;
    if let Some(name) = caps.name("table") {
        if name.as_str() != escape_name(t.name()) {
            return Err(format!("instruction names table {:?}", name.as_str()));
        }
    }
    let shown = caps.name(slot).map(|m| m.as_str()).unwrap_or_default();
    let column_of = |name: &str| t.columns().iter().position(|c| c.name == name);
    let in_column = |j: usize, v: &str| t.column(j).any(|c| !c.is_missing() && c.render() == v);
    match s.task {
        Task::ColumnPrediction => {
            let j = column_of(&s.target)
                .ok_or_else(|| format!("target {:?} is not a column", s.target))?;
            if !in_column(j, shown) {
                return Err(format!("{shown:?} does not occur in column {:?}", s.target));
            }
            let elsewhere = (0..t.n_cols())
                .filter(|&o| o != j)
                .any(|o| in_column(o, shown));
            if elsewhere {
                return Err(format!("{shown:?} occurs in more than one column"));
            }
        }
        _ => {
            let j = column_of(shown).ok_or_else(|| format!("{shown:?} is not a column"))?;
            if !in_column(j, &s.target) {
                return Err(format!("{:?} does not occur in column {shown:?}", s.target));
            }
        }
    }
    Ok(())
}

/// One JSON object per line.
pub fn export_jsonl(samples: &[AlignSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples always serialize"));
        out.push('\n');
    }
    out
}

pub fn import_jsonl(text: &str) -> Result<Vec<AlignSample>, AlignError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AlignError::Jsonl {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
