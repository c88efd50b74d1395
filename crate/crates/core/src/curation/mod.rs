//! Data curation: a token-level selective language modeling mask and rule
//! filters for (query, table info, output) training tuples.

mod filter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{
    regex_filter, ExecChecker, ExecStatus, FilterRules, FilterVerdict, FiredRule, NotChecked,
    OutputKind, TupleFilter, TupleSample,
};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("threshold must be finite, got {0}")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScoreRow {
    pub token: String,
    pub loss_ref: f64,
    pub loss_train: f64,
}

/// How the per-token score is formed from the two losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreSign {
    /// `loss_train - loss_ref`.
    #[default]
    TrainMinusRef,
    /// `loss_ref - loss_train`.
    RefMinusTrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlmConfig {
    pub threshold: f64,
    pub sign: ScoreSign,
    /// Keep tokens whose score equals the threshold.
    pub inclusive: bool,
}

impl Default for SlmConfig {
    fn default() -> Self {
        Self {
            threshold: 0.6,
            sign: ScoreSign::TrainMinusRef,
            inclusive: true,
        }
    }
}

impl SlmConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    pub fn score(&self, row: &TokenScoreRow) -> f64 {
        match self.sign {
            ScoreSign::TrainMinusRef => row.loss_train - row.loss_ref,
            ScoreSign::RefMinusTrain => row.loss_ref - row.loss_train,
        }
    }

    fn keeps(&self, score: f64) -> bool {
        if self.inclusive {
            score >= self.threshold
        } else {
            score > self.threshold
        }
    }
}

/// Keep flags: `true` marks a token that stays in the training loss.
pub fn slm_mask(rows: &[TokenScoreRow], cfg: &SlmConfig) -> Result<Vec<bool>, CurationError> {
    if !cfg.threshold.is_finite() {
        return Err(CurationError::InvalidThreshold(cfg.threshold));
    }
    Ok(rows.iter().map(|r| cfg.keeps(cfg.score(r))).collect())
}

fn check_row(row: &TokenScoreRow, line: usize) -> Result<(), CurationError> {
    for (name, v) in [("loss_ref", row.loss_ref), ("loss_train", row.loss_train)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CurationError::Parse {
                line,
                message: format!("{name} must be finite and >= 0, got {v}"),
            });
        }
    }
    Ok(())
}

/// Reads `{"token","loss_ref","loss_train"}` lines.
pub fn read_token_scores_jsonl(text: &str) -> Result<Vec<TokenScoreRow>, CurationError> {
    read_jsonl(text).and_then(|rows: Vec<(usize, TokenScoreRow)>| {
        rows.into_iter()
            .map(|(line, r)| check_row(&r, line).map(|_| r))
            .collect()
    })
}

/// Reads a CSV with header `token,loss_ref,loss_train`.
pub fn read_token_scores_csv(text: &str) -> Result<Vec<TokenScoreRow>, CurationError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<TokenScoreRow>().enumerate() {
        let row = rec.map_err(|e| CurationError::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        check_row(&row, i + 2)?;
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedToken {
    pub token: String,
    pub score: f64,
    pub keep: bool,
}

pub fn mask_report(
    rows: &[TokenScoreRow],
    cfg: &SlmConfig,
) -> Result<Vec<MaskedToken>, CurationError> {
    let mask = slm_mask(rows, cfg)?;
    Ok(rows
        .iter()
        .zip(mask)
        .map(|(r, keep)| MaskedToken {
            token: r.token.clone(),
            score: cfg.score(r),
            keep,
        })
        .collect())
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(
    text: &str,
) -> Result<Vec<(usize, T)>, CurationError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| CurationError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("plain data serializes"));
        out.push('\n');
    }
    out
}
