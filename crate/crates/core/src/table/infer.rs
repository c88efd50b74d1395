use chrono::{DateTime, NaiveDate, NaiveDateTime};

use super::{Cell, ColumnMeta, DType, Table};

/// Most specific first.
const PRIORITY: [DType; 4] = [DType::Bool, DType::Int, DType::Float, DType::Datetime];

/// Accepts ISO-8601 dates (`YYYY-MM-DD`) and date-times
/// (`YYYY-MM-DDTHH:MM:SS[.fff][offset]`).
pub fn parse_datetime(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() == 10 {
        return NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok() && b[4] == b'-' && b[7] == b'-';
    }
    if b.len() < 19 || b[10] != b'T' || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f").is_ok()
        || DateTime::parse_from_rfc3339(s).is_ok()
}

/// Assigns each column the most specific dtype under which every non-Missing
/// cell parses, falling back to text, and re-types the cells.
pub fn infer_dtypes(t: &Table) -> Table {
    let rendered = t.rendered_rows();
    let mut columns: Vec<ColumnMeta> = t.columns().to_vec();
    let mut typed: Vec<Vec<Cell>> = vec![Vec::with_capacity(t.n_cols()); t.n_rows()];
    for (j, col) in columns.iter_mut().enumerate() {
        let texts: Vec<Option<&str>> = t
            .column(j)
            .zip(&rendered)
            .map(|(c, r)| (!c.is_missing()).then_some(r[j].as_str()))
            .collect();
        let any_value = texts.iter().any(Option::is_some);
        let dtype = PRIORITY
            .into_iter()
            .find(|&d| {
                any_value
                    && texts
                        .iter()
                        .flatten()
                        .all(|s| matches!(Cell::parse_as(s, d), Some(c) if !c.is_missing()))
            })
            .unwrap_or(DType::Text);
        col.dtype = dtype;
        for (i, text) in texts.iter().enumerate() {
            let cell = match text {
                None => Cell::Missing,
                Some(s) => Cell::parse_as(s, dtype).expect("dtype chosen so every cell parses"),
            };
            typed[i].push(cell);
        }
    }
    Table::new(t.name(), columns, typed).expect("shape preserved")
}

/// Most specific dtype of a single rendered value.
pub(crate) fn classify(text: &str) -> DType {
    PRIORITY
        .into_iter()
        .find(|&d| matches!(Cell::parse_as(text, d), Some(c) if !c.is_missing()))
        .unwrap_or(DType::Text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_col(values: &[&str]) -> Table {
        let rows: Vec<Vec<&str>> = values.iter().map(|v| vec![*v]).collect();
        infer_dtypes(&Table::from_text("t", &["c"], &rows).unwrap())
    }

    #[test]
    fn integers() {
        let t = one_col(&["1", "2", "3"]);
        assert_eq!(t.columns()[0].dtype, DType::Int);
        assert_eq!(t.cell(2, 0), &Cell::Int(3));
    }

    #[test]
    fn float_when_any_fraction() {
        assert_eq!(one_col(&["1", "2.5"]).columns()[0].dtype, DType::Float);
    }

    #[test]
    fn bool_lexicon_is_strict() {
        assert_eq!(one_col(&["true", "false"]).columns()[0].dtype, DType::Bool);
        assert_eq!(one_col(&["true", "yes"]).columns()[0].dtype, DType::Text);
        assert_eq!(one_col(&["True"]).columns()[0].dtype, DType::Text);
    }

    #[test]
    fn datetimes() {
        assert_eq!(
            one_col(&["2024-01-05", "2023-12-31T10:00:00"]).columns()[0].dtype,
            DType::Datetime
        );
        assert_eq!(
            one_col(&["2024-01-05T10:00:00+02:00"]).columns()[0].dtype,
            DType::Datetime
        );
        assert_eq!(one_col(&["2024-1-5"]).columns()[0].dtype, DType::Text);
        assert_eq!(one_col(&["05/01/2024"]).columns()[0].dtype, DType::Text);
    }

    #[test]
    fn missing_ignored_and_all_missing_is_text() {
        let t = one_col(&["4", "NaN", "-"]);
        assert_eq!(t.columns()[0].dtype, DType::Int);
        assert_eq!(t.cell(1, 0), &Cell::Missing);
        assert_eq!(one_col(&["", "null"]).columns()[0].dtype, DType::Text);
    }

    #[test]
    fn non_finite_floats_are_text() {
        assert_eq!(one_col(&["inf", "1.0"]).columns()[0].dtype, DType::Text);
    }

    #[test]
    fn idempotent() {
        let t = one_col(&["1.5", "2"]);
        assert_eq!(infer_dtypes(&t), t);
    }
}
