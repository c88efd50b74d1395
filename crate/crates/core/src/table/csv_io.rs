use super::{text_cell, ColumnMeta, Table, TableError};

/// Reads comma-separated UTF-8 text into an all-text table named "table".
///
/// Without a header, columns are named `col_0`, `col_1`, ...
pub fn parse_csv(bytes: &[u8], has_header: bool) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(bytes);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => TableError::MalformedCsv(format!(
                "ragged row: expected {expected_len} fields, found {len}"
            )),
            csv::ErrorKind::Utf8 { .. } => TableError::MalformedCsv("invalid UTF-8".to_string()),
            _ => TableError::MalformedCsv(e.to_string()),
        })?;
        records.push(rec);
    }
    let mut iter = records.into_iter();
    let first = iter.next().ok_or(TableError::EmptyInput)?;
    let (columns, first_row) = if has_header {
        let cols = first
            .iter()
            .enumerate()
            .map(|(j, h)| {
                let h = h.trim();
                ColumnMeta::text(if h.is_empty() {
                    format!("col_{j}")
                } else {
                    h.to_string()
                })
            })
            .collect();
        (cols, None)
    } else {
        let cols = (0..first.len())
            .map(|j| ColumnMeta::text(format!("col_{j}")))
            .collect();
        (cols, Some(first))
    };
    let rows: Vec<Vec<_>> = first_row
        .into_iter()
        .chain(iter)
        .map(|r| r.iter().map(text_cell).collect())
        .collect();
    if rows.is_empty() {
        return Err(TableError::EmptyInput);
    }
    Table::new("table", columns, rows)
}

/// Writes the header and rendered cells; Missing becomes an empty field.
pub fn to_csv(table: &Table) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(table.columns().iter().map(|c| c.name.as_str()))
        .expect("in-memory write");
    for row in table.rendered_rows() {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("input was UTF-8")
}
