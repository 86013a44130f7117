//! Dataset CSV: one series per row, `id,label,v1,v2,...`, no header.
//! Labels are `normal`, `anomalous` or `?`. Rows may differ in length.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{Label, TimeSeries};

fn parse_label(token: &str, line: usize) -> Result<Label> {
    match token.trim() {
        "normal" => Ok(Label::Normal),
        "anomalous" => Ok(Label::Anomalous),
        "?" => Ok(Label::Unlabeled),
        other => Err(Error::UnknownLabelToken {
            line,
            token: other.to_string(),
        }),
    }
}

/// Parses dataset rows from any reader. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_csv<R: Read>(reader: R) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 3 {
            return Err(Error::MalformedRow {
                line,
                reason: "expected `id,label,v1[,v2...]`".into(),
            });
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty series id".into(),
            });
        }
        let label = parse_label(&record[1], line)?;
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(k, tok)| match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::MalformedRow {
                    line,
                    reason: format!("sample {} (`{tok}`) is not a finite number", k + 1),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TimeSeries {
            id,
            values,
            label: Some(label),
        });
    }
    Ok(out)
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    parse_csv(File::open(path)?)
}

pub fn write_csv<W: Write>(writer: W, series: &[TimeSeries]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    for s in series {
        let label = s.label.unwrap_or(Label::Unlabeled).as_token();
        let mut row = vec![s.id.clone(), label.to_string()];
        row.extend(s.values.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
