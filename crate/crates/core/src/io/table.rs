use std::path::Path;

use crate::error::{Error, Result};
use crate::gp::Dataset;

use super::config::{Column, DatasetConfig};

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message,
    }
}

fn resolve(col: &Column, header: Option<&csv::StringRecord>, width: usize, path: &Path) -> Result<usize> {
    let idx = match (col, header) {
        (Column::Index(i), _) => *i,
        (Column::Name(n), Some(h)) => h
            .iter()
            .position(|c| c.trim() == n)
            .ok_or_else(|| parse_error(path, format!("no column named `{n}` in the header")))?,
        (Column::Name(n), None) => return Err(parse_error(path, format!("column `{n}` named but the file has no header"))),
    };
    if idx >= width {
        return Err(parse_error(path, format!("column {col} out of range for {width} columns")));
    }
    Ok(idx)
}

/// Reads the selected columns of a CSV file into a dataset, keeping row
/// order. Every selected cell must parse as a finite number.
pub fn ingest_csv(spec: &DatasetConfig) -> Result<Dataset> {
    let path = spec.path.as_path();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(spec.has_header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, e.to_string()))?;
    let header = if spec.has_header {
        Some(reader.headers().map_err(|e| parse_error(path, e.to_string()))?.clone())
    } else {
        None
    };
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut outputs: Vec<f64> = Vec::new();
    let mut cols: Option<(Vec<usize>, usize)> = None;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if cols.is_none() {
            let width = header.as_ref().map_or(rec.len(), |h| h.len());
            let ins = spec
                .input_columns
                .iter()
                .map(|c| resolve(c, header.as_ref(), width, path))
                .collect::<Result<Vec<_>>>()?;
            cols = Some((ins, resolve(&spec.output_column, header.as_ref(), width, path)?));
        }
        let (ins, out) = cols.as_ref().expect("resolved above");
        let cell = |i: usize| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            if raw.is_empty() {
                return Err(parse_error(path, format!("line {line}, column {}: missing value", i + 1)));
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(parse_error(path, format!("line {line}, column {}: non-finite value `{raw}`", i + 1))),
                Err(_) => Err(parse_error(path, format!("line {line}, column {}: cannot parse `{raw}`", i + 1))),
            }
        };
        inputs.push(ins.iter().map(|&i| cell(i)).collect::<Result<_>>()?);
        outputs.push(cell(*out)?);
    }
    if outputs.is_empty() {
        return Err(parse_error(path, "empty dataset".into()));
    }
    Dataset::from_rows(&inputs, &outputs)
}

/// Numeric table with named columns, as written to CSV artifacts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Shortest decimal form that reads back to the same bits.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::Reader::from_path(path)?;
    let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| parse_error(path, format!("line {line}: cannot parse `{c}`"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
