// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lake::{validate_columns, ColumnDef, Row};
use crate::value::{TypeInference, Value, ValueType};

/// Reads a comma-delimited file (or every `*.csv` in a directory, sorted by
/// name) and returns typed columns and rows.
pub(crate) fn read_delimited(source: &Path) -> Result<(Vec<ColumnDef>, Vec<Row>)> {
    let files = source_files(source)?;
    let mut header: Option<Vec<String>> = None;
    let mut raw: Vec<Vec<String>> = Vec::new();
    for file in &files {
        let (file_header, records) = read_file(file)?;
        match &header {
            None => header = Some(file_header),
            Some(h) if *h == file_header => {}
            Some(_) => {
                return Err(Error::Ingest {
                    line: 1,
                    message: format!("{} has a different header", file.display()),
                })
            }
        }
        raw.extend(records);
    }
    let header = header.unwrap_or_default();

    let mut inference = vec![TypeInference::default(); header.len()];
    for record in &raw {
        for (inf, cell) in inference.iter_mut().zip(record) {
            inf.observe(cell);
        }
    }
    let columns: Vec<ColumnDef> = header
        .into_iter()
        .zip(&inference)
        .map(|(path, inf)| ColumnDef::new(path, inf.resolve()))
        .collect();
    validate_columns(&columns)?;

    let rows = raw
        .into_iter()
        .map(|record| {
            columns
                .iter()
                .zip(record)
                .map(|(c, cell)| typed(c.ty, cell))
                .collect()
        })
        .collect();
    Ok((columns, rows))
}

fn typed(ty: ValueType, cell: String) -> Value {
    if ty == ValueType::Text && cell != crate::value::NULL_TOKEN {
        return Value::Text(cell);
    }
    ty.parse(&cell)
        .expect("inferred type accepts every non-null cell of its column")
}

fn source_files(source: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(source).map_err(|e| Error::io(source, e))?;
    if !meta.is_dir() {
        return Ok(vec![source.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(source).map_err(|e| Error::io(source, e))? {
        let path = entry.map_err(|e| Error::io(source, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Ingest {
            line: 0,
            message: format!("no .csv files in {}", source.display()),
        });
    }
    Ok(files)
}

fn read_file(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec.map_err(|e| csv_error(path, e))?.iter().map(str::to_string).collect(),
        None => {
            return Err(Error::Ingest {
                line: 1,
                message: format!("{} has no header row", path.display()),
            })
        }
    };
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != header.len() {
            return Err(Error::Ingest {
                line: rec.position().map_or(0, |p| p.line()),
                message: format!(
                    "expected {} fields, found {} in {}",
                    header.len(),
                    rec.len(),
                    path.display()
                ),
            });
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Ingest {
            line,
            message: format!("{kind:?}"),
        },
    }
}
