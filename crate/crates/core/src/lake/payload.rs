// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Partition payloads: a flat sequence of `u32` length-prefixed rows, each row
//! the concatenated tagged encoding of its values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::value::Value;

pub type Row = Vec<Value>;

pub(crate) fn encode_rows<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Vec<u8> {
    let mut out = Vec::new();
    let mut scratch = Vec::new();
    for row in rows {
        scratch.clear();
        for v in row {
            v.encode_into(&mut scratch);
        }
        out.extend_from_slice(&(scratch.len() as u32).to_le_bytes());
        out.extend_from_slice(&scratch);
    }
    out
}

pub(crate) fn decode_rows(path: &Path, buf: &[u8], width: usize) -> Result<Vec<Row>> {
    let corrupt = |message: String| Error::Payload {
        path: path.to_path_buf(),
        message,
    };
    let mut rows = Vec::new();
    let mut pos = 0;
    while pos < buf.len() {
        let header = buf
            .get(pos..pos + 4)
            .ok_or_else(|| corrupt(format!("truncated row header at byte {pos}")))?;
        let len = u32::from_le_bytes(header.try_into().unwrap()) as usize;
        pos += 4;
        let body = buf
            .get(pos..pos + len)
            .ok_or_else(|| corrupt(format!("truncated row at byte {pos}")))?;
        pos += len;
        let mut row = Vec::with_capacity(width);
        let mut at = 0;
        while at < body.len() {
            let (v, used) = Value::decode(&body[at..]).map_err(corrupt)?;
            row.push(v);
            at += used;
        }
        if row.len() != width {
            return Err(corrupt(format!(
                "row {} has {} values, expected {width}",
                rows.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}
