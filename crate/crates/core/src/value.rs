// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

//! Cell values, their type tags, canonical rendering and the binary framing
//! shared by partition payloads and row hashing.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical token for a missing value, both in delimited input and in renderings.
pub const NULL_TOKEN: &str = "\\N";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Integer,
    Float,
    Timestamp,
    Text,
}

impl ValueType {
    pub const ALL: [ValueType; 4] = [
        ValueType::Integer,
        ValueType::Float,
        ValueType::Timestamp,
        ValueType::Text,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ValueType::Integer => "integer",
            ValueType::Float => "float",
            ValueType::Timestamp => "timestamp",
            ValueType::Text => "text",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ValueType::Integer | ValueType::Float)
    }

    /// Parses a raw cell as this type. `\N` always parses to [`Value::Null`].
    pub fn parse(&self, raw: &str) -> Option<Value> {
        if raw == NULL_TOKEN {
            return Some(Value::Null);
        }
        match self {
            ValueType::Integer => raw.parse::<i64>().ok().map(Value::Int),
            ValueType::Float => raw
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(Value::Float),
            ValueType::Timestamp => parse_timestamp(raw).map(Value::Timestamp),
            ValueType::Text => Some(Value::Text(raw.to_string())),
        }
    }

    fn tag(&self) -> u8 {
        match self {
            ValueType::Integer => TAG_INT,
            ValueType::Float => TAG_FLOAT,
            ValueType::Text => TAG_TEXT,
            ValueType::Timestamp => TAG_TIMESTAMP,
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
    /// Microseconds since the Unix epoch, UTC.
    Timestamp(i64),
}

const TAG_NULL: u8 = 0;
const TAG_INT: u8 = 1;
const TAG_FLOAT: u8 = 2;
const TAG_TEXT: u8 = 3;
const TAG_TIMESTAMP: u8 = 4;

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn value_type(&self) -> Option<ValueType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ValueType::Integer),
            Value::Float(_) => Some(ValueType::Float),
            Value::Text(_) => Some(ValueType::Text),
            Value::Timestamp(_) => Some(ValueType::Timestamp),
        }
    }

    fn tag(&self) -> u8 {
        self.value_type().map_or(TAG_NULL, |t| t.tag())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Deterministic text form: base-10 integers, shortest round-trip floats,
    /// RFC-3339 UTC timestamps and `\N` for null.
    pub fn canonical(&self) -> String {
        match self {
            Value::Null => NULL_TOKEN.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format!("{f:?}"),
            Value::Text(s) => s.clone(),
            Value::Timestamp(us) => render_timestamp(*us),
        }
    }

    /// Total order within one type tag. Null sorts before everything; any other
    /// mix of tags is an error.
    pub fn try_cmp(&self, other: &Value) -> Result<Ordering> {
        match (self, other) {
            (Value::Null, Value::Null) => Ok(Ordering::Equal),
            (Value::Null, _) => Ok(Ordering::Less),
            (_, Value::Null) => Ok(Ordering::Greater),
            (Value::Int(a), Value::Int(b)) => Ok(a.cmp(b)),
            (Value::Float(a), Value::Float(b)) => Ok(a.total_cmp(b)),
            (Value::Text(a), Value::Text(b)) => Ok(a.cmp(b)),
            (Value::Timestamp(a), Value::Timestamp(b)) => Ok(a.cmp(b)),
            (a, b) => Err(Error::TypeMismatch {
                left: a.value_type().expect("non-null"),
                right: b.value_type().expect("non-null"),
            }),
        }
    }

    /// Appends the tagged, length-prefixed canonical rendering to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.tag());
        match self {
            Value::Null => out.extend_from_slice(&0u32.to_le_bytes()),
            Value::Text(s) => push_bytes(out, s.as_bytes()),
            other => push_bytes(out, other.canonical().as_bytes()),
        }
    }

    /// Decodes one value from the front of `buf`, returning it and the bytes consumed.
    pub fn decode(buf: &[u8]) -> std::result::Result<(Value, usize), String> {
        if buf.len() < 5 {
            return Err("truncated value header".into());
        }
        let tag = buf[0];
        let len = u32::from_le_bytes(buf[1..5].try_into().unwrap()) as usize;
        let end = 5 + len;
        if buf.len() < end {
            return Err("truncated value body".into());
        }
        let body = std::str::from_utf8(&buf[5..end]).map_err(|e| e.to_string())?;
        let ty = match tag {
            TAG_NULL => return Ok((Value::Null, end)),
            TAG_INT => ValueType::Integer,
            TAG_FLOAT => ValueType::Float,
            TAG_TEXT => return Ok((Value::Text(body.to_string()), end)),
            TAG_TIMESTAMP => ValueType::Timestamp,
            t => return Err(format!("unknown value tag {t}")),
        };
        let value = ty
            .parse(body)
            .ok_or_else(|| format!("`{body}` is not a valid {ty}"))?;
        Ok((value, end))
    }
}

fn push_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Timestamp(a), Value::Timestamp(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.tag().hash(state);
        match self {
            Value::Null => {}
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Text(s) => s.hash(state),
            Value::Timestamp(t) => t.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

pub fn render_timestamp(micros: i64) -> String {
    match DateTime::<Utc>::from_timestamp_micros(micros) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        None => micros.to_string(),
    }
}

/// Accepts RFC-3339, `YYYY-MM-DD HH:MM:SS[.f]` (taken as UTC) and bare dates.
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp_micros());
    }
    if let Ok(ndt) = NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%.f") {
        return Some(ndt.and_utc().timestamp_micros());
    }
    if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp_micros());
    }
    None
}

/// Narrowest type consistent with every non-null cell, by precedence
/// Integer < Float < Timestamp < Text. Columns with no non-null cell are Text.
#[derive(Debug, Clone, Copy)]
pub struct TypeInference {
    int_ok: bool,
    float_ok: bool,
    ts_ok: bool,
    seen: bool,
}

impl Default for TypeInference {
    fn default() -> Self {
        TypeInference {
            int_ok: true,
            float_ok: true,
            ts_ok: true,
            seen: false,
        }
    }
}

impl TypeInference {
    pub fn observe(&mut self, raw: &str) {
        if raw == NULL_TOKEN {
            return;
        }
        self.seen = true;
        if self.int_ok && ValueType::Integer.parse(raw).is_none() {
            self.int_ok = false;
        }
        if !self.int_ok && self.float_ok && ValueType::Float.parse(raw).is_none() {
            self.float_ok = false;
        }
        if !self.float_ok && self.ts_ok && ValueType::Timestamp.parse(raw).is_none() {
            self.ts_ok = false;
        }
    }

    pub fn resolve(&self) -> ValueType {
        if !self.seen {
            ValueType::Text
        } else if self.int_ok {
            ValueType::Integer
        } else if self.float_ok {
            ValueType::Float
        } else if self.ts_ok {
            ValueType::Timestamp
        } else {
            ValueType::Text
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn infer(cells: &[&str]) -> ValueType {
        let mut inf = TypeInference::default();
        cells.iter().for_each(|c| inf.observe(c));
        inf.resolve()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(Value::Int(-42).canonical(), "-42");
        assert_eq!(Value::Float(5.0).canonical(), "5.0");
        assert_eq!(Value::Float(0.1).canonical(), "0.1");
        assert_eq!(Value::Null.canonical(), "\\N");
        assert_eq!(Value::Timestamp(0).canonical(), "1970-01-01T00:00:00Z");
        assert_eq!(
            Value::Timestamp(1_500_000).canonical(),
            "1970-01-01T00:00:01.500Z"
        );
    }

    #[test]
    fn float_rendering_round_trips() {
        for f in [0.1, 1e21, -3.25e-9, 123456.789, f64::MAX] {
            let v = Value::Float(f);
            assert_eq!(ValueType::Float.parse(&v.canonical()), Some(v));
        }
    }

    #[test]
    fn inference_precedence() {
        assert_eq!(infer(&["1", "2", "\\N"]), ValueType::Integer);
        assert_eq!(infer(&["1", "2.5"]), ValueType::Float);
        assert_eq!(infer(&["2024-01-01", "2024-02-03T04:05:06Z"]), ValueType::Timestamp);
        assert_eq!(infer(&["1", "x"]), ValueType::Text);
        assert_eq!(infer(&["nan"]), ValueType::Text);
        assert_eq!(infer(&["\\N"]), ValueType::Text);
    }

    #[test]
    fn mixed_tags_do_not_compare() {
        assert!(Value::Int(1).try_cmp(&Value::Float(1.0)).is_err());
        assert_eq!(
            Value::Null.try_cmp(&Value::Int(1)).unwrap(),
            Ordering::Less
        );
    }

    #[test]
    fn encode_decode() {
        let vals = [
            Value::Null,
            Value::Int(7),
            Value::Float(-0.5),
            Value::Text("a,b".into()),
            Value::Timestamp(1_700_000_000_123_456),
        ];
        let mut buf = Vec::new();
        vals.iter().for_each(|v| v.encode_into(&mut buf));
        let mut at = 0;
        for v in &vals {
            let (got, used) = Value::decode(&buf[at..]).unwrap();
            assert_eq!(&got, v);
            at += used;
        }
        assert_eq!(at, buf.len());
    }
}
