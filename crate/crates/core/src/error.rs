// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use std::path::PathBuf;

use crate::value::ValueType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest error at line {line}: {message}")]
    Ingest { line: u64, message: String },

    #[error("dataset `{0}` already exists")]
    Conflict(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("dataset `{dataset}` has no column `{column}`")]
    UnknownColumn { dataset: String, column: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("cannot compare {left} with {right}")]
    TypeMismatch { left: ValueType, right: ValueType },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("corrupt payload in {path}: {message}")]
    Payload { path: PathBuf, message: String },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("graph structure error: {0}")]
    Structure(String),

    #[error("missing node economics for `{0}`")]
    MissingEconomics(String),

    #[error("node mismatch: {0}")]
    NodeMismatch(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by the environment or a bug.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io { .. } | Error::Payload { .. } | Error::Internal(_)
        )
    }
}
