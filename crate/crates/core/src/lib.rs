// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

pub mod clp;
pub mod counters;
pub mod dynamic;
pub mod error;
pub mod graph;
pub mod lake;
pub mod mmp;
pub mod optimizer;
pub mod pipeline;
pub mod rowhash;
pub mod schema;
pub mod synth;
pub mod truth;
pub mod value;

pub use error::{Error, Result};
