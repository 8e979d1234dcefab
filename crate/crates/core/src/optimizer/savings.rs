// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The Lakeprune Authors

use serde::Serialize;

use super::{econ_map, CostModel, NodeEconomics, RetentionPlan};
use crate::error::{Error, Result};

/// Weeks per month, times 100.
pub const WEEKS_PER_MONTH_X100: u64 = 433;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SavingsReport {
    pub horizon_months: u32,
    pub deleted: usize,
    pub bytes_deleted: u64,
    /// Storage and maintenance no longer paid, over the horizon.
    pub retention_saved: f64,
    /// Expected cost of rebuilding deleted datasets when accessed, over the horizon.
    pub reconstruction_cost: f64,
    pub net_savings: f64,
    pub rows_deleted: u64,
    /// Rows no longer scanned by regular readers, per month.
    pub row_scans_saved_per_month: f64,
    pub row_scans_saved: f64,
}

/// Projects the effect of `plan` over `horizon_months`, with each deleted
/// dataset otherwise read in full `accesses_per_week` times per week.
pub fn savings_report(
    plan: &RetentionPlan,
    model: &CostModel,
    econ: &[NodeEconomics],
    horizon_months: u32,
    accesses_per_week: f64,
) -> Result<SavingsReport> {
    if !(accesses_per_week.is_finite() && accesses_per_week >= 0.0) {
        return Err(Error::InvalidParameter("accesses per week must be nonnegative".into()));
    }
    let econ = econ_map(econ)?;
    let get = |n: &str| econ.get(n).ok_or_else(|| Error::MissingEconomics(n.to_string()));
    let mut report = SavingsReport {
        horizon_months,
        deleted: plan.deletions.len(),
        bytes_deleted: 0,
        retention_saved: 0.0,
        reconstruction_cost: 0.0,
        net_savings: 0.0,
        rows_deleted: 0,
        row_scans_saved_per_month: 0.0,
        row_scans_saved: 0.0,
    };
    for name in &plan.deletions {
        let child = get(name)?;
        let via = plan
            .reconstruct_via
            .iter()
            .find(|r| &r.child == name)
            .ok_or_else(|| Error::Structure(format!("deleted `{name}` has no rebuild parent")))?;
        let parent = get(&via.parent)?;
        report.bytes_deleted += child.size_bytes;
        report.rows_deleted += child.rows;
        report.retention_saved += model.retention_cost(child);
        report.reconstruction_cost +=
            child.access_freq * model.reconstruction_cost(parent.size_bytes, child.size_bytes);
    }
    let h = f64::from(horizon_months);
    report.retention_saved *= h;
    report.reconstruction_cost *= h;
    report.net_savings = report.retention_saved - report.reconstruction_cost;
    let (per_month, total) = row_scans(report.rows_deleted, accesses_per_week, horizon_months);
    report.row_scans_saved_per_month = per_month;
    report.row_scans_saved = total;
    Ok(report)
}

/// Integer arithmetic when the access rate is whole, so round figures stay exact.
fn row_scans(rows: u64, accesses_per_week: f64, months: u32) -> (f64, f64) {
    if accesses_per_week.fract() == 0.0 && accesses_per_week < 1e9 {
        let base = rows as u128 * accesses_per_week as u128 * WEEKS_PER_MONTH_X100 as u128;
        let per_month = base as f64 / 100.0;
        let total = (base * months as u128) as f64 / 100.0;
        (per_month, total)
    } else {
        let per_month = rows as f64 * accesses_per_week * WEEKS_PER_MONTH_X100 as f64 / 100.0;
        (per_month, per_month * f64::from(months))
    }
}
