//! The twelve per-invitation metrics, computed from history strictly before each change.

mod index;

pub use index::{lifetime_rates, IndexError, Social, TemporalIndex};

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use chrono::SecondsFormat;
use rayon::prelude::*;

use crate::frame::Frame;
use crate::model::{modules_of, subsystem_of, AccountId, ChangeRecord, Timestamp};
use crate::prepare::ParticipationLabel;
use crate::stats::format_sig9;

/// Metric names in table order: human factors, reviewer experience, patch characteristics.
pub const METRIC_NAMES: [&str; 12] = [
    "concurrent_reviews",
    "remaining_reviews",
    "familiarity",
    "median_comments",
    "participation_rate",
    "received_invitations",
    "core_member",
    "reviewer_authoring_exp",
    "reviewer_reviewing_exp",
    "patch_size",
    "author_authoring_exp",
    "author_reviewing_exp",
];

/// Metrics of the human-factors dimension (excluded from the baseline model).
pub const HUMAN_FACTORS: [&str; 7] = [
    "concurrent_reviews",
    "remaining_reviews",
    "familiarity",
    "median_comments",
    "participation_rate",
    "received_invitations",
    "core_member",
];

pub fn proposed_variables() -> Vec<String> {
    METRIC_NAMES.iter().map(|s| s.to_string()).collect()
}

pub fn baseline_variables() -> Vec<String> {
    METRIC_NAMES.iter().filter(|m| !HUMAN_FACTORS.contains(m)).map(|s| s.to_string()).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("label references unknown change {0}")]
    UnknownChange(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewInstance {
    pub change_id: String,
    pub reviewer: AccountId,
    pub created_at: Timestamp,
    pub concurrent_reviews: u64,
    pub remaining_reviews: u64,
    pub familiarity: u64,
    pub median_comments: f64,
    pub participation_rate: f64,
    pub received_invitations: u64,
    pub core_member: bool,
    pub reviewer_authoring_exp: f64,
    pub reviewer_reviewing_exp: f64,
    pub patch_size: u64,
    pub author_authoring_exp: f64,
    pub author_reviewing_exp: f64,
    pub outcome: bool,
}

impl ReviewInstance {
    /// Metric values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [f64; 12] {
        [
            self.concurrent_reviews as f64,
            self.remaining_reviews as f64,
            self.familiarity as f64,
            self.median_comments,
            self.participation_rate,
            self.received_invitations as f64,
            if self.core_member { 1.0 } else { 0.0 },
            self.reviewer_authoring_exp,
            self.reviewer_reviewing_exp,
            self.patch_size as f64,
            self.author_authoring_exp,
            self.author_reviewing_exp,
        ]
    }
}

/// Churned lines (inserted + deleted) of the first revision.
pub fn patch_size(change: &ChangeRecord) -> u64 {
    change
        .first_revision()
        .map(|r| r.files.iter().map(|f| f.lines_inserted + f.lines_deleted).sum())
        .unwrap_or(0)
}

/// The context a candidate reviewer is scored in: who wrote what, where, and when.
#[derive(Debug, Clone)]
pub struct PatchContext {
    pub change_id: String,
    pub author: AccountId,
    pub subsystem: String,
    pub modules: BTreeSet<String>,
    pub patch_size: u64,
    pub created_at: Timestamp,
}

impl PatchContext {
    pub fn of_change(change: &ChangeRecord, index: &TemporalIndex) -> Self {
        PatchContext {
            change_id: change.change_id.clone(),
            author: change.owner.clone(),
            subsystem: subsystem_of(change, index.subsystem_rule()),
            modules: modules_of(change),
            patch_size: patch_size(change),
            created_at: change.created_at,
        }
    }
}

pub fn compute_instance(ctx: &PatchContext, reviewer: &str, outcome: bool, index: &TemporalIndex) -> ReviewInstance {
    let t = ctx.created_at;
    let (concurrent, remaining) = index.workload(reviewer, t);
    let social = index.social(reviewer, &ctx.author, &ctx.subsystem, t);
    let (r_auth, r_rev) = index.experience(reviewer, &ctx.modules, t);
    let (a_auth, a_rev) = index.experience(&ctx.author, &ctx.modules, t);
    ReviewInstance {
        change_id: ctx.change_id.clone(),
        reviewer: reviewer.to_string(),
        created_at: t,
        concurrent_reviews: concurrent,
        remaining_reviews: remaining,
        familiarity: social.familiarity,
        median_comments: social.median_comments,
        participation_rate: social.participation_rate,
        received_invitations: social.received_invitations,
        core_member: social.core_member,
        reviewer_authoring_exp: r_auth,
        reviewer_reviewing_exp: r_rev,
        patch_size: ctx.patch_size,
        author_authoring_exp: a_auth,
        author_reviewing_exp: a_rev,
        outcome,
    }
}

/// One instance per label, in label order; `changes` may be the full dataset.
pub fn build_instances(
    changes: &[ChangeRecord],
    labels: &[ParticipationLabel],
    index: &TemporalIndex,
) -> Result<Vec<ReviewInstance>, MetricsError> {
    let by_id: HashMap<&str, &ChangeRecord> = changes.iter().map(|c| (c.change_id.as_str(), c)).collect();
    let mut contexts: HashMap<&str, PatchContext> = HashMap::new();
    for l in labels {
        if !contexts.contains_key(l.change_id.as_str()) {
            let change = by_id.get(l.change_id.as_str()).ok_or_else(|| MetricsError::UnknownChange(l.change_id.clone()))?;
            contexts.insert(&l.change_id, PatchContext::of_change(change, index));
        }
    }
    Ok(labels
        .par_iter()
        .map(|l| compute_instance(&contexts[l.change_id.as_str()], &l.reviewer, l.responded, index))
        .collect())
}

pub fn instances_to_frame(instances: &[ReviewInstance]) -> Frame {
    let mut columns = vec![Vec::with_capacity(instances.len()); METRIC_NAMES.len()];
    for inst in instances {
        for (col, v) in columns.iter_mut().zip(inst.values()) {
            col.push(v);
        }
    }
    Frame {
        names: proposed_variables(),
        columns,
        outcome: instances.iter().map(|i| i.outcome).collect(),
        groups: instances.iter().map(|i| i.change_id.clone()).collect(),
        members: instances.iter().map(|i| i.reviewer.clone()).collect(),
    }
}

pub fn write_instances_csv<W: Write>(out: W, instances: &[ReviewInstance]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["change_id", "reviewer", "created_at"];
    header.extend(METRIC_NAMES);
    header.push("outcome");
    w.write_record(&header)?;
    for inst in instances {
        let mut row = vec![
            inst.change_id.clone(),
            inst.reviewer.clone(),
            inst.created_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        ];
        for (name, v) in METRIC_NAMES.iter().zip(inst.values()) {
            row.push(match *name {
                "core_member" => inst.core_member.to_string(),
                _ => format_sig9(v),
            });
        }
        row.push(inst.outcome.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
