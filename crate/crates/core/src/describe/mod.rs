//! Descriptive statistics of invitations and responses, and community composition.

mod hexbin;
mod kendall;

pub use hexbin::{hexbin, HexBin};
pub use kendall::{kendall_tau_b, TauMagnitude};

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::metrics::{lifetime_rates, TemporalIndex};
use crate::model::{AccountRef, Timestamp};
use crate::prepare::ParticipationLabel;
use crate::stats::{format_sig9, median, quantiles};

#[derive(Debug, thiserror::Error)]
pub enum DescribeError {
    #[error("need at least {need} values, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("vectors differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("all values tied: rank correlation undefined")]
    AllTied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeCounts {
    pub change_id: String,
    pub invited: usize,
    pub unresponded: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnrespondedSummary {
    pub changes: usize,
    pub changes_with_unresponded: usize,
    pub proportion_with_unresponded: f64,
    pub median_unresponded_proportion: f64,
    pub changes_without_responders: usize,
    pub per_change: Vec<ChangeCounts>,
}

/// Per-change invitation and silence counts, in order of first appearance.
pub fn unresponded_summary(labels: &[ParticipationLabel]) -> UnrespondedSummary {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut per_change: Vec<ChangeCounts> = Vec::new();
    for l in labels {
        let i = *slot.entry(&l.change_id).or_insert_with(|| {
            per_change.push(ChangeCounts { change_id: l.change_id.clone(), invited: 0, unresponded: 0, proportion: 0.0 });
            per_change.len() - 1
        });
        per_change[i].invited += 1;
        if !l.responded {
            per_change[i].unresponded += 1;
        }
    }
    for c in &mut per_change {
        c.proportion = c.unresponded as f64 / c.invited as f64;
    }
    let changes = per_change.len();
    let with = per_change.iter().filter(|c| c.unresponded > 0).count();
    let proportions: Vec<f64> = per_change.iter().map(|c| c.proportion).collect();
    UnrespondedSummary {
        changes,
        changes_with_unresponded: with,
        proportion_with_unresponded: if changes == 0 { 0.0 } else { with as f64 / changes as f64 },
        median_unresponded_proportion: if changes == 0 { 0.0 } else { median(&proportions) },
        changes_without_responders: per_change.iter().filter(|c| c.unresponded == c.invited).count(),
        per_change,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauReport {
    pub tau: f64,
    pub magnitude: TauMagnitude,
    pub n: usize,
}

/// Kendall τ-b between invited and unresponded counts, plus the hexagonal binning of the pairs.
pub fn invited_vs_unresponded(
    summary: &UnrespondedSummary,
    bin_width: f64,
) -> Result<(TauReport, Vec<HexBin>), DescribeError> {
    let x: Vec<f64> = summary.per_change.iter().map(|c| c.invited as f64).collect();
    let y: Vec<f64> = summary.per_change.iter().map(|c| c.unresponded as f64).collect();
    let (tau, magnitude) = kendall_tau_b(&x, &y)?;
    let points: Vec<(f64, f64)> = x.into_iter().zip(y).collect();
    Ok((TauReport { tau, magnitude, n: points.len() }, hexbin(&points, bin_width)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerRate {
    pub reviewer: String,
    pub responded: u64,
    pub received: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDistribution {
    pub reviewers: Vec<ReviewerRate>,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Lifetime participation rate of every reviewer invited before `as_of`.
pub fn participation_rate_distribution(index: &TemporalIndex, as_of: Timestamp) -> RateDistribution {
    let reviewers: Vec<ReviewerRate> = lifetime_rates(index, as_of)
        .into_iter()
        .map(|(reviewer, (responded, received))| ReviewerRate {
            reviewer,
            responded,
            received,
            rate: responded as f64 / received as f64,
        })
        .collect();
    let rates: Vec<f64> = reviewers.iter().map(|r| r.rate).collect();
    let (q1, median, q3) = if rates.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let q = quantiles(&rates, &[0.25, 0.5, 0.75]);
        (q[0], q[1], q[2])
    };
    RateDistribution { reviewers, q1, median, q3 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrgShare {
    pub organization: String,
    pub developers: usize,
    pub proportion: f64,
}

/// Lower-cased email domain; "unknown" when there is none.
pub fn organization_of(email: &str) -> String {
    match email.rsplit_once('@') {
        Some((_, domain)) if !domain.trim().is_empty() => domain.trim().to_lowercase(),
        _ => "unknown".to_string(),
    }
}

/// Developers per organization, largest first (ties by name).
pub fn org_diversity(accounts: &[AccountRef]) -> Vec<OrgShare> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for a in accounts {
        *counts.entry(organization_of(&a.email)).or_default() += 1;
    }
    let total = accounts.len() as f64;
    let mut out: Vec<OrgShare> = counts
        .into_iter()
        .map(|(organization, developers)| OrgShare { organization, developers, proportion: developers as f64 / total })
        .collect();
    out.sort_by(|a, b| b.developers.cmp(&a.developers).then_with(|| a.organization.cmp(&b.organization)));
    out
}

pub fn write_violin_csv<W: Write>(out: W, summary: &UnrespondedSummary) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["change_id", "invited", "unresponded", "proportion"])?;
    for c in &summary.per_change {
        w.write_record([c.change_id.as_str(), &c.invited.to_string(), &c.unresponded.to_string(), &format_sig9(c.proportion)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_hexbin_csv<W: Write>(out: W, bins: &[HexBin]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cx", "cy", "count"])?;
    for b in bins {
        w.write_record([format_sig9(b.cx), format_sig9(b.cy), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_org_csv<W: Write>(out: W, shares: &[OrgShare]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["organization", "developers", "proportion"])?;
    for s in shares {
        w.write_record([s.organization.as_str(), &s.developers.to_string(), &format_sig9(s.proportion)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rates_csv<W: Write>(out: W, dist: &RateDistribution) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["reviewer", "responded", "received", "rate"])?;
    for r in &dist.reviewers {
        w.write_record([r.reviewer.as_str(), &r.responded.to_string(), &r.received.to_string(), &format_sig9(r.rate)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
