//! Predictive performance: threshold-free and threshold measures, effect sizes and the
//! out-of-sample bootstrap.

mod bootstrap;

pub use bootstrap::{
    iteration_rng, out_of_sample_bootstrap, resample, BootstrapConfig, BootstrapReport, MeasureSummary,
    MAX_ATTEMPTS_PER_ITERATION,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::splinefit::SplineFitError;
use crate::stats::midranks;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{0} requires both outcome classes")]
    MissingClass(&'static str),
    #[error("scores and labels differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("baseline value is zero; relative improvement undefined")]
    ZeroBaseline,
    #[error("no instance is predicted negative at threshold {0}")]
    NoPredictedNegatives(f64),
    #[error("bootstrap iteration {index} failed after {attempts} draws: {message}")]
    Bootstrap { index: usize, attempts: usize, message: String },
    #[error(transparent)]
    Fit(#[from] SplineFitError),
}

fn check_len(scores: &[f64], labels: &[bool]) -> Result<(), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::Length(scores.len(), labels.len()));
    }
    Ok(())
}

/// Probability that a random positive outscores a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_len(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::MissingClass("auc"));
    }
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

pub fn brier(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    check_len(scores, labels)?;
    if scores.is_empty() {
        return Ok(0.0);
    }
    let ss: f64 = scores.iter().zip(labels).map(|(s, &l)| (s - if l { 1.0 } else { 0.0 }).powi(2)).sum();
    Ok(ss / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

/// Counts with "responded" as the positive class and `score >= threshold` predicting it.
pub fn confusion(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Confusion, EvalError> {
    check_len(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl Confusion {
    pub fn prf(&self) -> Prf {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        Prf { precision, recall, f_measure: f_measure(precision, recall) }
    }
}

pub fn prf(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Prf, EvalError> {
    Ok(confusion(scores, labels, threshold)?.prf())
}

/// TN / (TN + FN) among instances predicted not to respond.
pub fn negative_predictive_value(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64, EvalError> {
    let c = confusion(scores, labels, threshold)?;
    if c.tn + c.fn_ == 0 {
        return Err(EvalError::NoPredictedNegatives(threshold));
    }
    Ok(ratio(c.tn, c.tn + c.fn_))
}

/// Signed relative change `(proposed − baseline) / baseline`.
pub fn improvement(proposed: f64, baseline: f64) -> Result<f64, EvalError> {
    if baseline == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    Ok((proposed - baseline) / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of_delta(delta: f64) -> Self {
        match delta.abs() {
            d if d < 0.147 => Magnitude::Negligible,
            d if d < 0.33 => Magnitude::Small,
            d if d < 0.474 => Magnitude::Medium,
            _ => Magnitude::Large,
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        })
    }
}

/// `(#{a > b} − #{a < b}) / (|a||b|)` with its magnitude label.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> (f64, Magnitude) {
    if a.is_empty() || b.is_empty() {
        return (0.0, Magnitude::Negligible);
    }
    let mut sorted = b.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut greater, mut less) = (0u64, 0u64);
    for &x in a {
        let below = sorted.partition_point(|&v| v < x);
        let not_above = sorted.partition_point(|&v| v <= x);
        greater += below as u64;
        less += (sorted.len() - not_above) as u64;
    }
    let delta = (greater as f64 - less as f64) / (a.len() as f64 * b.len() as f64);
    (delta, Magnitude::of_delta(delta))
}

/// One invited reviewer of a change with the model score and the observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub reviewer: String,
    pub score: f64,
    pub responded: bool,
}

/// Reviewers ranked by descending score, ties by reviewer id.
pub fn rank_scored(candidates: &mut [Scored]) {
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.reviewer.cmp(&b.reviewer)));
}

/// Share of changes where one of the `k` best-scored invitees responded.
pub fn topk_accuracy(changes: &[Vec<Scored>], k: usize) -> f64 {
    if changes.is_empty() {
        return 0.0;
    }
    let hits = changes
        .iter()
        .filter(|c| {
            let mut ranked = c.to_vec();
            rank_scored(&mut ranked);
            ranked.iter().take(k).any(|s| s.responded)
        })
        .count();
    hits as f64 / changes.len() as f64
}

#[cfg(test)]
mod tests;
