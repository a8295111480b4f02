//! Patch selection, bot detection and participation labeling.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::model::{AccountId, ChangeRecord};

/// Thresholds for classifying an account as a CI bot from its messages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BotRule {
    pub min_matches: usize,
    pub match_ratio: f64,
}

impl Default for BotRule {
    fn default() -> Self {
        BotRule { min_matches: 20, match_ratio: 0.9 }
    }
}

fn build_status_pattern() -> Regex {
    Regex::new(r"(?i)build\s+(started|failed|successful)").expect("static pattern")
}

/// Known bots plus accounts that mostly post build-status messages.
pub fn detect_bots(changes: &[ChangeRecord], known: &BTreeSet<AccountId>, rule: BotRule) -> BTreeSet<AccountId> {
    let pattern = build_status_pattern();
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for m in changes.iter().flat_map(|c| &c.messages) {
        let entry = tally.entry(m.author.as_str()).or_default();
        entry.1 += 1;
        if pattern.is_match(&m.text) {
            entry.0 += 1;
        }
    }
    let mut bots = known.clone();
    for (author, (matches, total)) in tally {
        if matches >= rule.min_matches && matches as f64 >= rule.match_ratio * total as f64 {
            bots.insert(author.to_string());
        }
    }
    bots
}

/// Description marks VCS bookkeeping: contains "merge branch" or starts with the word "merge".
pub fn is_vcs_bookkeeping(description: &str) -> bool {
    let lower = description.to_lowercase();
    if lower.contains("merge branch") {
        return true;
    }
    lower
        .split_whitespace()
        .next()
        .map(|w| w.trim_end_matches(|c: char| !c.is_alphanumeric()) == "merge")
        .unwrap_or(false)
}

/// Invited reviewers that are neither bots nor the owner.
pub fn eligible_reviewers<'a>(change: &'a ChangeRecord, bots: &'a BTreeSet<AccountId>) -> impl Iterator<Item = &'a AccountId> {
    change.invited_reviewers.iter().filter(move |r| **r != change.owner && !bots.contains(*r))
}

/// Why a change was dropped from the studied set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    NotClosed,
    SelfReviewed,
    Bookkeeping,
}

pub fn exclusion_reason(change: &ChangeRecord, bots: &BTreeSet<AccountId>) -> Option<Exclusion> {
    if !change.status.is_closed() {
        Some(Exclusion::NotClosed)
    } else if eligible_reviewers(change, bots).next().is_none() {
        Some(Exclusion::SelfReviewed)
    } else if is_vcs_bookkeeping(&change.description) {
        Some(Exclusion::Bookkeeping)
    } else {
        None
    }
}

pub fn select_relevant(changes: &[ChangeRecord], bots: &BTreeSet<AccountId>) -> Vec<ChangeRecord> {
    changes.iter().filter(|c| exclusion_reason(c, bots).is_none()).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParticipationLabel {
    pub change_id: String,
    pub reviewer: AccountId,
    pub responded: bool,
}

/// Whether `reviewer` cast a non-zero vote or wrote a message on the change.
pub fn has_responded(change: &ChangeRecord, reviewer: &str) -> bool {
    change.votes.iter().any(|v| v.reviewer == reviewer && v.value != 0)
        || change.messages.iter().any(|m| m.author == reviewer)
}

pub fn label_participation(change: &ChangeRecord, bots: &BTreeSet<AccountId>) -> Vec<ParticipationLabel> {
    eligible_reviewers(change, bots)
        .map(|r| ParticipationLabel {
            change_id: change.change_id.clone(),
            reviewer: r.clone(),
            responded: has_responded(change, r),
        })
        .collect()
}

/// Counts at each data-preparation stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Funnel {
    pub loaded: usize,
    pub bots: usize,
    pub excluded_not_closed: usize,
    pub excluded_self_reviewed: usize,
    pub excluded_bookkeeping: usize,
    pub relevant: usize,
    pub labels: usize,
    pub responded: usize,
    pub not_responded: usize,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub bots: BTreeSet<AccountId>,
    pub relevant: Vec<ChangeRecord>,
    pub labels: Vec<ParticipationLabel>,
    pub funnel: Funnel,
}

/// Bot detection, relevant-patch selection and labeling in one pass.
pub fn prepare(changes: &[ChangeRecord], known_bots: &BTreeSet<AccountId>, rule: BotRule) -> Prepared {
    let bots = detect_bots(changes, known_bots, rule);
    let mut funnel = Funnel { loaded: changes.len(), bots: bots.len(), ..Funnel::default() };
    let mut relevant = Vec::new();
    for c in changes {
        match exclusion_reason(c, &bots) {
            Some(Exclusion::NotClosed) => funnel.excluded_not_closed += 1,
            Some(Exclusion::SelfReviewed) => funnel.excluded_self_reviewed += 1,
            Some(Exclusion::Bookkeeping) => funnel.excluded_bookkeeping += 1,
            None => relevant.push(c.clone()),
        }
    }
    let labels: Vec<ParticipationLabel> = relevant.iter().flat_map(|c| label_participation(c, &bots)).collect();
    funnel.relevant = relevant.len();
    funnel.labels = labels.len();
    funnel.responded = labels.iter().filter(|l| l.responded).count();
    funnel.not_responded = funnel.labels - funnel.responded;
    Prepared { bots, relevant, labels, funnel }
}

pub fn write_labels_csv<W: Write>(out: W, labels: &[ParticipationLabel]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for l in labels {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels_csv<R: io::Read>(input: R) -> csv::Result<Vec<ParticipationLabel>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn write_bots<W: Write>(mut out: W, bots: &BTreeSet<AccountId>) -> io::Result<()> {
    for b in bots {
        writeln!(out, "{b}")?;
    }
    Ok(())
}

/// One id per line; blank lines and `#` comments ignored.
pub fn parse_bot_list(text: &str) -> BTreeSet<AccountId> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
