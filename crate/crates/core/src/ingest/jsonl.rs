use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::model::{
    valid_vote_value, AccountRef, ChangeRecord, ChangeStatus, Dataset, FileChange, MessageRecord, RevisionRecord,
    Timestamp, VoteRecord,
};

#[derive(Debug, Default, Serialize, Deserialize)]
struct ChangeLine {
    change_id: Option<String>,
    project: Option<String>,
    created: Option<String>,
    closed: Option<String>,
    status: Option<String>,
    owner: Option<String>,
    #[serde(default)]
    subject: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    reviewers: Vec<String>,
    #[serde(default)]
    accounts: Vec<AccountLine>,
    #[serde(default)]
    messages: Vec<MessageLine>,
    #[serde(default)]
    votes: Vec<VoteLine>,
    revisions: Option<Vec<RevisionLine>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AccountLine {
    id: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    email: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct MessageLine {
    author: String,
    time: String,
    #[serde(default)]
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct VoteLine {
    reviewer: String,
    label: String,
    value: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RevisionLine {
    number: u32,
    time: String,
    #[serde(default)]
    files: Vec<FileLine>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileLine {
    path: String,
    #[serde(default)]
    ins: u64,
    #[serde(default)]
    del: u64,
}

const GERRIT_TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.f";

/// Parses ISO-8601 (any offset, normalized to UTC) or Gerrit's space-separated UTC form.
pub fn parse_timestamp(text: &str) -> Option<Timestamp> {
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.with_timezone(&Utc));
    }
    NaiveDateTime::parse_from_str(text, GERRIT_TIME_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f"))
        .ok()
        .map(|n| n.and_utc())
}

fn format_timestamp(t: &Timestamp) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn required<T>(value: Option<T>, line: usize, field: &str) -> Result<T, IngestError> {
    value.ok_or_else(|| IngestError::schema(line, format!("missing {field}")))
}

fn time_field(text: &str, line: usize, field: &str) -> Result<Timestamp, IngestError> {
    parse_timestamp(text).ok_or_else(|| IngestError::schema(line, format!("invalid {field} timestamp {text:?}")))
}

fn convert_line(raw: ChangeLine, line: usize) -> Result<(ChangeRecord, Vec<AccountRef>), IngestError> {
    let change_id = required(raw.change_id, line, "change_id")?;
    let project = required(raw.project, line, "project")?;
    let created_at = time_field(&required(raw.created, line, "created")?, line, "created")?;
    let status_text = required(raw.status, line, "status")?;
    let status: ChangeStatus = status_text.parse().map_err(|e| IngestError::schema(line, format!("{e}")))?;
    let owner = required(raw.owner, line, "owner")?;
    let revisions_raw = required(raw.revisions, line, "revisions")?;
    if change_id.is_empty() {
        return Err(IngestError::schema(line, "empty change_id"));
    }
    if project.is_empty() {
        return Err(IngestError::schema(line, "empty project"));
    }

    let closed_at = match raw.closed {
        Some(text) => Some(time_field(&text, line, "closed")?),
        None => None,
    };
    if status.is_closed() {
        match closed_at {
            None => return Err(IngestError::schema(line, "missing closed")),
            Some(c) if c < created_at => {
                return Err(IngestError::schema(line, "closed precedes created"));
            }
            _ => {}
        }
    }

    let mut messages = Vec::with_capacity(raw.messages.len());
    for m in raw.messages {
        let timestamp = time_field(&m.time, line, "message")?;
        if timestamp < created_at {
            return Err(IngestError::schema(line, format!("message by {} precedes change creation", m.author)));
        }
        messages.push(MessageRecord { author: m.author, timestamp, text: m.text });
    }

    let mut votes = Vec::with_capacity(raw.votes.len());
    for v in raw.votes {
        if !valid_vote_value(v.value) {
            return Err(IngestError::schema(line, format!("vote value {} out of range -2..+2", v.value)));
        }
        let timestamp = match v.time {
            Some(text) => time_field(&text, line, "vote")?,
            // Older dumps lack vote times: fall back to the voter's first message.
            None => messages
                .iter()
                .filter(|m| m.author == v.reviewer)
                .map(|m| m.timestamp)
                .min()
                .or(closed_at)
                .unwrap_or(created_at),
        };
        votes.push(VoteRecord { reviewer: v.reviewer, label: v.label, value: v.value as i8, timestamp });
    }

    if revisions_raw.is_empty() {
        return Err(IngestError::schema(line, "revisions is empty"));
    }
    let mut revisions = Vec::with_capacity(revisions_raw.len());
    for (i, r) in revisions_raw.into_iter().enumerate() {
        let expected_first = i == 0 && r.number != 1;
        let not_increasing = revisions.last().is_some_and(|p: &RevisionRecord| r.number <= p.number);
        if expected_first || not_increasing {
            return Err(IngestError::schema(line, "revision numbers must start at 1 and increase"));
        }
        revisions.push(RevisionRecord {
            number: r.number,
            created_at: time_field(&r.time, line, "revision")?,
            files: r
                .files
                .into_iter()
                .map(|f| FileChange { path: f.path, lines_inserted: f.ins, lines_deleted: f.del })
                .collect(),
        });
    }

    let accounts = raw
        .accounts
        .into_iter()
        .map(|a| AccountRef::new(a.id, a.name, a.email))
        .collect();

    let change = ChangeRecord {
        change_id,
        project,
        created_at,
        closed_at,
        status,
        owner,
        subject: raw.subject,
        description: raw.description,
        invited_reviewers: raw.reviewers.into_iter().collect(),
        messages,
        votes,
        revisions,
    };
    Ok((change, accounts))
}

/// Parses JSONL text (one change per line) into a validated, sorted dataset.
pub fn parse_dataset(text: &str) -> Result<Dataset, IngestError> {
    let mut dataset = Dataset::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut line_of: Vec<usize> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: ChangeLine =
            serde_json::from_str(raw_line).map_err(|e| IngestError::schema(line, format!("invalid JSON: {e}")))?;
        let (change, accounts) = convert_line(raw, line)?;
        if !seen.insert(change.change_id.clone()) {
            return Err(IngestError::DuplicateChange { line, change_id: change.change_id });
        }
        for acc in accounts {
            if acc.account_id.is_empty() {
                return Err(IngestError::schema(line, "empty account id"));
            }
            dataset
                .accounts
                .entry(acc.account_id.clone())
                .and_modify(|known| {
                    if known.display_name.is_empty() {
                        known.display_name = acc.display_name.clone();
                    }
                    if known.email.is_empty() {
                        known.email = acc.email.clone();
                    }
                })
                .or_insert(acc);
        }
        dataset.changes.push(change);
        line_of.push(line);
    }

    for (change, line) in dataset.changes.iter().zip(&line_of) {
        if let Some(missing) = change.referenced_accounts().into_iter().find(|id| !dataset.accounts.contains_key(*id)) {
            return Err(IngestError::schema(*line, format!("unknown account {missing}")));
        }
    }

    dataset.sort_changes();
    Ok(dataset)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, IngestError> {
    let text = fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_dataset(&text)
}

/// Canonical single-line JSON for one change, carrying every account it references.
pub fn change_to_line(change: &ChangeRecord, accounts: &BTreeMap<String, AccountRef>) -> String {
    let referenced: BTreeSet<&str> = change.referenced_accounts();
    let line = ChangeLine {
        change_id: Some(change.change_id.clone()),
        project: Some(change.project.clone()),
        created: Some(format_timestamp(&change.created_at)),
        closed: change.closed_at.as_ref().map(format_timestamp),
        status: Some(change.status.as_str().to_string()),
        owner: Some(change.owner.clone()),
        subject: change.subject.clone(),
        description: change.description.clone(),
        reviewers: change.invited_reviewers.iter().cloned().collect(),
        accounts: referenced
            .into_iter()
            .map(|id| {
                let acc = accounts.get(id);
                AccountLine {
                    id: id.to_string(),
                    name: acc.map(|a| a.display_name.clone()).unwrap_or_default(),
                    email: acc.map(|a| a.email.clone()).unwrap_or_default(),
                }
            })
            .collect(),
        messages: change
            .messages
            .iter()
            .map(|m| MessageLine { author: m.author.clone(), time: format_timestamp(&m.timestamp), text: m.text.clone() })
            .collect(),
        votes: change
            .votes
            .iter()
            .map(|v| VoteLine {
                reviewer: v.reviewer.clone(),
                label: v.label.clone(),
                value: v.value as i64,
                time: Some(format_timestamp(&v.timestamp)),
            })
            .collect(),
        revisions: Some(
            change
                .revisions
                .iter()
                .map(|r| RevisionLine {
                    number: r.number,
                    time: format_timestamp(&r.created_at),
                    files: r
                        .files
                        .iter()
                        .map(|f| FileLine { path: f.path.clone(), ins: f.lines_inserted, del: f.lines_deleted })
                        .collect(),
                })
                .collect(),
        ),
    };
    serde_json::to_string(&line).expect("change line serializes")
}

pub fn write_dataset_to<W: Write>(mut out: W, dataset: &Dataset) -> std::io::Result<()> {
    for change in &dataset.changes {
        writeln!(out, "{}", change_to_line(change, &dataset.accounts))?;
    }
    Ok(())
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<(), IngestError> {
    let io_err = |source| IngestError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    write_dataset_to(&mut out, dataset).map_err(io_err)?;
    out.flush().map_err(io_err)
}
