//! Domain types for Gerrit-style review data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Label whose ±2 votes mark approver (core) permission.
pub const CODE_REVIEW_LABEL: &str = "Code-Review";

pub type AccountId = String;
pub type Timestamp = DateTime<Utc>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountRef {
    pub account_id: AccountId,
    pub display_name: String,
    pub email: String,
    #[serde(default)]
    pub is_bot: bool,
}

impl AccountRef {
    pub fn new(id: impl Into<String>, name: impl Into<String>, email: impl Into<String>) -> Self {
        AccountRef {
            account_id: id.into(),
            display_name: name.into(),
            email: email.into(),
            is_bot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRecord {
    pub reviewer: AccountId,
    pub label: String,
    pub value: i8,
    pub timestamp: Timestamp,
}

impl VoteRecord {
    pub fn is_code_review(&self) -> bool {
        self.label.eq_ignore_ascii_case(CODE_REVIEW_LABEL)
    }
}

/// Accepted review score range.
pub fn valid_vote_value(value: i64) -> bool {
    (-2..=2).contains(&value)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub author: AccountId,
    pub timestamp: Timestamp,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileChange {
    pub path: String,
    pub lines_inserted: u64,
    pub lines_deleted: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevisionRecord {
    pub number: u32,
    pub created_at: Timestamp,
    pub files: Vec<FileChange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChangeStatus {
    Merged,
    Abandoned,
    Open,
}

impl ChangeStatus {
    pub fn is_closed(self) -> bool {
        matches!(self, ChangeStatus::Merged | ChangeStatus::Abandoned)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeStatus::Merged => "MERGED",
            ChangeStatus::Abandoned => "ABANDONED",
            ChangeStatus::Open => "OPEN",
        }
    }
}

impl fmt::Display for ChangeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported change status {0:?}")]
pub struct UnknownStatus(pub String);

impl FromStr for ChangeStatus {
    type Err = UnknownStatus;

    /// Accepts both the interchange spelling and Gerrit's `NEW`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MERGED" => Ok(ChangeStatus::Merged),
            "ABANDONED" => Ok(ChangeStatus::Abandoned),
            "OPEN" | "NEW" => Ok(ChangeStatus::Open),
            _ => Err(UnknownStatus(s.to_string())),
        }
    }
}

/// One review request with its full review history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    pub change_id: String,
    pub project: String,
    pub created_at: Timestamp,
    pub closed_at: Option<Timestamp>,
    pub status: ChangeStatus,
    pub owner: AccountId,
    pub subject: String,
    pub description: String,
    pub invited_reviewers: BTreeSet<AccountId>,
    pub messages: Vec<MessageRecord>,
    pub votes: Vec<VoteRecord>,
    pub revisions: Vec<RevisionRecord>,
}

impl ChangeRecord {
    /// Revision with the lowest number (the one submitted at creation).
    pub fn first_revision(&self) -> Option<&RevisionRecord> {
        self.revisions.iter().min_by_key(|r| r.number)
    }

    /// Every account id this change refers to.
    pub fn referenced_accounts(&self) -> BTreeSet<&str> {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        ids.insert(&self.owner);
        ids.extend(self.invited_reviewers.iter().map(String::as_str));
        ids.extend(self.messages.iter().map(|m| m.author.as_str()));
        ids.extend(self.votes.iter().map(|v| v.reviewer.as_str()));
        ids
    }
}

/// Loaded changes plus the deduplicated account table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub accounts: BTreeMap<AccountId, AccountRef>,
    pub changes: Vec<ChangeRecord>,
}

impl Dataset {
    pub fn change(&self, change_id: &str) -> Option<&ChangeRecord> {
        self.changes.iter().find(|c| c.change_id == change_id)
    }

    /// Sort by creation time, ties broken by change id.
    pub fn sort_changes(&mut self) {
        self.changes
            .sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.change_id.cmp(&b.change_id)));
    }

    /// Marks the given ids as bots in the account table.
    pub fn mark_bots<'a>(&mut self, bots: impl IntoIterator<Item = &'a AccountId>) {
        for id in bots {
            if let Some(acc) = self.accounts.get_mut(id) {
                acc.is_bot = true;
            }
        }
    }
}

/// How a change is mapped to its subsystem key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsystemRule {
    #[default]
    Project,
    TopDir,
}

impl FromStr for SubsystemRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "project" => Ok(SubsystemRule::Project),
            "top-dir" | "topdir" | "top_dir" => Ok(SubsystemRule::TopDir),
            other => Err(format!("unknown subsystem rule {other:?} (expected project or top-dir)")),
        }
    }
}

impl fmt::Display for SubsystemRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubsystemRule::Project => "project",
            SubsystemRule::TopDir => "top-dir",
        })
    }
}

pub const MIXED_SUBSYSTEM: &str = "mixed";

pub fn subsystem_of(change: &ChangeRecord, rule: SubsystemRule) -> String {
    match rule {
        SubsystemRule::Project => change.project.clone(),
        SubsystemRule::TopDir => {
            let files = change.first_revision().map(|r| r.files.as_slice()).unwrap_or(&[]);
            subsystem_of_paths(files.iter().map(|f| f.path.as_str()))
        }
    }
}

/// Shared top-level directory of the paths, or `mixed` when there is none.
pub fn subsystem_of_paths<'a>(paths: impl IntoIterator<Item = &'a str>) -> String {
    let mut top: Option<&str> = None;
    for path in paths {
        let head = match path.split_once('/') {
            Some((head, _)) => head,
            None => return MIXED_SUBSYSTEM.to_string(),
        };
        match top {
            None => top = Some(head),
            Some(t) if t == head => {}
            Some(_) => return MIXED_SUBSYSTEM.to_string(),
        }
    }
    top.map(str::to_string).unwrap_or_else(|| MIXED_SUBSYSTEM.to_string())
}

/// Directories of the files changed in the first revision; root files map to `.`.
pub fn modules_of(change: &ChangeRecord) -> BTreeSet<String> {
    let files = change.first_revision().map(|r| r.files.as_slice()).unwrap_or(&[]);
    files.iter().map(|f| module_of_path(&f.path)).collect()
}

pub fn module_of_path(path: &str) -> String {
    match path.rsplit_once('/') {
        Some((dir, _)) if !dir.is_empty() => dir.to_string(),
        _ => ".".to_string(),
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::change;
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn subsystem_project_rule_is_identity() {
        let c = change("1", &["a/b.c"]);
        assert_eq!(subsystem_of(&c, SubsystemRule::Project), "platform/frameworks/base");
    }

    #[test]
    fn subsystem_top_dir_rule() {
        assert_eq!(subsystem_of(&change("1", &["net/tcp.c", "net/udp.c"]), SubsystemRule::TopDir), "net");
        assert_eq!(subsystem_of(&change("1", &["net/a.c", "doc/b.md"]), SubsystemRule::TopDir), "mixed");
        assert_eq!(subsystem_of(&change("1", &["README"]), SubsystemRule::TopDir), "mixed");
        assert_eq!(subsystem_of(&change("1", &[]), SubsystemRule::TopDir), "mixed");
    }

    #[test]
    fn modules_are_directories() {
        assert_eq!(modules_of(&change("1", &["src/a/x.c", "src/a/y.c"])), set(&["src/a"]));
        assert_eq!(modules_of(&change("1", &["src/a/x.c", "src/b/y.c"])), set(&["src/a", "src/b"]));
        assert_eq!(modules_of(&change("1", &["README"])), set(&["."]));
    }

    #[test]
    fn modules_use_first_revision_only() {
        let mut c = change("1", &["src/a/x.c"]);
        c.revisions.push(RevisionRecord {
            number: 2,
            created_at: c.created_at,
            files: vec![FileChange { path: "other/y.c".into(), lines_inserted: 5, lines_deleted: 0 }],
        });
        c.revisions.reverse();
        assert_eq!(modules_of(&c), set(&["src/a"]));
    }

    #[test]
    fn status_parsing() {
        assert_eq!("NEW".parse::<ChangeStatus>().unwrap(), ChangeStatus::Open);
        assert_eq!("merged".parse::<ChangeStatus>().unwrap(), ChangeStatus::Merged);
        assert!("draft".parse::<ChangeStatus>().is_err());
    }

    #[test]
    fn vote_range() {
        assert!(valid_vote_value(-2) && valid_vote_value(2));
        assert!(!valid_vote_value(3) && !valid_vote_value(-3));
    }
}
