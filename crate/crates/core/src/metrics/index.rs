use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{modules_of, subsystem_of, AccountId, ChangeRecord, SubsystemRule, Timestamp};
use crate::stats;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("changes are not sorted by creation time: {later} precedes {earlier}")]
    Unsorted { later: String, earlier: String },
}

#[derive(Debug, Clone)]
struct IndexedChange {
    created: Timestamp,
    closed: Option<Timestamp>,
    owner: AccountId,
    subsystem: String,
    /// Non-owner, non-bot accounts with the time of their first response.
    responders: Vec<(AccountId, Timestamp)>,
}

impl IndexedChange {
    fn open_at(&self, t: Timestamp) -> bool {
        self.closed.is_none_or(|c| c >= t)
    }

    /// Responders whose first response precedes `t`.
    fn responders_before(&self, t: Timestamp) -> usize {
        self.responders.iter().filter(|(_, at)| *at < t).count()
    }
}

/// One change as seen from a reviewer's timeline.
#[derive(Debug, Clone)]
struct Involvement {
    change: usize,
    created: Timestamp,
    invited: bool,
    first_response: Option<Timestamp>,
    message_times: Vec<Timestamp>,
}

impl Involvement {
    fn responded_before(&self, t: Timestamp) -> bool {
        self.first_response.is_some_and(|r| r < t)
    }
}

/// Time-ordered history supporting metric queries that only see events strictly before `t`.
#[derive(Debug, Clone, Default)]
pub struct TemporalIndex {
    changes: Vec<IndexedChange>,
    timelines: HashMap<AccountId, Vec<Involvement>>,
    invitations: HashMap<AccountId, Vec<Timestamp>>,
    first_core_vote: HashMap<AccountId, Timestamp>,
    by_module: HashMap<String, Vec<usize>>,
    rule: SubsystemRule,
}

fn first_response(change: &ChangeRecord, who: &str) -> Option<Timestamp> {
    let vote = change.votes.iter().filter(|v| v.reviewer == who && v.value != 0).map(|v| v.timestamp).min();
    let msg = change.messages.iter().filter(|m| m.author == who).map(|m| m.timestamp).min();
    match (vote, msg) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

impl TemporalIndex {
    /// Builds the index over all changes; bots never appear in any timeline.
    pub fn build(changes: &[ChangeRecord], bots: &BTreeSet<AccountId>, rule: SubsystemRule) -> Result<Self, IndexError> {
        for w in changes.windows(2) {
            if w[1].created_at < w[0].created_at {
                return Err(IndexError::Unsorted { later: w[0].change_id.clone(), earlier: w[1].change_id.clone() });
            }
        }
        let mut index = TemporalIndex { rule, ..TemporalIndex::default() };
        for (idx, change) in changes.iter().enumerate() {
            let mut people: BTreeSet<&str> = BTreeSet::new();
            people.extend(change.invited_reviewers.iter().map(String::as_str));
            people.extend(change.votes.iter().filter(|v| v.value != 0).map(|v| v.reviewer.as_str()));
            people.extend(change.messages.iter().map(|m| m.author.as_str()));
            people.retain(|p| *p != change.owner && !bots.contains(*p));

            let mut responders = Vec::new();
            for person in people {
                let invited = change.invited_reviewers.contains(person);
                let response = first_response(change, person);
                if let Some(at) = response {
                    responders.push((person.to_string(), at));
                }
                let mut message_times: Vec<Timestamp> =
                    change.messages.iter().filter(|m| m.author == person).map(|m| m.timestamp).collect();
                message_times.sort();
                index.timelines.entry(person.to_string()).or_default().push(Involvement {
                    change: idx,
                    created: change.created_at,
                    invited,
                    first_response: response,
                    message_times,
                });
                if invited {
                    index.invitations.entry(person.to_string()).or_default().push(change.created_at);
                }
            }

            for v in change.votes.iter().filter(|v| v.is_code_review() && v.value.abs() == 2) {
                if bots.contains(&v.reviewer) {
                    continue;
                }
                index
                    .first_core_vote
                    .entry(v.reviewer.clone())
                    .and_modify(|t| *t = (*t).min(v.timestamp))
                    .or_insert(v.timestamp);
            }

            for module in modules_of(change) {
                index.by_module.entry(module).or_default().push(idx);
            }

            index.changes.push(IndexedChange {
                created: change.created_at,
                closed: change.closed_at,
                owner: change.owner.clone(),
                subsystem: subsystem_of(change, rule),
                responders,
            });
        }
        Ok(index)
    }

    pub fn subsystem_rule(&self) -> SubsystemRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Reviewers with any recorded involvement, sorted.
    pub fn reviewers(&self) -> Vec<&AccountId> {
        let mut v: Vec<&AccountId> = self.timelines.keys().collect();
        v.sort();
        v
    }

    pub fn knows(&self, person: &str) -> bool {
        self.timelines.contains_key(person) || self.changes.iter().any(|c| c.owner == person)
    }

    fn prior(&self, person: &str, t: Timestamp) -> &[Involvement] {
        match self.timelines.get(person) {
            Some(list) => &list[..list.partition_point(|i| i.created < t)],
            None => &[],
        }
    }

    /// (concurrent, remaining) review workload of `reviewer` at `t`.
    pub fn workload(&self, reviewer: &str, t: Timestamp) -> (u64, u64) {
        let (mut concurrent, mut remaining) = (0, 0);
        for inv in self.prior(reviewer, t) {
            if !self.changes[inv.change].open_at(t) {
                continue;
            }
            if inv.responded_before(t) {
                concurrent += 1;
            } else if inv.invited {
                remaining += 1;
            }
        }
        (concurrent, remaining)
    }

    pub fn social(&self, reviewer: &str, author: &str, subsystem: &str, t: Timestamp) -> Social {
        let mut out = Social::default();
        let mut responded_in_subsystem = 0u64;
        let mut invited_in_subsystem = 0u64;
        let mut comment_counts = Vec::new();
        for inv in self.prior(reviewer, t) {
            let change = &self.changes[inv.change];
            let responded = inv.responded_before(t);
            if responded && change.owner == author {
                out.familiarity += 1;
            }
            if change.subsystem == subsystem {
                if inv.invited {
                    invited_in_subsystem += 1;
                    if responded {
                        responded_in_subsystem += 1;
                    }
                }
                let posted = inv.message_times.partition_point(|m| *m < t);
                if posted > 0 {
                    comment_counts.push(posted as f64);
                }
            }
        }
        out.participation_rate =
            if invited_in_subsystem == 0 { 0.0 } else { responded_in_subsystem as f64 / invited_in_subsystem as f64 };
        out.median_comments = if comment_counts.is_empty() { 0.0 } else { stats::median(&comment_counts) };
        out.received_invitations = self.received_invitations(reviewer, t);
        out.core_member = self.is_core(reviewer, t);
        out
    }

    /// Invitations received strictly before `t`, across all subsystems.
    pub fn received_invitations(&self, reviewer: &str, t: Timestamp) -> u64 {
        self.invitations.get(reviewer).map(|v| v.partition_point(|c| *c < t) as u64).unwrap_or(0)
    }

    /// Responded-to and received invitations before `t`, across all subsystems.
    pub fn lifetime_participation(&self, reviewer: &str, t: Timestamp) -> (u64, u64) {
        let mut responded = 0;
        let mut received = 0;
        for inv in self.prior(reviewer, t).iter().filter(|i| i.invited) {
            received += 1;
            if inv.responded_before(t) {
                responded += 1;
            }
        }
        (responded, received)
    }

    pub fn is_core(&self, reviewer: &str, t: Timestamp) -> bool {
        self.first_core_vote.get(reviewer).is_some_and(|first| *first < t)
    }

    /// (authoring, reviewing) experience of `person` averaged over `modules`.
    pub fn experience(&self, person: &str, modules: &BTreeSet<String>, t: Timestamp) -> (f64, f64) {
        if modules.is_empty() {
            return (0.0, 0.0);
        }
        let mut authoring = 0.0;
        let mut reviewing = 0.0;
        for module in modules {
            let Some(list) = self.by_module.get(module) else { continue };
            let prior = &list[..list.partition_point(|&i| self.changes[i].created < t)];
            if prior.is_empty() {
                continue;
            }
            let total = prior.len() as f64;
            let mut authored = 0usize;
            let mut weighted = 0.0;
            for &i in prior {
                let change = &self.changes[i];
                if change.owner == person {
                    authored += 1;
                }
                let reviewed = change.responders.iter().any(|(who, at)| who == person && *at < t);
                if reviewed {
                    weighted += 1.0 / change.responders_before(t) as f64;
                }
            }
            authoring += authored as f64 / total;
            reviewing += weighted / total;
        }
        let n = modules.len() as f64;
        (authoring / n, reviewing / n)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Social {
    pub familiarity: u64,
    pub median_comments: f64,
    pub participation_rate: f64,
    pub received_invitations: u64,
    pub core_member: bool,
}

/// Per-reviewer counts of (responded, received) keyed by id, for descriptive summaries.
pub fn lifetime_rates(index: &TemporalIndex, as_of: Timestamp) -> BTreeMap<AccountId, (u64, u64)> {
    index
        .reviewers()
        .into_iter()
        .map(|r| (r.clone(), index.lifetime_participation(r, as_of)))
        .filter(|(_, (_, received))| *received > 0)
        .collect()
}
