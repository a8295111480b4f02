//! Seeded synthetic review histories with known ground truth, for fixtures and tests.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, TimeZone, Utc};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    AccountRef, ChangeRecord, ChangeStatus, Dataset, FileChange, MessageRecord, RevisionRecord, VoteRecord,
    CODE_REVIEW_LABEL,
};
use crate::prepare::{Funnel, ParticipationLabel};

pub const BOT_ID: &str = "ci-bot";
const PROJECTS: [&str; 3] = ["platform/core", "platform/ui", "tools/build"];
const DIRS: [&str; 6] = ["src/net", "src/db", "src/ui", "docs", "tests", "lib/util"];
const ORGS: [&str; 4] = ["example.com", "example.org", "corp.test", "uni.test"];

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub changes: usize,
    pub developers: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { changes: 200, developers: 20, seed: 2024 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    /// The response decision the generator made for every eligible invitation of a
    /// relevant change, in dataset order and reviewer-id order within a change.
    pub intended: Vec<ParticipationLabel>,
    /// Funnel implied by the generation plan.
    pub expected: Funnel,
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Normal,
    Open,
    SelfReviewed,
    Bookkeeping,
}

/// Every 25th change from offset 7 stays open, every 40th from 13 has only its owner (and
/// maybe the bot) invited, and every 50th from 21 is a merge commit.
fn kind_of(i: usize) -> Kind {
    if i % 25 == 7 {
        Kind::Open
    } else if i % 40 == 13 {
        Kind::SelfReviewed
    } else if i % 50 == 21 {
        Kind::Bookkeeping
    } else {
        Kind::Normal
    }
}

fn dev_id(i: usize) -> String {
    format!("dev{:02}", i + 1)
}

pub fn generate(config: SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).unwrap();
    let devs = config.developers.max(6);

    let mut accounts = BTreeMap::new();
    for d in 0..devs {
        let id = dev_id(d);
        let email = if d % 7 == 6 { String::new() } else { format!("{id}@{}", ORGS[d % ORGS.len()]) };
        accounts.insert(id.clone(), AccountRef { account_id: id.clone(), display_name: format!("Developer {}", d + 1), email, is_bot: false });
    }
    accounts.insert(
        BOT_ID.into(),
        AccountRef { account_id: BOT_ID.into(), display_name: "CI".into(), email: "ci@build.test".into(), is_bot: false },
    );

    // Fixed traits: responsiveness, home project, and whether the developer approves.
    let responsiveness: Vec<f64> = (0..devs).map(|_| rng.random_range(0.15..0.95)).collect();
    let home: Vec<usize> = (0..devs).map(|d| d % PROJECTS.len()).collect();
    let approver: Vec<bool> = (0..devs).map(|d| d % 4 == 0).collect();

    let mut changes = Vec::with_capacity(config.changes);
    let mut intended = Vec::new();
    let mut expected = Funnel { loaded: config.changes, bots: 1, ..Funnel::default() };

    for i in 0..config.changes {
        let kind = kind_of(i);
        let created = start + Duration::minutes(i as i64 * 360 + rng.random_range(0..120));
        let owner_idx = rng.random_range(0..devs);
        let owner = dev_id(owner_idx);
        let project_idx = if rng.random_bool(0.7) { home[owner_idx] } else { rng.random_range(0..PROJECTS.len()) };
        let n_files = rng.random_range(1..=4);
        let files: Vec<FileChange> = (0..n_files)
            .map(|f| FileChange {
                path: format!("{}/file{}.rs", DIRS[rng.random_range(0..DIRS.len())], f),
                lines_inserted: rng.random_range(0..200),
                lines_deleted: rng.random_range(0..60),
            })
            .collect();
        let closed = created + Duration::minutes(rng.random_range(600..4000));
        let status = match kind {
            Kind::Open => ChangeStatus::Open,
            _ if rng.random_bool(0.15) => ChangeStatus::Abandoned,
            _ => ChangeStatus::Merged,
        };

        let mut invited = BTreeSet::new();
        if kind == Kind::SelfReviewed {
            invited.insert(owner.clone());
        } else {
            let count = rng.random_range(2..=5).min(devs - 1);
            let others: Vec<usize> = (0..devs).filter(|&d| d != owner_idx).collect();
            for k in sample(&mut rng, others.len(), count) {
                invited.insert(dev_id(others[k]));
            }
        }
        if i % 3 == 0 {
            invited.insert(BOT_ID.to_string());
        }

        let mut messages = vec![
            MessageRecord { author: BOT_ID.into(), timestamp: created + Duration::minutes(1), text: "Build started".into() },
            MessageRecord {
                author: BOT_ID.into(),
                timestamp: created + Duration::minutes(30),
                text: if rng.random_bool(0.8) { "Build successful" } else { "Build failed" }.into(),
            },
        ];
        let mut votes = Vec::new();
        let span = (closed - created).num_minutes();
        let mut answered = Vec::new();
        for r in invited.iter().filter(|r| r.as_str() != BOT_ID && **r != owner) {
            let d: usize = r[3..].parse::<usize>().unwrap() - 1;
            let familiar = home[d] == project_idx;
            let p = responsiveness[d] * if familiar { 1.0 } else { 0.7 };
            let responded = rng.random_bool(p.clamp(0.02, 0.98));
            let t = created + Duration::minutes(rng.random_range(40..span.max(41)));
            if responded {
                match rng.random_range(0..3) {
                    0 => messages.push(MessageRecord { author: r.clone(), timestamp: t, text: "Looks reasonable.".into() }),
                    1 => votes.push(VoteRecord {
                        reviewer: r.clone(),
                        label: CODE_REVIEW_LABEL.into(),
                        value: if approver[d] { 2 } else { 1 },
                        timestamp: t,
                    }),
                    _ => {
                        messages.push(MessageRecord { author: r.clone(), timestamp: t, text: "One nit inline.".into() });
                        votes.push(VoteRecord {
                            reviewer: r.clone(),
                            label: CODE_REVIEW_LABEL.into(),
                            value: if approver[d] && rng.random_bool(0.5) { 2 } else { -1 },
                            timestamp: t,
                        });
                    }
                }
            } else if rng.random_bool(0.2) {
                // A bare zero vote is not a response.
                votes.push(VoteRecord { reviewer: r.clone(), label: CODE_REVIEW_LABEL.into(), value: 0, timestamp: t });
            }
            answered.push((r.clone(), responded));
        }
        messages.push(MessageRecord {
            author: owner.clone(),
            timestamp: created + Duration::minutes(5),
            text: "Uploaded patch set 1.".into(),
        });
        messages.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.author.cmp(&b.author)));

        let change_id = format!("I{:04}", i + 1);
        let (subject, description) = match kind {
            Kind::Bookkeeping => {
                let s = "Merge branch 'stable' into main".to_string();
                (s.clone(), s)
            }
            _ => {
                let s = format!("Improve {} handling", DIRS[i % DIRS.len()]);
                (s.clone(), format!("{s}\n\nChange-Id: {change_id}"))
            }
        };
        match kind {
            Kind::Open => expected.excluded_not_closed += 1,
            Kind::SelfReviewed => expected.excluded_self_reviewed += 1,
            Kind::Bookkeeping => expected.excluded_bookkeeping += 1,
            Kind::Normal => {
                expected.relevant += 1;
                for (reviewer, responded) in answered {
                    intended.push(ParticipationLabel { change_id: change_id.clone(), reviewer, responded });
                }
            }
        }
        changes.push(ChangeRecord {
            change_id,
            project: PROJECTS[project_idx].into(),
            created_at: created,
            closed_at: status.is_closed().then_some(closed),
            status,
            owner,
            subject,
            description,
            invited_reviewers: invited,
            messages,
            votes,
            revisions: vec![RevisionRecord { number: 1, created_at: created, files }],
        });
    }
    expected.labels = intended.len();
    expected.responded = intended.iter().filter(|l| l.responded).count();
    expected.not_responded = expected.labels - expected.responded;

    let mut dataset = Dataset { accounts, changes };
    dataset.sort_changes();
    SynthData { dataset, intended, expected }
}
