use std::collections::BTreeSet;

use chrono::{Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{ChangeStatus, FileChange, MessageRecord, RevisionRecord, SubsystemRule, VoteRecord};
use crate::prepare::label_participation;

fn ts(day: u32, hour: u32) -> Timestamp {
    Utc.with_ymd_and_hms(2020, 1, day, hour, 0, 0).unwrap()
}

fn ids(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

struct ChangeBuilder(ChangeRecord);

impl ChangeBuilder {
    fn new(id: &str, owner: &str, created: Timestamp, closed: Option<Timestamp>) -> Self {
        ChangeBuilder(ChangeRecord {
            change_id: id.into(),
            project: "p".into(),
            created_at: created,
            closed_at: closed,
            status: if closed.is_some() { ChangeStatus::Merged } else { ChangeStatus::Open },
            owner: owner.into(),
            subject: String::new(),
            description: String::new(),
            invited_reviewers: BTreeSet::new(),
            messages: vec![],
            votes: vec![],
            revisions: vec![RevisionRecord { number: 1, created_at: created, files: vec![] }],
        })
    }

    fn invite(mut self, who: &[&str]) -> Self {
        self.0.invited_reviewers.extend(who.iter().map(|s| s.to_string()));
        self
    }

    fn vote(mut self, who: &str, value: i8, at: Timestamp) -> Self {
        self.0.votes.push(VoteRecord { reviewer: who.into(), label: "Code-Review".into(), value, timestamp: at });
        self
    }

    fn message(mut self, who: &str, at: Timestamp) -> Self {
        self.0.messages.push(MessageRecord { author: who.into(), timestamp: at, text: "comment".into() });
        self
    }

    fn file(mut self, path: &str, ins: u64, del: u64) -> Self {
        self.0.revisions[0].files.push(FileChange { path: path.into(), lines_inserted: ins, lines_deleted: del });
        self
    }

    fn build(self) -> ChangeRecord {
        self.0
    }
}

fn index(changes: &[ChangeRecord]) -> TemporalIndex {
    TemporalIndex::build(changes, &BTreeSet::new(), SubsystemRule::Project).unwrap()
}

#[test]
fn empty_index_answers_zero() {
    let idx = index(&[]);
    assert_eq!(idx.workload("x", ts(1, 0)), (0, 0));
    assert_eq!(idx.social("x", "y", "p", ts(1, 0)), Social::default());
    assert_eq!(idx.experience("x", &ids(&["src"]), ts(1, 0)), (0.0, 0.0));
}

#[test]
fn change_does_not_see_itself() {
    let c = ChangeBuilder::new("c1", "A", ts(1, 0), None)
        .invite(&["R"])
        .vote("R", 2, ts(1, 0))
        .file("src/a.c", 1, 0)
        .build();
    let idx = index(std::slice::from_ref(&c));
    assert_eq!(idx.workload("R", ts(1, 0)), (0, 0));
    assert_eq!(idx.received_invitations("R", ts(1, 0)), 0);
    assert!(!idx.is_core("R", ts(1, 0)));
    assert_eq!(idx.experience("A", &ids(&["src"]), ts(1, 0)), (0.0, 0.0));
}

#[test]
fn same_timestamp_changes_do_not_see_each_other() {
    let a = ChangeBuilder::new("a", "A", ts(1, 0), None).invite(&["R"]).file("src/a.c", 1, 0).build();
    let b = ChangeBuilder::new("b", "A", ts(1, 0), None).invite(&["R"]).file("src/b.c", 1, 0).build();
    let idx = index(&[a, b]);
    assert_eq!(idx.workload("R", ts(1, 0)), (0, 0));
    assert_eq!(idx.received_invitations("R", ts(1, 0)), 0);
    assert_eq!(idx.received_invitations("R", ts(1, 1)), 2);
}

#[test]
fn unsorted_input_rejected() {
    let a = ChangeBuilder::new("a", "A", ts(2, 0), None).build();
    let b = ChangeBuilder::new("b", "A", ts(1, 0), None).build();
    assert!(matches!(TemporalIndex::build(&[a, b], &BTreeSet::new(), SubsystemRule::Project), Err(IndexError::Unsorted { .. })));
}

/// Studied patch #1 at day 5; patches #2, #3 open before it; #4 created after.
fn open_patches_history() -> Vec<ChangeRecord> {
    vec![
        ChangeBuilder::new("p2", "X", ts(2, 0), Some(ts(9, 0))).invite(&["A", "B"]).vote("A", 1, ts(3, 0)).build(),
        ChangeBuilder::new("p3", "Y", ts(3, 0), None).invite(&["A", "B"]).message("A", ts(4, 0)).build(),
        ChangeBuilder::new("p1", "Z", ts(5, 0), Some(ts(9, 0))).invite(&["A", "B"]).build(),
        ChangeBuilder::new("p4", "X", ts(6, 0), None).invite(&["A", "B"]).vote("A", 2, ts(6, 1)).build(),
    ]
}

#[test]
fn concurrent_and_remaining_on_open_patches() {
    let idx = index(&open_patches_history());
    assert_eq!(idx.workload("A", ts(5, 0)), (2, 0));
    assert_eq!(idx.workload("B", ts(5, 0)), (0, 2));
    assert_eq!(idx.workload("nobody", ts(5, 0)), (0, 0));
}

#[test]
fn closed_patches_leave_workload() {
    let idx = index(&open_patches_history());
    // p2 closes at day 9: after that only p3 (never closed) and p4 count.
    assert_eq!(idx.workload("A", ts(10, 0)), (2, 0));
    assert_eq!(idx.workload("B", ts(10, 0)), (0, 2));
}

#[test]
fn participation_rate_three_of_four() {
    let mut changes = Vec::new();
    for (i, responds) in [true, true, false, true].into_iter().enumerate() {
        let mut b = ChangeBuilder::new(&format!("c{i}"), "A", ts(1 + i as u32, 0), Some(ts(1 + i as u32, 12))).invite(&["R"]);
        if responds {
            b = b.vote("R", 1, ts(1 + i as u32, 1));
        }
        changes.push(b.build());
    }
    let idx = index(&changes);
    let s = idx.social("R", "A", "p", ts(20, 0));
    assert_eq!(s.participation_rate, 0.75);
    assert_eq!(s.received_invitations, 4);
    assert_eq!(s.familiarity, 3);
    assert_eq!(idx.social("R", "A", "other-project", ts(20, 0)).participation_rate, 0.0);
}

#[test]
fn median_comments_over_patches_with_messages() {
    let mut changes = Vec::new();
    for (i, n) in [1usize, 0, 2, 4].into_iter().enumerate() {
        let day = 1 + i as u32;
        let mut b = ChangeBuilder::new(&format!("c{i}"), "A", ts(day, 0), Some(ts(day, 20))).invite(&["R"]);
        for k in 0..n {
            b = b.message("R", ts(day, 1 + k as u32));
        }
        changes.push(b.build());
    }
    let idx = index(&changes);
    // Oracle: counts of patches with at least one message, sorted {1,2,4}, middle element.
    let mut counts = vec![1.0, 2.0, 4.0];
    counts.sort_by(f64::total_cmp);
    let expected = counts[counts.len() / 2];
    assert_eq!(idx.social("R", "A", "p", ts(20, 0)).median_comments, expected);
}

#[test]
fn experience_formulas() {
    // Ten prior patches in module src: two authored by D, one reviewed by D alone,
    // one reviewed by D together with E.
    let mut changes = Vec::new();
    for i in 0..10u32 {
        let owner = if i < 2 { "D" } else { "O" };
        let mut b = ChangeBuilder::new(&format!("c{i}"), owner, ts(1 + i, 0), Some(ts(1 + i, 12))).file("src/f.c", 1, 1);
        if i == 4 {
            b = b.invite(&["D"]).vote("D", 1, ts(1 + i, 1));
        }
        if i == 5 {
            b = b.invite(&["D", "E"]).vote("D", 1, ts(1 + i, 1)).message("E", ts(1 + i, 2));
        }
        changes.push(b.build());
    }
    let idx = index(&changes);
    let (authoring, reviewing) = idx.experience("D", &ids(&["src"]), ts(20, 0));
    assert_eq!(authoring, 0.2);
    // Oracle: direct summation of 1/R(k) over reviewed patches, divided by C(M).
    let oracle = (1.0 / 1.0 + 1.0 / 2.0) / 10.0;
    assert!((reviewing - oracle).abs() < 1e-15);
    assert_eq!(idx.experience("newcomer", &ids(&["src"]), ts(20, 0)), (0.0, 0.0));
    // A module without prior patches contributes zero to the average.
    let (a2, _) = idx.experience("D", &ids(&["src", "lib"]), ts(20, 0));
    assert_eq!(a2, 0.1);
}

#[test]
fn patch_size_uses_first_revision() {
    let mut c = ChangeBuilder::new("c", "A", ts(1, 0), None).file("a.c", 10, 5).file("b.c", 0, 3).build();
    assert_eq!(patch_size(&c), 18);
    c.revisions.push(RevisionRecord {
        number: 2,
        created_at: ts(1, 1),
        files: vec![FileChange { path: "a.c".into(), lines_inserted: 500, lines_deleted: 0 }],
    });
    assert_eq!(patch_size(&c), 18);
    assert_eq!(patch_size(&ChangeBuilder::new("e", "A", ts(1, 0), None).build()), 0);
}

fn three_change_fixture() -> Vec<ChangeRecord> {
    vec![
        ChangeBuilder::new("c1", "A", ts(1, 0), Some(ts(1, 12)))
            .invite(&["R", "S"])
            .vote("R", 2, ts(1, 5))
            .message("R", ts(1, 5))
            .file("src/x.c", 10, 2)
            .build(),
        ChangeBuilder::new("c2", "B", ts(2, 0), Some(ts(5, 0)))
            .invite(&["R", "A"])
            .message("R", ts(2, 6))
            .message("R", ts(2, 7))
            .vote("A", 1, ts(2, 8))
            .file("src/y.c", 3, 3)
            .file("doc/z.md", 1, 0)
            .build(),
        ChangeBuilder::new("c3", "A", ts(3, 0), Some(ts(4, 0)))
            .invite(&["R", "S", "B"])
            .vote("R", 1, ts(3, 2))
            .message("B", ts(3, 3))
            .file("src/w.c", 5, 0)
            .build(),
    ]
}

#[test]
fn three_change_golden_instances() {
    let changes = three_change_fixture();
    let idx = index(&changes);
    let labels = label_participation(&changes[2], &BTreeSet::new());
    let instances = build_instances(&changes, &labels, &idx).unwrap();
    let mut buf = Vec::new();
    write_instances_csv(&mut buf, &instances).unwrap();
    // Hand-computed at c3's creation (2020-01-03T00:00:00Z), module {src} with C = 2.
    // B authored c2 (src/y.c), so its authoring experience is 1/2.
    let expected = "\
change_id,reviewer,created_at,concurrent_reviews,remaining_reviews,familiarity,median_comments,participation_rate,received_invitations,core_member,reviewer_authoring_exp,reviewer_reviewing_exp,patch_size,author_authoring_exp,author_reviewing_exp,outcome
c3,B,2020-01-03T00:00:00Z,0,0,0,0,0,0,false,0.5,0,5,0.5,0.25,true
c3,R,2020-01-03T00:00:00Z,1,0,1,1.5,1,2,true,0,0.75,5,0.5,0.25,true
c3,S,2020-01-03T00:00:00Z,0,0,0,0,0,1,false,0,0,5,0.5,0.25,false
";
    assert_eq!(String::from_utf8(buf).unwrap(), expected);
}

#[test]
fn all_responding_dataset_has_no_false_outcomes() {
    let changes = three_change_fixture();
    let idx = index(&changes);
    let labels = label_participation(&changes[0], &BTreeSet::new())
        .into_iter()
        .map(|mut l| {
            l.responded = true;
            l
        })
        .collect::<Vec<_>>();
    let inst = build_instances(&changes, &labels, &idx).unwrap();
    assert_eq!(inst.len(), 2);
    assert!(inst.iter().all(|i| i.outcome));
}

#[test]
fn unknown_change_in_labels_is_an_error() {
    let changes = three_change_fixture();
    let idx = index(&changes);
    let bad = vec![ParticipationLabel { change_id: "nope".into(), reviewer: "R".into(), responded: true }];
    assert!(matches!(build_instances(&changes, &bad, &idx), Err(MetricsError::UnknownChange(_))));
}

#[test]
fn bots_are_invisible() {
    let changes = open_patches_history();
    let idx = TemporalIndex::build(&changes, &ids(&["A"]), SubsystemRule::Project).unwrap();
    assert_eq!(idx.workload("A", ts(5, 0)), (0, 0));
    assert_eq!(idx.received_invitations("A", ts(5, 0)), 0);
}

/// Random history over a handful of accounts and modules.
fn random_history(seed: u64, n: usize) -> Vec<ChangeRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let people = ["a", "b", "c", "d", "e"];
    let dirs = ["src", "lib", "doc"];
    let start = ts(1, 0);
    let mut out = Vec::new();
    for i in 0..n {
        let created = start + Duration::hours(rng.random_range(0..200));
        let closed = rng.random_bool(0.8).then(|| created + Duration::hours(rng.random_range(0..48)));
        let owner = people[rng.random_range(0..people.len())];
        let mut b = ChangeBuilder::new(&format!("c{i:03}"), owner, created, closed)
            .file(&format!("{}/f{}.c", dirs[rng.random_range(0..3)], i % 3), rng.random_range(0..50), 1);
        b.0.project = ["p", "q"][rng.random_range(0..2)].into();
        for p in people {
            if p != owner && rng.random_bool(0.5) {
                b = b.invite(&[p]);
                if rng.random_bool(0.6) {
                    let at = created + Duration::hours(rng.random_range(0..30));
                    b = if rng.random_bool(0.5) { b.vote(p, [-2, -1, 1, 2][rng.random_range(0..4)], at) } else { b.message(p, at) };
                }
            }
        }
        out.push(b.build());
    }
    out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.change_id.cmp(&b.change_id)));
    out
}

fn all_instances(changes: &[ChangeRecord], upto: usize) -> Vec<ReviewInstance> {
    let idx = index(changes);
    let labels: Vec<_> = changes[..upto].iter().flat_map(|c| label_participation(c, &BTreeSet::new())).collect();
    build_instances(changes, &labels, &idx).unwrap()
}

#[test]
fn appending_future_changes_never_alters_metrics() {
    for seed in 0..5 {
        let history = random_history(seed, 60);
        let cutoff = history[40].created_at;
        let past: Vec<_> = history.iter().filter(|c| c.created_at <= cutoff).cloned().collect();
        assert!(past.len() < history.len());
        let a = all_instances(&past, past.len());
        let b = all_instances(&history, past.len());
        assert_eq!(a, b, "seed {seed}");
    }
}

#[test]
fn metric_invariants_on_random_histories() {
    for seed in 10..15 {
        let history = random_history(seed, 80);
        let idx = index(&history);
        for inst in all_instances(&history, history.len()) {
            assert!((0.0..=1.0).contains(&inst.participation_rate));
            assert!((0.0..=1.0).contains(&inst.reviewer_authoring_exp));
            assert!((0.0..=1.0).contains(&inst.author_authoring_exp));
            assert!(inst.reviewer_reviewing_exp >= 0.0 && inst.median_comments >= 0.0);
            let change = history.iter().find(|c| c.change_id == inst.change_id).unwrap();
            let subsystem = crate::model::subsystem_of(change, SubsystemRule::Project);
            if inst.participation_rate > 0.0 {
                // Rate times the subsystem-scoped denominator recovers an integer numerator.
                let received_in_subsystem = history
                    .iter()
                    .filter(|c| c.created_at < inst.created_at && c.project == subsystem && c.invited_reviewers.contains(&inst.reviewer))
                    .count() as f64;
                let numerator = inst.participation_rate * received_in_subsystem;
                assert!((numerator - numerator.round()).abs() < 1e-9);
            }
            if inst.core_member {
                assert!(idx.is_core(&inst.reviewer, inst.created_at + Duration::days(30)));
            }
        }
    }
}

#[test]
fn input_permutation_does_not_matter_after_sort() {
    let history = random_history(42, 50);
    let mut shuffled = history.clone();
    shuffled.reverse();
    let mut ds = crate::model::Dataset { changes: shuffled, ..Default::default() };
    ds.sort_changes();
    assert_eq!(all_instances(&history, history.len()), all_instances(&ds.changes, ds.changes.len()));
}
