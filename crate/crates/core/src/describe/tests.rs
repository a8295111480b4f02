use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::fixtures::{change, ts};
use crate::model::{MessageRecord, SubsystemRule};

fn label(change: &str, reviewer: &str, responded: bool) -> ParticipationLabel {
    ParticipationLabel { change_id: change.into(), reviewer: reviewer.into(), responded }
}

#[test]
fn summary_two_changes() {
    let labels = vec![
        label("c1", "a", false),
        label("c1", "b", false),
        label("c1", "c", true),
        label("c2", "a", true),
        label("c2", "b", true),
    ];
    let s = unresponded_summary(&labels);
    assert_eq!(s.changes, 2);
    assert_eq!(s.proportion_with_unresponded, 0.5);
    assert_eq!(s.per_change[0].proportion, 2.0 / 3.0);
    assert_eq!(s.per_change[1].proportion, 0.0);
    assert_eq!(s.changes_without_responders, 0);
    assert_eq!(s.median_unresponded_proportion, 1.0 / 3.0);
}

#[test]
fn summary_everyone_responds() {
    let labels = vec![label("c1", "a", true), label("c2", "b", true)];
    let s = unresponded_summary(&labels);
    assert_eq!((s.proportion_with_unresponded, s.changes_without_responders), (0.0, 0));
    let silent = unresponded_summary(&[label("c1", "a", false)]);
    assert_eq!(silent.changes_without_responders, 1);
}

/// Classifies every pair directly.
fn tau_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx * dy > 0.0 {
                c += 1;
            } else if dx * dy < 0.0 {
                d += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    (c - d) as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()
}

#[test]
fn tau_examples() {
    assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), (1.0, TauMagnitude::Large));
    assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), (-1.0, TauMagnitude::Large));
    let (x, y) = ([1.0, 1.0, 2.0, 3.0], [1.0, 2.0, 2.0, 3.0]);
    // C = 4, D = 0, x-ties 1, y-ties 1: 4 / sqrt(5 · 5).
    assert_eq!(kendall_tau_b(&x, &y).unwrap().0, tau_oracle(&x, &y));
    assert_eq!(tau_oracle(&x, &y), 0.8);
    assert!(matches!(kendall_tau_b(&[2.0, 2.0], &[1.0, 3.0]), Err(DescribeError::AllTied)));
    assert!(matches!(kendall_tau_b(&[2.0], &[1.0]), Err(DescribeError::TooFew { .. })));
    assert_eq!(TauMagnitude::of(0.35), TauMagnitude::Medium);
    assert_eq!(TauMagnitude::of(-0.05), TauMagnitude::Trivial);
    assert_eq!(TauMagnitude::of(0.2), TauMagnitude::Small);
}

#[test]
fn tau_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(2..=500);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| (v + rng.random_range(-3..=3) as f64).max(0.0)).collect();
        match kendall_tau_b(&x, &y) {
            Ok((tau, _)) => assert_eq!(tau, tau_oracle(&x, &y)),
            Err(DescribeError::AllTied) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn invited_minus_one_gives_perfect_tau_and_bins_cover_points() {
    let mut labels = Vec::new();
    for c in 0..6 {
        for r in 0..=c + 1 {
            labels.push(label(&format!("c{c}"), &format!("r{r}"), r == 0));
        }
    }
    let s = unresponded_summary(&labels);
    let (tau, bins) = invited_vs_unresponded(&s, 1.0).unwrap();
    assert_eq!(tau.tau, 1.0);
    assert_eq!(tau.n, 6);
    assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 6);
}

#[test]
fn rate_distribution_excludes_uninvited() {
    let mut changes = Vec::new();
    for i in 0..10u32 {
        let mut c = change(&format!("c{i}"), &["src/a.c"]);
        c.created_at = ts(1 + i, 0);
        c.closed_at = Some(ts(1 + i, 6));
        c.invited_reviewers = BTreeSet::from(["r".to_string()]);
        if i > 0 {
            c.messages.push(MessageRecord { author: "r".into(), timestamp: ts(1 + i, 1), text: "ok".into() });
        }
        changes.push(c);
    }
    let index = TemporalIndex::build(&changes, &BTreeSet::new(), SubsystemRule::Project).unwrap();
    let dist = participation_rate_distribution(&index, ts(28, 0));
    assert_eq!(dist.reviewers.len(), 1);
    assert_eq!(dist.reviewers[0].rate, 0.9);
    assert_eq!(dist.median, 0.9);
    assert!(dist.reviewers.iter().all(|r| r.reviewer != "owner"));
}

fn account(id: &str, email: &str) -> AccountRef {
    AccountRef { account_id: id.into(), display_name: id.into(), email: email.into(), is_bot: false }
}

#[test]
fn org_shares() {
    let accounts = vec![
        account("1", "a@google.com"),
        account("2", "b@google.com"),
        account("3", "C@Google.COM"),
        account("4", "d@example.org"),
    ];
    let shares = org_diversity(&accounts);
    assert_eq!(shares[0].organization, "google.com");
    assert_eq!(shares[0].proportion, 0.75);
    assert_eq!(shares[1].proportion, 0.25);
    let unknown = org_diversity(&[account("1", ""), account("2", "")]);
    assert_eq!((unknown[0].organization.as_str(), unknown[0].proportion), ("unknown", 1.0));
    let total: f64 = org_diversity(&[account("1", "x@a.io"), account("2", "y@b.io"), account("3", "z@c.io")])
        .iter()
        .map(|s| s.proportion)
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn csv_outputs_have_headers() {
    let s = unresponded_summary(&[label("c1", "a", false), label("c1", "b", true)]);
    let mut out = Vec::new();
    write_violin_csv(&mut out, &s).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "change_id,invited,unresponded,proportion\nc1,2,1,0.5\n");
}
