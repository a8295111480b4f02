use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::frame::Frame;
use crate::splinefit::{ModelSpec, VariableSpec};

fn labels(t: usize, f: usize) -> Vec<bool> {
    let mut v = vec![true; t];
    v.extend(vec![false; f]);
    v
}

/// Exhaustive pair count.
fn auc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let (mut p, mut n) = (0usize, 0usize);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            n += 1;
        }
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / (p as f64 * n as f64)
}

#[test]
fn auc_examples() {
    assert_eq!(auc(&[0.9, 0.8, 0.7, 0.1], &labels(2, 2)).unwrap(), 1.0);
    assert_eq!(auc(&[0.9, 0.4, 0.7, 0.1], &labels(2, 2)).unwrap(), 0.75);
    assert_eq!(auc(&[0.3; 6], &labels(3, 3)).unwrap(), 0.5);
    assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(EvalError::MissingClass(_))));
}

#[test]
fn auc_matches_exhaustive_oracle_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        y[0] = true;
        y[1] = false;
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64 / 20.0).collect();
        assert_eq!(auc(&s, &y).unwrap(), auc_oracle(&s, &y));
        let flipped: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        assert!((auc(&s, &y).unwrap() + auc(&flipped, &y).unwrap() - 1.0).abs() < 1e-12);
        let warped: Vec<f64> = s.iter().map(|v| (5.0 * v).exp()).collect();
        assert_eq!(auc(&warped, &y).unwrap(), auc(&s, &y).unwrap());
    }
}

#[test]
fn brier_examples() {
    assert_eq!(brier(&[1.0, 0.0], &[true, false]).unwrap(), 0.0);
    assert_eq!(brier(&[0.5; 7], &labels(3, 4)).unwrap(), 0.25);
    assert!((brier(&[0.8, 0.3], &[true, false]).unwrap() - 0.065).abs() < 1e-15);
    for (p, t, f) in [(0.2, 3, 7), (0.9, 10, 1), (0.5, 1, 1)] {
        let r = t as f64 / (t + f) as f64;
        let want = r * (1.0 - p) * (1.0 - p) + (1.0 - r) * p * p;
        assert!((brier(&vec![p; t + f], &labels(t, f)).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn prf_examples() {
    assert_eq!(f_measure(0.5, 0.5), 0.5);
    assert_eq!(f_measure(1.0, 0.0), 0.0);
    // TP=2, FP=1, FN=1.
    let got = prf(&[0.9, 0.6, 0.7, 0.2], &[true, true, false, true], 0.5).unwrap();
    for v in [got.precision, got.recall, got.f_measure] {
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }
    let none = prf(&[0.1, 0.2], &[true, false], 0.5).unwrap();
    assert_eq!((none.precision, none.recall, none.f_measure), (0.0, 0.0, 0.0));
}

#[test]
fn npv_examples() {
    assert_eq!(negative_predictive_value(&[0.1, 0.2, 0.9], &[false, false, true], 0.5).unwrap(), 1.0);
    let s = [0.1, 0.2, 0.3, 0.4, 0.8];
    assert_eq!(negative_predictive_value(&s, &[false, false, false, true, true], 0.5).unwrap(), 0.75);
    assert!(matches!(negative_predictive_value(&[0.7, 0.9], &[true, false], 0.5), Err(EvalError::NoPredictedNegatives(_))));
}

#[test]
fn improvement_examples() {
    assert!((improvement(0.89, 0.77).unwrap() - 0.155_844_155_844).abs() < 1e-9);
    assert!((improvement(0.13, 0.19).unwrap() + 0.315_789_473_684).abs() < 1e-9);
    assert_eq!(improvement(0.4, 0.4).unwrap(), 0.0);
    assert!(matches!(improvement(0.4, 0.0), Err(EvalError::ZeroBaseline)));
}

fn cliffs_oracle(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for x in a {
        for y in b {
            s += (x > y) as i64 - (x < y) as i64;
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

#[test]
fn cliffs_delta_examples_and_oracle() {
    assert_eq!(cliffs_delta(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), (0.0, Magnitude::Negligible));
    assert_eq!(cliffs_delta(&[5.0, 6.0], &[1.0, 2.0]), (1.0, Magnitude::Large));
    // Pairs (1,1) tie, (1,3) <, (2,1) >, (2,3) <.
    assert_eq!(cliffs_delta(&[1.0, 2.0], &[1.0, 3.0]).0, -0.25);
    assert_eq!(cliffs_oracle(&[1.0, 2.0], &[1.0, 3.0]), -0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let a: Vec<f64> = (0..rng.random_range(1..60)).map(|_| rng.random_range(0..10) as f64).collect();
        let b: Vec<f64> = (0..rng.random_range(1..60)).map(|_| rng.random_range(0..12) as f64).collect();
        assert_eq!(cliffs_delta(&a, &b).0, cliffs_oracle(&a, &b));
        assert_eq!(cliffs_delta(&a, &b).0, -cliffs_delta(&b, &a).0);
    }
    assert_eq!(Magnitude::of_delta(0.146), Magnitude::Negligible);
    assert_eq!(Magnitude::of_delta(-0.2), Magnitude::Small);
    assert_eq!(Magnitude::of_delta(0.4), Magnitude::Medium);
    assert_eq!(Magnitude::of_delta(0.474), Magnitude::Large);
}

fn scored(r: &str, score: f64, responded: bool) -> Scored {
    Scored { reviewer: r.into(), score, responded }
}

#[test]
fn topk_examples() {
    let hit = vec![scored("a", 0.9, true), scored("b", 0.2, false), scored("c", 0.1, false)];
    assert_eq!(topk_accuracy(&[hit.clone()], 1), 1.0);
    let miss = vec![scored("a", 0.9, false), scored("b", 0.5, true)];
    assert_eq!(topk_accuracy(&[miss.clone()], 1), 0.0);
    assert_eq!(topk_accuracy(&[miss.clone()], 2), 1.0);
    // Third change: tie at the top broken by id, "b" loses to "a".
    let tie = vec![scored("b", 0.6, true), scored("a", 0.6, false), scored("c", 0.1, false)];
    let all = vec![hit, miss, tie];
    assert!((topk_accuracy(&all, 1) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(topk_accuracy(&all, 2), 1.0);
    assert_eq!(topk_accuracy(&all, 10), 1.0);
}

fn planted(seed: u64, n: usize, signal: f64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<bool> = x.iter().map(|v| rng.random::<f64>() < 1.0 / (1.0 + (-signal * v).exp())).collect();
    Frame::new(vec!["x".into(), "z".into()], vec![x, z], y).unwrap()
}

fn spec() -> ModelSpec {
    ModelSpec::new(
        vec![VariableSpec { name: "x".into(), allocated_dof: 2, binary: false, knots: None }, VariableSpec::linear("z")],
        17,
    )
}

#[test]
fn bootstrap_is_deterministic_and_schedule_independent() {
    let f = planted(4, 400, 3.0);
    let cfg = BootstrapConfig { iterations: 12, seed: 9, threshold: 0.5 };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let a = serial.install(|| out_of_sample_bootstrap(&f, &spec(), &cfg)).unwrap();
    let b = wide.install(|| out_of_sample_bootstrap(&f, &spec(), &cfg)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.auc.values.len(), 12);
    for s in [&a.auc, &a.brier, &a.precision, &a.recall, &a.f_measure] {
        assert!(s.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    let one = BootstrapConfig { iterations: 1, ..cfg };
    assert_eq!(out_of_sample_bootstrap(&f, &spec(), &one).unwrap(), out_of_sample_bootstrap(&f, &spec(), &one).unwrap());
}

#[test]
fn bootstrap_separates_signal_from_noise() {
    let cfg = BootstrapConfig { iterations: 20, seed: 1, threshold: 0.5 };
    let signal = out_of_sample_bootstrap(&planted(5, 600, 3.0), &spec(), &cfg).unwrap();
    let noise = out_of_sample_bootstrap(&planted(6, 600, 0.0), &spec(), &cfg).unwrap();
    assert!(signal.auc.mean > 0.75, "{}", signal.auc.mean);
    assert!((0.4..0.6).contains(&noise.auc.mean), "{}", noise.auc.mean);
}

#[test]
fn resample_partitions_rows() {
    let mut rng = iteration_rng(3, 7);
    let (rows, oob) = resample(&mut rng, 100);
    assert_eq!(rows.len(), 100);
    assert!(oob.iter().all(|r| !rows.contains(r)));
    assert!((0..100).all(|r| rows.contains(&r) || oob.contains(&r)));
}
