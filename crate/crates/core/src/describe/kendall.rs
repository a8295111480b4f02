//! Kendall τ-b in O(n log n) (Knight's merge-sort method).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DescribeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMagnitude {
    Trivial,
    Small,
    Medium,
    Large,
}

impl TauMagnitude {
    pub fn of(tau: f64) -> Self {
        match tau.abs() {
            t if t < 0.1 => TauMagnitude::Trivial,
            t if t < 0.3 => TauMagnitude::Small,
            t if t < 0.5 => TauMagnitude::Medium,
            _ => TauMagnitude::Large,
        }
    }
}

impl fmt::Display for TauMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TauMagnitude::Trivial => "trivial",
            TauMagnitude::Small => "small",
            TauMagnitude::Medium => "medium",
            TauMagnitude::Large => "large",
        })
    }
}

/// Pairs tied within runs of equal values in an already sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for i in 1..=sorted.len() {
        if i < sorted.len() && sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Sorts `v` ascending, returning the number of inversions removed.
fn merge_count(v: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mut right = v.split_off(n / 2);
    let mut swaps = merge_count(v) + merge_count(&mut right);
    let left = std::mem::take(v);
    v.reserve(n);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            swaps += (left.len() - i) as u64;
            v.push(right[j]);
            j += 1;
        } else {
            v.push(left[i]);
            i += 1;
        }
    }
    v.extend_from_slice(&left[i..]);
    v.extend_from_slice(&right[j..]);
    swaps
}

/// τ-b = (C − D) / sqrt((n₀ − n₁)(n₀ − n₂)) with its magnitude label.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<(f64, TauMagnitude), DescribeError> {
    if x.len() != y.len() {
        return Err(DescribeError::Length(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(DescribeError::TooFew { need: 2, got: n });
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal)));
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs);
    let joint = tied_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = merge_count(&mut ys);
    let n2 = tied_pairs(&ys);
    if n1 == n0 || n2 == n0 {
        return Err(DescribeError::AllTied);
    }
    let numerator = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    let tau = numerator as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    Ok((tau, TauMagnitude::of(tau)))
}
