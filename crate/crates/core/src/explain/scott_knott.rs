//! Scott-Knott clustering of distributions with effect-size merging.

use std::f64::consts::PI;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::stats::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScottKnottConfig {
    pub alpha: f64,
    /// Adjacent ranks whose Cohen's d falls below this are merged.
    pub negligible_d: f64,
}

impl Default for ScottKnottConfig {
    fn default() -> Self {
        ScottKnottConfig { alpha: 0.05, negligible_d: 0.2 }
    }
}

/// Values are divided by a common reference scale (the pooled median of |x|) and then
/// passed through `sign(x)·ln(1 + |x|)`. The division keeps ranks unchanged when every
/// distribution is multiplied by the same positive constant.
fn transform(distributions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = distributions.iter().flatten().map(|v| v.abs()).collect();
    let mut scale = median(&pooled);
    if !(scale > 0.0) {
        scale = mean(&pooled);
    }
    if !(scale > 0.0 && scale.is_finite()) {
        scale = 1.0;
    }
    distributions
        .iter()
        .map(|d| d.iter().map(|&v| (v / scale).signum() * (v / scale).abs().ln_1p()).collect())
        .collect()
}

fn cohens_d(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let dof = (a.len() + b.len()).saturating_sub(2).max(1) as f64;
    let pooled = ((ss(a, ma) + ss(b, mb)) / dof).sqrt();
    let diff = (ma - mb).abs();
    if diff == 0.0 {
        0.0
    } else if pooled > 0.0 {
        diff / pooled
    } else {
        f64::INFINITY
    }
}

struct Context {
    /// Error variance of a group mean.
    mean_error_var: f64,
    error_dof: f64,
    alpha: f64,
}

/// Splits the mean-ordered slice `means` recursively; returns cut positions (exclusive ends).
fn split(means: &[f64], offset: usize, ctx: &Context, cuts: &mut Vec<usize>) {
    let k = means.len();
    if k < 2 {
        return;
    }
    let grand = means.iter().sum::<f64>() / k as f64;
    let mut best = (0.0, 0);
    for cut in 1..k {
        let m1 = means[..cut].iter().sum::<f64>() / cut as f64;
        let m2 = means[cut..].iter().sum::<f64>() / (k - cut) as f64;
        let b0 = cut as f64 * (m1 - grand).powi(2) + (k - cut) as f64 * (m2 - grand).powi(2);
        if b0 > best.0 {
            best = (b0, cut);
        }
    }
    let (b0, cut) = best;
    if cut == 0 {
        return;
    }
    let spread: f64 = means.iter().map(|m| (m - grand).powi(2)).sum();
    let sigma2 = (spread + ctx.error_dof * ctx.mean_error_var) / (k as f64 + ctx.error_dof);
    let lambda = if sigma2 > 0.0 { PI / (2.0 * (PI - 2.0)) * b0 / sigma2 } else { f64::INFINITY };
    let dof = k as f64 / (PI - 2.0);
    let p = ChiSquared::new(dof).map(|d| d.sf(lambda)).unwrap_or(1.0);
    if p < ctx.alpha {
        split(&means[..cut], offset, ctx, cuts);
        cuts.push(offset + cut);
        split(&means[cut..], offset + cut, ctx, cuts);
    }
}

/// Ranks distributions (1 = highest mean). Returns one rank per input, in input order.
pub fn scott_knott_esd(distributions: &[Vec<f64>], config: ScottKnottConfig) -> Vec<usize> {
    let k = distributions.len();
    if k == 0 {
        return Vec::new();
    }
    let data = transform(distributions);
    let means: Vec<f64> = data.iter().map(|d| mean(d)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    let sorted_means: Vec<f64> = order.iter().map(|&i| means[i]).collect();

    let total: usize = data.iter().map(Vec::len).sum();
    let within: f64 = data.iter().zip(&means).map(|(d, m)| d.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sum();
    let error_dof = total.saturating_sub(k).max(1) as f64;
    let per_group = total as f64 / k as f64;
    let ctx = Context { mean_error_var: within / error_dof / per_group, error_dof, alpha: config.alpha };

    let mut cuts = Vec::new();
    split(&sorted_means, 0, &ctx, &mut cuts);
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(k);
    let mut groups: Vec<Vec<usize>> = bounds.windows(2).map(|w| order[w[0]..w[1]].to_vec()).collect();

    // Merge adjacent groups with negligible effect size, smallest d first.
    loop {
        let pooled: Vec<Vec<f64>> =
            groups.iter().map(|g| g.iter().flat_map(|&i| data[i].iter().copied()).collect()).collect();
        let weakest = (0..groups.len().saturating_sub(1))
            .map(|i| (i, cohens_d(&pooled[i], &pooled[i + 1])))
            .filter(|&(_, d)| d < config.negligible_d)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match weakest {
            Some((i, _)) => {
                let next = groups.remove(i + 1);
                groups[i].extend(next);
            }
            None => break,
        }
    }

    let mut ranks = vec![0; k];
    for (r, g) in groups.iter().enumerate() {
        for &i in g {
            ranks[i] = r + 1;
        }
    }
    ranks
}
