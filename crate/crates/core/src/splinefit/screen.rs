//! Predictor screening: rank correlation clustering, redundancy analysis and
//! degrees-of-freedom allocation.

use serde::{Deserialize, Serialize};

use super::SplineFitError;
use crate::frame::Frame;
use crate::linalg::Cholesky;
use crate::stats::{midranks, pearson};

/// Spearman rank correlation; errors when either input has zero rank variance.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, SplineFitError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(SplineFitError::Input(format!("spearman needs equal lengths >= 2, got {} and {}", x.len(), y.len())));
    }
    pearson(&midranks(x), &midranks(y)).ok_or(SplineFitError::ZeroVariance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<String>,
    pub kept: String,
    /// Smallest |ρ| between any two members.
    pub min_abs_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterReport {
    pub survivors: Vec<String>,
    pub dropped: Vec<String>,
    /// Correlated clusters found in each pass.
    pub rounds: Vec<Vec<Cluster>>,
}

fn priority_rank(name: &str, priority: &[String], fallback: usize) -> usize {
    priority.iter().position(|p| p == name).unwrap_or(priority.len() + fallback)
}

/// Pairwise |ρ| matrix; undefined correlations (constant columns) count as 0.
fn abs_rho_matrix(frame: &Frame, variables: &[String]) -> Result<Vec<Vec<f64>>, SplineFitError> {
    let ranks: Vec<Vec<f64>> =
        variables.iter().map(|v| frame.column(v).map(midranks)).collect::<Result<_, _>>()?;
    let n = variables.len();
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = pearson(&ranks[i], &ranks[j]).map(f64::abs).unwrap_or(0.0);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

/// Complete-linkage clustering on `1 − |ρ|`, cut where every within-cluster pair has
/// `|ρ| > threshold`. Each multi-member cluster keeps its highest-priority variable;
/// passes repeat until no surviving pair exceeds the threshold.
pub fn variable_clustering(
    frame: &Frame,
    variables: &[String],
    threshold: f64,
    priority: &[String],
) -> Result<ClusterReport, SplineFitError> {
    let rho = abs_rho_matrix(frame, variables)?;
    let mut alive: Vec<usize> = (0..variables.len()).collect();
    let mut report = ClusterReport::default();

    loop {
        let mut clusters: Vec<Vec<usize>> = alive.iter().map(|&i| vec![i]).collect();
        loop {
            // Complete-linkage similarity = smallest |ρ| across the two clusters.
            let mut best: Option<(usize, usize, f64)> = None;
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let sim = clusters[a]
                        .iter()
                        .flat_map(|&i| clusters[b].iter().map(move |&j| (i, j)))
                        .map(|(i, j)| rho[i][j])
                        .fold(f64::INFINITY, f64::min);
                    if sim > threshold && best.is_none_or(|(_, _, s)| sim > s) {
                        best = Some((a, b, sim));
                    }
                }
            }
            match best {
                Some((a, b, _)) => {
                    let merged = clusters.remove(b);
                    clusters[a].extend(merged);
                }
                None => break,
            }
        }

        let mut round = Vec::new();
        for members in clusters.iter().filter(|c| c.len() > 1) {
            let kept = *members
                .iter()
                .min_by_key(|&&i| (priority_rank(&variables[i], priority, i), i))
                .expect("non-empty cluster");
            let mut min_abs_rho = f64::INFINITY;
            for &i in members {
                for &j in members {
                    if i < j {
                        min_abs_rho = min_abs_rho.min(rho[i][j]);
                    }
                }
            }
            let mut names: Vec<usize> = members.clone();
            names.sort_unstable();
            round.push(Cluster {
                members: names.iter().map(|&i| variables[i].clone()).collect(),
                kept: variables[kept].clone(),
                min_abs_rho,
            });
            for &i in members.iter().filter(|&&i| i != kept) {
                alive.retain(|&a| a != i);
                report.dropped.push(variables[i].clone());
            }
        }
        if round.is_empty() {
            break;
        }
        report.rounds.push(round);
    }
    report.survivors = alive.iter().map(|&i| variables[i].clone()).collect();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub survivors: Vec<String>,
    /// Dropped variables with the R² that triggered removal, in removal order.
    pub dropped: Vec<(String, f64)>,
}

/// R² of each variable regressed (OLS with intercept) on all the others.
fn redundancy_r2(columns: &[&[f64]]) -> Vec<f64> {
    let p = columns.len();
    let n = columns.first().map(|c| c.len()).unwrap_or(0);
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let mut cov = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = (0..n).map(|r| (columns[i][r] - means[i]) * (columns[j][r] - means[j])).sum();
            cov[i * p + j] = s;
            cov[j * p + i] = s;
        }
    }
    // Work on the correlation scale for conditioning.
    let sd: Vec<f64> = (0..p).map(|i| cov[i * p + i].sqrt()).collect();
    (0..p)
        .map(|target| {
            if !(sd[target] > 0.0) {
                return 1.0;
            }
            let others: Vec<usize> = (0..p).filter(|&k| k != target && sd[k] > 0.0).collect();
            if others.is_empty() {
                return 0.0;
            }
            let q = others.len();
            let mut a = vec![0.0; q * q];
            let mut b = vec![0.0; q];
            for (u, &i) in others.iter().enumerate() {
                b[u] = cov[i * p + target] / (sd[i] * sd[target]);
                for (v, &j) in others.iter().enumerate() {
                    a[u * q + v] = cov[i * p + j] / (sd[i] * sd[j]);
                }
            }
            let beta = Cholesky::factor(&a, q).solve(&b);
            let r2: f64 = beta.iter().zip(&b).map(|(x, y)| x * y).sum();
            r2.clamp(0.0, 1.0)
        })
        .collect()
}

/// Iteratively drops the variable best explained by the others while its R² exceeds
/// `r2_threshold`. Near-ties drop the lowest-priority variable. One variable always survives.
pub fn redundancy_filter(
    frame: &Frame,
    variables: &[String],
    r2_threshold: f64,
    priority: &[String],
) -> Result<RedundancyReport, SplineFitError> {
    let mut alive: Vec<String> = variables.to_vec();
    let mut report = RedundancyReport::default();
    while alive.len() > 1 {
        let cols: Vec<&[f64]> = alive.iter().map(|v| frame.column(v)).collect::<Result<_, _>>()?;
        let r2 = redundancy_r2(&cols);
        let max = r2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(max > r2_threshold) {
            break;
        }
        let victim = (0..alive.len())
            .filter(|&i| r2[i] >= max - 1e-9)
            .max_by_key(|&i| (priority_rank(&alive[i], priority, i), i))
            .expect("at least one maximal variable");
        let name = alive.remove(victim);
        report.dropped.push((name, r2[victim]));
    }
    report.survivors = alive;
    Ok(report)
}

/// Degrees-of-freedom budget `floor(min(T, F) / 15)`.
pub fn dof_budget(true_count: usize, false_count: usize) -> usize {
    true_count.min(false_count) / 15
}

/// R² of `y` regressed on `rank(x)` and `rank(x)²`; zero for constant `x`.
pub fn spearman_multiple_rho2(x: &[f64], y: &[f64]) -> Result<f64, SplineFitError> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(SplineFitError::Input(format!("rho2 needs equal lengths >= 3, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let r = midranks(x);
    let r2: Vec<f64> = r.iter().map(|v| v * v).collect();
    let cols = [r.as_slice(), r2.as_slice()];
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n).collect();
    let my = y.iter().sum::<f64>() / n;
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if !(syy > 0.0) {
        return Ok(0.0);
    }
    let mut a = [0.0; 4];
    let mut b = [0.0; 2];
    for k in 0..x.len() {
        let d = [cols[0][k] - means[0], cols[1][k] - means[1]];
        let dy = y[k] - my;
        for i in 0..2 {
            b[i] += d[i] * dy;
            for j in 0..2 {
                a[i * 2 + j] += d[i] * d[j];
            }
        }
    }
    if !(a[0] > 0.0) {
        return Ok(0.0);
    }
    let beta = Cholesky::factor(&a, 2).solve(&b);
    let ssr = beta[0] * b[0] + beta[1] * b[1];
    Ok((ssr / syy).clamp(0.0, 1.0))
}

/// Tiered allocation: variables whose ρ² reaches `high_ratio · max ρ²` get `spline_dof`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofPolicy {
    pub high_ratio: f64,
    pub spline_dof: usize,
}

impl Default for DofPolicy {
    fn default() -> Self {
        DofPolicy { high_ratio: 0.3, spline_dof: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub variable: String,
    pub rho2: f64,
    pub binary: bool,
    pub dof: usize,
}

/// Allocates degrees of freedom per variable within `budget`, demoting the lowest-ρ²
/// splined variables to one degree of freedom when the total would exceed it.
pub fn allocate_dof(
    rho2: &[(String, f64)],
    binary: &[String],
    budget: usize,
    policy: DofPolicy,
) -> Result<Vec<Allocation>, SplineFitError> {
    if budget < rho2.len() {
        return Err(SplineFitError::BudgetTooSmall { budget, variables: rho2.len() });
    }
    let max = rho2.iter().map(|(_, r)| *r).fold(0.0_f64, f64::max);
    let cut = policy.high_ratio * max;
    let mut out: Vec<Allocation> = rho2
        .iter()
        .map(|(name, r)| {
            let is_binary = binary.contains(name);
            let dof = if !is_binary && *r >= cut && policy.spline_dof > 1 { policy.spline_dof } else { 1 };
            Allocation { variable: name.clone(), rho2: *r, binary: is_binary, dof }
        })
        .collect();
    let mut total: usize = out.iter().map(|a| a.dof).sum();
    if total > budget {
        let mut splined: Vec<usize> = (0..out.len()).filter(|&i| out[i].dof > 1).collect();
        splined.sort_by(|&a, &b| out[a].rho2.total_cmp(&out[b].rho2).then(b.cmp(&a)));
        for i in splined {
            if total <= budget {
                break;
            }
            total -= out[i].dof - 1;
            out[i].dof = 1;
        }
    }
    Ok(out)
}
