//! Explanatory power and direction of each variable: bootstrap Wald χ², Scott-Knott ESD
//! ranks, partial effects and interquartile odds ratios.

mod scott_knott;

pub use scott_knott::{scott_knott_esd, ScottKnottConfig};

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evaluate::{iteration_rng, resample, MAX_ATTEMPTS_PER_ITERATION};
use crate::frame::Frame;
use crate::splinefit::{fit_spec, is_binary, logistic, refit_knots, FittedModel, ModelSpec, SplineFitError};
use crate::stats::{format_sig9, mean, median, mode, quantile, quantiles};

/// A variable is marked significant when p falls below this in more than [`SIGNIFICANT_SHARE`]
/// of bootstrap fits.
pub const SIGNIFICANCE_P: f64 = 0.001;
pub const SIGNIFICANT_SHARE: f64 = 0.9;
/// Largest share of redrawn bootstrap samples before the run is abandoned.
pub const MAX_REDRAW_SHARE: f64 = 0.05;

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("{redraws} of {iterations} bootstrap samples had to be redrawn (limit 5%); last failure: {last}")]
    TooManyRedraws { redraws: usize, iterations: usize, last: String },
    #[error(transparent)]
    Fit(#[from] SplineFitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldBootstrap {
    pub variables: Vec<String>,
    /// Per variable, one χ² per iteration.
    pub chi2: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub iterations: usize,
    pub seed: u64,
    pub redraws: usize,
}

struct Draw {
    chi2: Vec<f64>,
    p: Vec<f64>,
    redraws: usize,
    last: String,
}

fn wald_iteration(frame: &Frame, spec: &ModelSpec, seed: u64, index: usize) -> Result<Draw, String> {
    let mut rng = iteration_rng(seed, index);
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS_PER_ITERATION {
        let (rows, _) = resample(&mut rng, frame.nrows());
        let sample = frame.select_rows(&rows);
        let result = refit_knots(spec, &sample).and_then(|s| fit_spec(&s, &sample)).and_then(|m| {
            if m.separated {
                Err(SplineFitError::Input("fit separated".into()))
            } else {
                m.anova()
            }
        });
        match result {
            Ok(anova) => {
                return Ok(Draw {
                    chi2: anova.iter().map(|w| w.chi2).collect(),
                    p: anova.iter().map(|w| w.p).collect(),
                    redraws: attempt,
                    last,
                })
            }
            Err(e) => {
                last = e.to_string();
                log::debug!("wald bootstrap iteration {index}: {last}, redrawing");
            }
        }
    }
    Err(last)
}

/// Joint Wald χ² of every variable over `iterations` with-replacement resamples.
pub fn bootstrap_wald(frame: &Frame, spec: &ModelSpec, iterations: usize, seed: u64) -> Result<WaldBootstrap, ExplainError> {
    let limit = (MAX_REDRAW_SHARE * iterations as f64).floor() as usize;
    let draws: Vec<Result<Draw, String>> =
        (0..iterations).into_par_iter().map(|i| wald_iteration(frame, spec, seed, i)).collect();
    let mut redraws = 0;
    let mut last = String::new();
    for d in &draws {
        match d {
            Ok(d) => {
                redraws += d.redraws;
                if !d.last.is_empty() {
                    last = d.last.clone();
                }
            }
            Err(e) => {
                redraws += MAX_ATTEMPTS_PER_ITERATION;
                last = e.clone();
            }
        }
    }
    if redraws > limit {
        return Err(ExplainError::TooManyRedraws { redraws, iterations, last });
    }
    let draws: Vec<Draw> = draws.into_iter().map(|d| d.expect("failures exceed the redraw limit")).collect();
    let k = spec.variables.len();
    Ok(WaldBootstrap {
        variables: spec.names(),
        chi2: (0..k).map(|v| draws.iter().map(|d| d.chi2[v]).collect()).collect(),
        p: (0..k).map(|v| draws.iter().map(|d| d.p[v]).collect()).collect(),
        iterations,
        seed,
        redraws,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub variable: String,
    pub rank: usize,
    pub mean_chi2: f64,
    pub median_chi2: f64,
    /// Share of bootstrap fits with p < 0.001.
    pub significance_fraction: f64,
    pub significant: bool,
    /// Full-data fit: share of total χ² overall and for the nonlinear terms.
    pub overall_proportion: f64,
    pub nonlinear_proportion: f64,
    pub chi2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    /// Ordered by rank, then by decreasing mean χ².
    pub entries: Vec<RankEntry>,
    pub iterations: usize,
    pub seed: u64,
    pub redraws: usize,
}

pub fn rank_report(full: &FittedModel, wald: &WaldBootstrap, config: ScottKnottConfig) -> Result<RankReport, ExplainError> {
    let anova = full.anova()?;
    let ranks = scott_knott_esd(&wald.chi2, config);
    let mut entries: Vec<RankEntry> = wald
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let full_row = anova.iter().find(|w| &w.variable == v);
            let fraction = wald.p[i].iter().filter(|&&p| p < SIGNIFICANCE_P).count() as f64 / wald.p[i].len().max(1) as f64;
            RankEntry {
                variable: v.clone(),
                rank: ranks[i],
                mean_chi2: mean(&wald.chi2[i]),
                median_chi2: median(&wald.chi2[i]),
                significance_fraction: fraction,
                significant: fraction > SIGNIFICANT_SHARE,
                overall_proportion: full_row.map_or(0.0, |w| w.proportion),
                nonlinear_proportion: full_row.map_or(0.0, |w| w.nonlinear_proportion),
                chi2: wald.chi2[i].clone(),
            }
        })
        .collect();
    entries.sort_by(|a, b| a.rank.cmp(&b.rank).then(b.mean_chi2.total_cmp(&a.mean_chi2)).then(a.variable.cmp(&b.variable)));
    Ok(RankReport { entries, iterations: wald.iterations, seed: wald.seed, redraws: wald.redraws })
}

/// Values other variables are held at: median, or mode for binary variables.
pub fn typical_values(model: &FittedModel, frame: &Frame) -> Result<Vec<(String, f64)>, SplineFitError> {
    model
        .spec
        .variables
        .iter()
        .map(|v| {
            let col = frame.column(&v.name)?;
            let value = if v.binary || is_binary(col) { mode(col) } else { median(col) };
            Ok((v.name.clone(), value))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEffect {
    pub variable: String,
    pub grid: Vec<f64>,
    pub probability: Vec<f64>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// Values the other variables were held at.
    pub fixed: Vec<(String, f64)>,
}

fn variable_index(model: &FittedModel, variable: &str) -> Result<usize, SplineFitError> {
    model
        .spec
        .variables
        .iter()
        .position(|v| v.name == variable)
        .ok_or_else(|| SplineFitError::MissingVariable(variable.into()))
}

/// Linear predictor and its delta-method standard error at `values`.
fn eta_and_se(model: &FittedModel, values: &[f64]) -> (f64, f64) {
    let g = model.spec.expand(values);
    let p = g.len();
    let eta: f64 = g.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum();
    let mut var = 0.0;
    for i in 0..p {
        for j in 0..p {
            var += g[i] * model.covariance[i * p + j] * g[j];
        }
    }
    (eta, var.max(0.0).sqrt())
}

/// Predicted probability across the variable's 1st–99th percentile (or {0, 1} when binary),
/// with a 95% delta-method band.
pub fn partial_effect(
    model: &FittedModel,
    frame: &Frame,
    variable: &str,
    grid_size: usize,
) -> Result<PartialEffect, SplineFitError> {
    let idx = variable_index(model, variable)?;
    let col = frame.column(variable)?;
    let mut values: Vec<f64> = typical_values(model, frame)?.into_iter().map(|(_, v)| v).collect();
    let grid: Vec<f64> = if model.spec.variables[idx].binary || is_binary(col) {
        vec![0.0, 1.0]
    } else {
        let q = quantiles(col, &[0.01, 0.99]);
        let n = grid_size.max(2);
        if q[0] == q[1] {
            vec![q[0]]
        } else {
            (0..n).map(|i| q[0] + (q[1] - q[0]) * i as f64 / (n - 1) as f64).collect()
        }
    };
    let fixed = model
        .spec
        .variables
        .iter()
        .zip(&values)
        .filter(|(v, _)| v.name != variable)
        .map(|(v, &x)| (v.name.clone(), x))
        .collect();
    let (mut probability, mut low, mut high) = (Vec::new(), Vec::new(), Vec::new());
    for &x in &grid {
        values[idx] = x;
        let (eta, se) = eta_and_se(model, &values);
        probability.push(logistic(eta));
        low.push(logistic(eta - 1.96 * se));
        high.push(logistic(eta + 1.96 * se));
    }
    Ok(PartialEffect { variable: variable.into(), grid, probability, low, high, fixed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioEntry {
    pub variable: String,
    pub q1: f64,
    pub q3: f64,
    pub odds_ratio: f64,
    pub percent: f64,
    /// The quartiles coincide, so no shift is possible.
    pub degenerate: bool,
}

/// Odds ratio for moving the variable from its first to third quartile (0 → 1 when binary),
/// other variables at their typical values.
pub fn odds_ratio_iqr(model: &FittedModel, frame: &Frame, variable: &str) -> Result<OddsRatioEntry, SplineFitError> {
    let idx = variable_index(model, variable)?;
    let col = frame.column(variable)?;
    let (q1, q3) = if model.spec.variables[idx].binary || is_binary(col) {
        (0.0, 1.0)
    } else {
        (quantile(col, 0.25), quantile(col, 0.75))
    };
    if q1 == q3 {
        return Ok(OddsRatioEntry { variable: variable.into(), q1, q3, odds_ratio: 1.0, percent: 0.0, degenerate: true });
    }
    let mut values: Vec<f64> = typical_values(model, frame)?.into_iter().map(|(_, v)| v).collect();
    values[idx] = q1;
    let low = model.linear_predictor(&values);
    values[idx] = q3;
    let high = model.linear_predictor(&values);
    let odds_ratio = (high - low).exp();
    Ok(OddsRatioEntry { variable: variable.into(), q1, q3, odds_ratio, percent: (odds_ratio - 1.0) * 100.0, degenerate: false })
}

pub fn write_partial_effects_csv<W: Write>(out: W, effects: &[PartialEffect]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "x", "p", "low", "high"])?;
    for e in effects {
        for i in 0..e.grid.len() {
            w.write_record([
                e.variable.as_str(),
                &format_sig9(e.grid[i]),
                &format_sig9(e.probability[i]),
                &format_sig9(e.low[i]),
                &format_sig9(e.high[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
