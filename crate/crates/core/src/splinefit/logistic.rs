//! Maximum-likelihood logistic regression by iteratively reweighted least squares.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::design::{design_matrix, Design, ModelSpec, TermMap};
use super::SplineFitError;
use crate::frame::Frame;
use crate::linalg::{inverse_quadratic_form, submatrix, Cholesky};

pub const MAX_ITERATIONS: usize = 25;
pub const DEVIANCE_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 30;
const SEPARATION_BETA: f64 = 15.0;
const PROB_FLOOR: f64 = 1e-15;

pub fn logistic(eta: f64) -> f64 {
    let p = if eta >= 0.0 { 1.0 / (1.0 + (-eta).exp()) } else { eta.exp() / (1.0 + eta.exp()) };
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    /// Row-major inverse information matrix.
    pub covariance: Vec<f64>,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Coefficients diverging towards complete separation.
    pub separated: bool,
}

fn deviance_of(x: &[f64], n: usize, p: usize, y: &[bool], beta: &[f64]) -> f64 {
    let mut dev = 0.0;
    for r in 0..n {
        let eta: f64 = x[r * p..(r + 1) * p].iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = logistic(eta);
        dev -= 2.0 * if y[r] { mu.ln() } else { (1.0 - mu).ln() };
    }
    dev
}

/// Information matrix `XᵀWX` and score `Xᵀ(y − μ)` at `beta`.
fn information(x: &[f64], n: usize, p: usize, y: &[bool], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut info = vec![0.0; p * p];
    let mut score = vec![0.0; p];
    for r in 0..n {
        let row = &x[r * p..(r + 1) * p];
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        let mu = logistic(eta);
        let w = mu * (1.0 - mu);
        let resid = if y[r] { 1.0 } else { 0.0 } - mu;
        for i in 0..p {
            score[i] += row[i] * resid;
            let wi = w * row[i];
            for j in 0..=i {
                info[i * p + j] += wi * row[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            info[j * p + i] = info[i * p + j];
        }
    }
    (info, score)
}

/// Fits `P(y) = logistic(Xβ)`. Columns are rescaled internally for conditioning; the
/// returned coefficients and covariance are on the original scale.
pub fn fit_logistic(design: &Design, y: &[bool]) -> Result<LogisticFit, SplineFitError> {
    let (n, p) = (design.n, design.p);
    if y.len() != n {
        return Err(SplineFitError::Input(format!("outcome has {} rows, design has {n}", y.len())));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(SplineFitError::SingleClass);
    }
    if n <= p {
        return Err(SplineFitError::Input(format!("{n} rows cannot support {p} columns")));
    }

    let scale: Vec<f64> = (0..p)
        .map(|j| {
            let ss: f64 = (0..n).map(|r| design.x[r * p + j].powi(2)).sum();
            let rms = (ss / n as f64).sqrt();
            if rms > 0.0 { rms } else { 1.0 }
        })
        .collect();
    let x: Vec<f64> = design.x.iter().enumerate().map(|(i, v)| v / scale[i % p]).collect();

    let mut beta = vec![0.0; p];
    let (info0, _) = information(&x, n, p, y, &beta);
    let chol0 = Cholesky::factor(&info0, p);
    if !chol0.is_full_rank() {
        return Err(SplineFitError::Singular {
            columns: chol0.skipped().iter().map(|&j| design.column_names[j].clone()).collect(),
        });
    }

    let mut dev = deviance_of(&x, n, p, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (info, score) = information(&x, n, p, y, &beta);
        let step = Cholesky::factor(&info, p).solve(&score);
        let mut factor = 1.0;
        let mut candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
        let mut new_dev = deviance_of(&x, n, p, y, &candidate);
        let mut halvings = 0;
        while !(new_dev <= dev + DEVIANCE_TOL * (dev.abs() + 0.1)) && halvings < MAX_HALVINGS {
            factor *= 0.5;
            halvings += 1;
            candidate = beta.iter().zip(&step).map(|(b, s)| b + factor * s).collect();
            new_dev = deviance_of(&x, n, p, y, &candidate);
        }
        if !(new_dev <= dev + DEVIANCE_TOL * (dev.abs() + 0.1)) {
            // No step improves the likelihood: we are at the optimum to working precision.
            converged = true;
            break;
        }
        let change = (dev - new_dev).abs();
        beta = candidate;
        dev = new_dev;
        if change < DEVIANCE_TOL * (dev.abs() + 0.1) {
            converged = true;
            break;
        }
    }

    let separated = beta.iter().any(|b| b.abs() > SEPARATION_BETA);
    let (info, _) = information(&x, n, p, y, &beta);
    let chol = Cholesky::factor(&info, p);
    if !chol.is_full_rank() && !separated {
        return Err(SplineFitError::Singular {
            columns: chol.skipped().iter().map(|&j| design.column_names[j].clone()).collect(),
        });
    }
    let inv = chol.inverse();
    let coefficients: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let mut covariance = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            covariance[i * p + j] = inv[i * p + j] / (scale[i] * scale[j]);
        }
    }
    Ok(LogisticFit { coefficients, covariance, deviance: dev, iterations, converged, separated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub column_names: Vec<String>,
    pub terms: Vec<TermMap>,
    pub coefficients: Vec<f64>,
    pub covariance: Vec<f64>,
    pub deviance: f64,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
}

pub fn fit_spec(spec: &ModelSpec, frame: &Frame) -> Result<FittedModel, SplineFitError> {
    let design = design_matrix(spec, frame)?;
    let fit = fit_logistic(&design, &frame.outcome)?;
    Ok(FittedModel {
        spec: spec.clone(),
        column_names: design.column_names,
        terms: design.terms,
        coefficients: fit.coefficients,
        covariance: fit.covariance,
        deviance: fit.deviance,
        n: design.n,
        iterations: fit.iterations,
        converged: fit.converged,
        separated: fit.separated,
    })
}

/// Joint Wald test of one variable's coefficient block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldResult {
    pub variable: String,
    pub chi2: f64,
    pub dof: usize,
    pub p: f64,
    /// Share of the summed χ² over all variables.
    pub proportion: f64,
    pub nonlinear_chi2: f64,
    pub nonlinear_dof: usize,
    pub nonlinear_p: f64,
    pub nonlinear_proportion: f64,
}

pub fn chi2_sf(chi2: f64, dof: usize) -> f64 {
    if dof == 0 || chi2 <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(chi2)).unwrap_or(f64::NAN)
}

impl FittedModel {
    pub fn width(&self) -> usize {
        self.coefficients.len()
    }

    pub fn term(&self, variable: &str) -> Result<&TermMap, SplineFitError> {
        self.terms.iter().find(|t| t.variable == variable).ok_or_else(|| SplineFitError::MissingVariable(variable.into()))
    }

    pub fn linear_predictor(&self, values: &[f64]) -> f64 {
        self.spec.expand(values).iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }

    /// Probability for metric values given in model-variable order.
    pub fn predict_values(&self, values: &[f64]) -> f64 {
        logistic(self.linear_predictor(values))
    }

    /// Probability for named values; every model variable must be supplied.
    pub fn predict<F: Fn(&str) -> Option<f64>>(&self, lookup: F) -> Result<f64, SplineFitError> {
        let values: Vec<f64> = self
            .spec
            .variables
            .iter()
            .map(|v| lookup(&v.name).ok_or_else(|| SplineFitError::MissingVariable(v.name.clone())))
            .collect::<Result<_, _>>()?;
        Ok(self.predict_values(&values))
    }

    pub fn predict_frame(&self, frame: &Frame) -> Result<Vec<f64>, SplineFitError> {
        let idx = self.spec.frame_indices(frame)?;
        Ok((0..frame.nrows()).map(|r| self.predict_values(&frame.row(r, &idx))).collect())
    }

    fn quadratic(&self, columns: &[usize]) -> Result<f64, SplineFitError> {
        if columns.is_empty() {
            return Ok(0.0);
        }
        let b: Vec<f64> = columns.iter().map(|&c| self.coefficients[c]).collect();
        if b.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let v = submatrix(&self.covariance, self.width(), columns);
        inverse_quadratic_form(&v, &b).ok_or_else(|| SplineFitError::Singular {
            columns: columns.iter().map(|&c| self.column_names[c].clone()).collect(),
        })
    }

    /// Wald tests for every variable, in spec order.
    pub fn anova(&self) -> Result<Vec<WaldResult>, SplineFitError> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let chi2 = self.quadratic(&t.columns)?;
            let nonlinear_chi2 = self.quadratic(&t.nonlinear)?;
            out.push(WaldResult {
                variable: t.variable.clone(),
                chi2,
                dof: t.columns.len(),
                p: chi2_sf(chi2, t.columns.len()),
                proportion: 0.0,
                nonlinear_chi2,
                nonlinear_dof: t.nonlinear.len(),
                nonlinear_p: chi2_sf(nonlinear_chi2, t.nonlinear.len()),
                nonlinear_proportion: 0.0,
            });
        }
        let total: f64 = out.iter().map(|w| w.chi2).sum();
        if total > 0.0 {
            for w in &mut out {
                w.proportion = w.chi2 / total;
                w.nonlinear_proportion = w.nonlinear_chi2 / total;
            }
        }
        Ok(out)
    }

    pub fn wald_joint(&self, variable: &str) -> Result<WaldResult, SplineFitError> {
        self.term(variable)?;
        Ok(self.anova()?.into_iter().find(|w| w.variable == variable).expect("term exists"))
    }

    pub fn to_artifact(&self) -> ModelArtifact {
        ModelArtifact {
            format_version: ARTIFACT_VERSION,
            spec: self.spec.clone(),
            variables: self.spec.names(),
            knots: self
                .spec
                .variables
                .iter()
                .map(|v| v.knots.as_ref().map(|k| k.as_slice().to_vec()).unwrap_or_default())
                .collect(),
            column_names: self.column_names.clone(),
            coefficients: self.coefficients.clone(),
            covariance: self.covariance.clone(),
            deviance: self.deviance,
            n: self.n,
            seed: self.spec.seed,
            iterations: self.iterations,
            converged: self.converged,
            separated: self.separated,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_artifact()).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SplineFitError> {
        let a: ModelArtifact = serde_json::from_str(text).map_err(|e| SplineFitError::Artifact(e.to_string()))?;
        FittedModel::from_artifact(a)
    }

    pub fn from_artifact(a: ModelArtifact) -> Result<Self, SplineFitError> {
        if a.format_version != ARTIFACT_VERSION {
            return Err(SplineFitError::Artifact(format!("unsupported format_version {}", a.format_version)));
        }
        let (column_names, terms) = a.spec.layout();
        let p = column_names.len();
        if a.coefficients.len() != p || a.covariance.len() != p * p {
            return Err(SplineFitError::Artifact(format!(
                "expected {p} coefficients and {} covariance entries, got {} and {}",
                p * p,
                a.coefficients.len(),
                a.covariance.len()
            )));
        }
        Ok(FittedModel {
            spec: a.spec,
            column_names,
            terms,
            coefficients: a.coefficients,
            covariance: a.covariance,
            deviance: a.deviance,
            n: a.n,
            iterations: a.iterations,
            converged: a.converged,
            separated: a.separated,
        })
    }
}

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub variables: Vec<String>,
    /// Per variable; empty for linear terms.
    pub knots: Vec<Vec<f64>>,
    pub column_names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<f64>,
    pub deviance: f64,
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
}
