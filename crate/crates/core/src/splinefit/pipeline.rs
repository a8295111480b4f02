//! Screening, budgeting and knot placement combined into a fit-ready [`ModelSpec`].

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::design::{ModelSpec, VariableSpec};
use super::screen::{
    allocate_dof, dof_budget, redundancy_filter, spearman_multiple_rho2, variable_clustering, Allocation, ClusterReport,
    DofPolicy, RedundancyReport,
};
use super::spline::{rcs_knots, KnotChoice};
use super::SplineFitError;
use crate::frame::Frame;
use crate::stats::{distinct_count, format_sig9};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub cluster_threshold: f64,
    pub r2_threshold: f64,
    /// Representative preference among correlated variables; defaults to candidate order.
    pub priority: Vec<String>,
    pub policy: DofPolicy,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig { cluster_threshold: 0.7, r2_threshold: 0.9, priority: Vec::new(), policy: DofPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub true_count: usize,
    pub false_count: usize,
    pub budget: usize,
    /// Candidates without variation in the data.
    pub constant: Vec<String>,
    pub clustering: ClusterReport,
    pub redundancy: RedundancyReport,
    pub allocation: Vec<Allocation>,
    /// Degrees of freedom actually used per surviving variable, after knot fallback.
    pub used_dof: Vec<(String, usize)>,
}

pub fn is_binary(column: &[f64]) -> bool {
    distinct_count(column) <= 2
}

/// Knots for each variable at its allocated degrees of freedom, estimated on `frame`.
fn place_knots(frame: &Frame, allocation: &[Allocation]) -> Result<Vec<VariableSpec>, SplineFitError> {
    allocation
        .iter()
        .map(|a| {
            let knots = if a.dof >= 2 && !a.binary {
                match rcs_knots(frame.column(&a.variable)?, a.dof) {
                    KnotChoice::Spline(k) => Some(k),
                    KnotChoice::Linear => None,
                }
            } else {
                None
            };
            Ok(VariableSpec { name: a.variable.clone(), allocated_dof: a.dof, binary: a.binary, knots })
        })
        .collect()
}

/// Screens `candidates` on `frame`, allocates degrees of freedom and places knots.
pub fn build_spec(
    frame: &Frame,
    candidates: &[String],
    config: &ScreeningConfig,
    seed: u64,
) -> Result<(ModelSpec, ScreeningReport), SplineFitError> {
    if candidates.is_empty() {
        return Err(SplineFitError::Input("no candidate variables".into()));
    }
    let (true_count, false_count) = frame.class_counts();
    if true_count == 0 || false_count == 0 {
        return Err(SplineFitError::SingleClass);
    }
    let priority = if config.priority.is_empty() { candidates.to_vec() } else { config.priority.clone() };

    let mut constant = Vec::new();
    let mut varying = Vec::new();
    for c in candidates {
        if distinct_count(frame.column(c)?) < 2 {
            constant.push(c.clone());
        } else {
            varying.push(c.clone());
        }
    }
    if varying.is_empty() {
        return Err(SplineFitError::Input(format!("every candidate is constant: {}", constant.join(", "))));
    }

    let clustering = variable_clustering(frame, &varying, config.cluster_threshold, &priority)?;
    let redundancy = redundancy_filter(frame, &clustering.survivors, config.r2_threshold, &priority)?;
    let budget = dof_budget(true_count, false_count);
    let y = frame.outcome_f64();
    let mut rho2 = Vec::new();
    let mut binary = Vec::new();
    for v in &redundancy.survivors {
        let col = frame.column(v)?;
        rho2.push((v.clone(), spearman_multiple_rho2(col, &y)?));
        if is_binary(col) {
            binary.push(v.clone());
        }
    }
    let allocation = allocate_dof(&rho2, &binary, budget, config.policy)?;
    let variables = place_knots(frame, &allocation)?;
    let used_dof = variables.iter().map(|v| (v.name.clone(), v.dof())).collect();
    let spec = ModelSpec::new(variables, seed);
    let report =
        ScreeningReport { true_count, false_count, budget, constant, clustering, redundancy, allocation, used_dof };
    Ok((spec, report))
}

/// Re-estimates knot locations on `frame`, keeping the variables and their allocation.
pub fn refit_knots(spec: &ModelSpec, frame: &Frame) -> Result<ModelSpec, SplineFitError> {
    let allocation: Vec<Allocation> = spec
        .variables
        .iter()
        .map(|v| Allocation { variable: v.name.clone(), rho2: 0.0, binary: v.binary, dof: v.allocated_dof })
        .collect();
    Ok(ModelSpec { variables: place_knots(frame, &allocation)?, outcome: spec.outcome.clone(), seed: spec.seed })
}

/// Budget table: class counts and budget, then one row per variable with ρ², allocation and
/// the degrees of freedom in use.
pub fn write_budget_table<W: Write>(out: W, report: &ScreeningReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["item", "rho2", "allocated_dof", "used_dof"])?;
    w.write_record(["true_count", "", "", &report.true_count.to_string()])?;
    w.write_record(["false_count", "", "", &report.false_count.to_string()])?;
    w.write_record(["budget", "", "", &report.budget.to_string()])?;
    for (a, (_, used)) in report.allocation.iter().zip(&report.used_dof) {
        w.write_record([a.variable.as_str(), &format_sig9(a.rho2), &a.dof.to_string(), &used.to_string()])?;
    }
    let total: usize = report.used_dof.iter().map(|(_, d)| d).sum();
    w.write_record(["total", "", "", &total.to_string()])?;
    w.flush()?;
    Ok(())
}
