//! Predictor screening, spline expansion and logistic model fitting.

mod design;
mod logistic;
mod pipeline;
mod screen;
mod spline;

pub use design::{design_matrix, Design, ModelSpec, TermMap, VariableSpec};
pub use logistic::{
    chi2_sf, fit_logistic, fit_spec, logistic, FittedModel, LogisticFit, ModelArtifact, WaldResult, ARTIFACT_VERSION,
    DEVIANCE_TOL, MAX_ITERATIONS,
};
pub use pipeline::{build_spec, is_binary, refit_knots, write_budget_table, ScreeningConfig, ScreeningReport};
pub use screen::{
    allocate_dof, dof_budget, redundancy_filter, spearman_multiple_rho2, spearman_rho, variable_clustering, Allocation,
    Cluster, ClusterReport, DofPolicy, RedundancyReport,
};
pub use spline::{knot_quantiles, rcs_basis, rcs_knots, InvalidKnots, KnotChoice, KnotSet, MAX_KNOTS};

use crate::frame::FrameError;

#[derive(Debug, thiserror::Error)]
pub enum SplineFitError {
    #[error("{0}")]
    Input(String),
    #[error("zero rank variance: correlation undefined")]
    ZeroVariance,
    #[error("degrees-of-freedom budget {budget} cannot support {variables} variables")]
    BudgetTooSmall { budget: usize, variables: usize },
    #[error("outcome has a single class")]
    SingleClass,
    #[error("singular information matrix; dependent columns: {}", columns.join(", "))]
    Singular { columns: Vec<String> },
    #[error("model variable {0:?} not supplied")]
    MissingVariable(String),
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}
