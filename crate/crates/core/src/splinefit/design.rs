//! Model specification and its expansion into a design matrix.

use serde::{Deserialize, Serialize};

use super::spline::{rcs_nonlinear_into, KnotSet};
use super::SplineFitError;
use crate::frame::Frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    /// Degrees of freedom granted by the allocation policy (before knot fallback).
    pub allocated_dof: usize,
    pub binary: bool,
    /// `None` for a single linear term.
    pub knots: Option<KnotSet>,
}

impl VariableSpec {
    pub fn linear(name: &str) -> Self {
        VariableSpec { name: name.to_string(), allocated_dof: 1, binary: false, knots: None }
    }

    pub fn splined(name: &str, knots: KnotSet) -> Self {
        VariableSpec { name: name.to_string(), allocated_dof: knots.terms(), binary: false, knots: Some(knots) }
    }

    /// Regression terms this variable contributes.
    pub fn dof(&self) -> usize {
        self.knots.as_ref().map_or(1, KnotSet::terms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variables: Vec<VariableSpec>,
    pub outcome: String,
    pub seed: u64,
}

/// Where a variable's terms sit in the design matrix (column 0 is the intercept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermMap {
    pub variable: String,
    pub columns: Vec<usize>,
    pub nonlinear: Vec<usize>,
}

impl ModelSpec {
    pub fn new(variables: Vec<VariableSpec>, seed: u64) -> Self {
        ModelSpec { variables, outcome: "outcome".to_string(), seed }
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn total_dof(&self) -> usize {
        self.variables.iter().map(VariableSpec::dof).sum()
    }

    /// Column count including the intercept.
    pub fn width(&self) -> usize {
        1 + self.total_dof()
    }

    pub fn layout(&self) -> (Vec<String>, Vec<TermMap>) {
        let mut names = vec!["intercept".to_string()];
        let mut terms = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            let start = names.len();
            names.push(v.name.clone());
            for j in 1..v.dof() {
                names.push(format!("{}{}", v.name, "'".repeat(j)));
            }
            let columns: Vec<usize> = (start..names.len()).collect();
            terms.push(TermMap { variable: v.name.clone(), nonlinear: columns[1..].to_vec(), columns });
        }
        (names, terms)
    }

    /// Appends the expanded row (intercept first) for `values` given in variable order.
    pub fn expand_into(&self, values: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(values.len(), self.variables.len());
        out.push(1.0);
        for (v, &x) in self.variables.iter().zip(values) {
            out.push(x);
            if let Some(k) = &v.knots {
                rcs_nonlinear_into(x, k.as_slice(), out);
            }
        }
    }

    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        self.expand_into(values, &mut out);
        out
    }

    /// Column indices into `frame` for each model variable.
    pub fn frame_indices(&self, frame: &Frame) -> Result<Vec<usize>, SplineFitError> {
        self.variables
            .iter()
            .map(|v| frame.index_of(&v.name).ok_or_else(|| SplineFitError::MissingVariable(v.name.clone())))
            .collect()
    }
}

/// Row-major `n × p` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub column_names: Vec<String>,
    pub terms: Vec<TermMap>,
    pub x: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl Design {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.p..(r + 1) * self.p]
    }
}

pub fn design_matrix(spec: &ModelSpec, frame: &Frame) -> Result<Design, SplineFitError> {
    let idx = spec.frame_indices(frame)?;
    let (column_names, terms) = spec.layout();
    let p = column_names.len();
    let n = frame.nrows();
    let mut x = Vec::with_capacity(n * p);
    let mut values = vec![0.0; idx.len()];
    for r in 0..n {
        for (slot, &c) in values.iter_mut().zip(&idx) {
            *slot = frame.columns[c][r];
        }
        spec.expand_into(&values, &mut x);
    }
    Ok(Design { column_names, terms, x, n, p })
}
