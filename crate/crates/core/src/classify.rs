//! Classification on top of the joint solver: code a query against each
//! class's gallery block and pick the class whose pair of dictionaries
//! reconstructs it best.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{J3sError, Result};
use crate::joint::{solve_projected, J3sParams, JointDictionary};

/// A query sample's two descriptor vectors in raw (pre-PCA) space.
#[derive(Debug, Clone)]
pub struct Query {
    pub sample_id: String,
    pub true_label: Option<u32>,
    pub stat: DVector<f64>,
    pub spat: DVector<f64>,
}

/// Outcome of classifying one query.
#[derive(Debug, Clone)]
pub struct PredictionReport {
    pub sample_id: String,
    pub predicted: u32,
    pub true_label: Option<u32>,
    /// Weighted reconstruction error per class, keys ascending.
    pub class_errors: BTreeMap<u32, f64>,
    /// Solver iterations spent on each class.
    pub per_class_iterations: BTreeMap<u32, usize>,
}

impl PredictionReport {
    pub fn is_correct(&self) -> Option<bool> {
        self.true_label.map(|t| t == self.predicted)
    }
}

/// Weighted two-branch reconstruction error
/// `theta ||qs - U a||^2 + (1 - theta) ||qp - V g||^2`.
///
/// Regularizer terms are deliberately left out: classes compete on how well
/// they explain the query, not on how cheap their codes were.
pub fn class_error(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    qs: &DVector<f64>,
    qp: &DVector<f64>,
    alpha: &DVector<f64>,
    gamma: &DVector<f64>,
    theta: f64,
) -> f64 {
    theta * (qs - u * alpha).norm_squared() + (1.0 - theta) * (qp - v * gamma).norm_squared()
}

fn pick_argmin(errors: &BTreeMap<u32, f64>) -> u32 {
    // BTreeMap iterates keys ascending and `<` is strict, so ties resolve to
    // the lowest class id
    let mut best_id = *errors.keys().next().expect("at least one class");
    let mut best = f64::INFINITY;
    for (&id, &e) in errors {
        if e < best {
            best = e;
            best_id = id;
        }
    }
    best_id
}

/// Classify by coding the query separately against every class block.
pub fn predict(
    dict: &JointDictionary,
    query: &Query,
    params: &J3sParams,
) -> Result<PredictionReport> {
    if dict.class_ranges.is_empty() {
        return Err(J3sError::InvalidInput("dictionary has no classes".into()));
    }
    let (qs, qp) = dict.project_query(&query.stat, &query.spat)?;
    let mut class_errors = BTreeMap::new();
    let mut per_class_iterations = BTreeMap::new();
    for (&class_id, range) in &dict.class_ranges {
        let u = dict.u.columns(range.start, range.len()).into_owned();
        let v = dict.v.columns(range.start, range.len()).into_owned();
        let code = solve_projected(&u, &v, &qs, &qp, params)?;
        let err = class_error(&u, &v, &qs, &qp, &code.alpha, &code.gamma, params.theta);
        class_errors.insert(class_id, err);
        per_class_iterations.insert(class_id, code.iterations_used);
    }
    Ok(PredictionReport {
        sample_id: query.sample_id.clone(),
        predicted: pick_argmin(&class_errors),
        true_label: query.true_label,
        class_errors,
        per_class_iterations,
    })
}

/// Classify with a single solve over the full dictionary, scoring each class
/// by its own sub-vector of the shared code.
pub fn predict_global(
    dict: &JointDictionary,
    query: &Query,
    params: &J3sParams,
) -> Result<PredictionReport> {
    if dict.class_ranges.is_empty() {
        return Err(J3sError::InvalidInput("dictionary has no classes".into()));
    }
    let (qs, qp) = dict.project_query(&query.stat, &query.spat)?;
    let code = solve_projected(&dict.u, &dict.v, &qs, &qp, params)?;
    let mut class_errors = BTreeMap::new();
    let mut per_class_iterations = BTreeMap::new();
    for (&class_id, range) in &dict.class_ranges {
        let u = dict.u.columns(range.start, range.len());
        let v = dict.v.columns(range.start, range.len());
        let alpha = code.alpha.rows(range.start, range.len());
        let gamma = code.gamma.rows(range.start, range.len());
        let err = params.theta * (&qs - u * alpha).norm_squared()
            + (1.0 - params.theta) * (&qp - v * gamma).norm_squared();
        class_errors.insert(class_id, err);
        per_class_iterations.insert(class_id, code.iterations_used);
    }
    Ok(PredictionReport {
        sample_id: query.sample_id.clone(),
        predicted: pick_argmin(&class_errors),
        true_label: query.true_label,
        class_errors,
        per_class_iterations,
    })
}
