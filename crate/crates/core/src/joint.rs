//! Joint sparse coding over the paired statistical and spatial dictionaries.
//!
//! A query contributes two vectors (one per branch) and is coded against two
//! stacked galleries at once. The coupling term `lambda3 * sum_k
//! sqrt(alpha_k^2 + gamma_k^2)` rewards picking the *same* gallery columns in
//! both branches; it is handled by iteratively reweighted least squares, so
//! every iteration is a pair of closed-form ridge solves.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{J3sError, Result};
use crate::pca::{pca_apply, pca_apply_vec, pca_fit, PcaTransform};

/// Solver weights and stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct J3sParams {
    /// Weight of the statistical branch, in `(0, 1)`; the spatial branch gets
    /// `1 - theta`.
    pub theta: f64,
    /// Ridge weight on the statistical codes.
    pub lambda1: f64,
    /// Ridge weight on the spatial codes.
    pub lambda2: f64,
    /// Weight of the cross-branch coupling; 0 decouples the branches into two
    /// independent ridge problems.
    pub lambda3: f64,
    pub max_iters: usize,
    /// Stop once the loss moves by less than this between iterations.
    pub tol: f64,
    /// Smoothing added to the reweighting denominators so exact zeros cannot
    /// divide by zero.
    pub eps: f64,
}

impl Default for J3sParams {
    fn default() -> Self {
        Self {
            theta: 0.6,
            lambda1: 1e-3,
            lambda2: 1e-3,
            lambda3: 1e-3,
            max_iters: 50,
            tol: 1e-6,
            eps: 1e-16,
        }
    }
}

impl J3sParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(J3sError::InvalidConfig(format!(
                "theta must lie strictly inside (0, 1), got {}",
                self.theta
            )));
        }
        for (name, l) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
        ] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(J3sError::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {l}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(J3sError::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.eps > 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Paired gallery dictionaries with columns grouped by class.
#[derive(Debug, Clone)]
pub struct JointDictionary {
    /// Statistical gallery, one column per sample (PCA-projected if enabled).
    pub u: DMatrix<f64>,
    /// Spatial gallery, same column order as `u`.
    pub v: DMatrix<f64>,
    /// Column range of each class; keys ascend, ranges tile `0..n`.
    pub class_ranges: BTreeMap<u32, Range<usize>>,
    pub pca_stat: Option<PcaTransform>,
    pub pca_spat: Option<PcaTransform>,
}

impl JointDictionary {
    /// Build the paired dictionaries from per-sample vectors.
    ///
    /// Columns are regrouped by ascending class label (a stable reorder, so
    /// within-class order is preserved). With `use_pca`, each dictionary is
    /// independently reduced to `min(n - 1, d)` principal components and the
    /// fitted transforms are kept for projecting queries later.
    pub fn from_columns(
        stat_cols: &[DVector<f64>],
        spat_cols: &[DVector<f64>],
        labels: &[u32],
        use_pca: bool,
    ) -> Result<Self> {
        let n = stat_cols.len();
        if n == 0 {
            return Err(J3sError::InvalidInput("no gallery columns".into()));
        }
        if spat_cols.len() != n || labels.len() != n {
            return Err(J3sError::DimensionMismatch(format!(
                "got {} statistical, {} spatial columns and {} labels",
                n,
                spat_cols.len(),
                labels.len()
            )));
        }
        let d1 = stat_cols[0].len();
        let d2 = spat_cols[0].len();
        if stat_cols.iter().any(|c| c.len() != d1) || spat_cols.iter().any(|c| c.len() != d2) {
            return Err(J3sError::DimensionMismatch(
                "gallery columns have inconsistent lengths".into(),
            ));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| labels[i]);

        let mut u = DMatrix::zeros(d1, n);
        let mut v = DMatrix::zeros(d2, n);
        let mut class_ranges: BTreeMap<u32, Range<usize>> = BTreeMap::new();
        for (j, &src) in order.iter().enumerate() {
            u.set_column(j, &stat_cols[src]);
            v.set_column(j, &spat_cols[src]);
            let r = class_ranges.entry(labels[src]).or_insert(j..j);
            r.end = j + 1;
        }

        let (mut pca_stat, mut pca_spat) = (None, None);
        if use_pca {
            if n < 2 {
                return Err(J3sError::InvalidConfig(
                    "PCA needs at least 2 gallery columns".into(),
                ));
            }
            let t1 = pca_fit(&u, (n - 1).min(d1))?;
            let t2 = pca_fit(&v, (n - 1).min(d2))?;
            u = pca_apply(&t1, &u)?;
            v = pca_apply(&t2, &v)?;
            pca_stat = Some(t1);
            pca_spat = Some(t2);
        }

        Ok(Self {
            u,
            v,
            class_ranges,
            pca_stat,
            pca_spat,
        })
    }

    /// Total number of gallery columns.
    pub fn n(&self) -> usize {
        self.u.ncols()
    }

    /// Map a raw query pair into the dictionary's working space.
    pub fn project_query(
        &self,
        stat: &DVector<f64>,
        spat: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        let qs = match &self.pca_stat {
            Some(t) => pca_apply_vec(t, stat)?,
            None => {
                check_len("statistical query", stat.len(), self.u.nrows())?;
                stat.clone()
            }
        };
        let qp = match &self.pca_spat {
            Some(t) => pca_apply_vec(t, spat)?,
            None => {
                check_len("spatial query", spat.len(), self.v.nrows())?;
                spat.clone()
            }
        };
        Ok((qs, qp))
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(J3sError::DimensionMismatch(format!(
            "{what} has length {got}, dictionary expects {want}"
        )));
    }
    Ok(())
}

/// Stack per-sample `(statistical, spatial, label)` triples into a
/// [`JointDictionary`].
pub fn assemble_dictionaries(
    items: &[(DVector<f64>, DVector<f64>, u32)],
    use_pca: bool,
) -> Result<JointDictionary> {
    let stat: Vec<_> = items.iter().map(|(s, _, _)| s.clone()).collect();
    let spat: Vec<_> = items.iter().map(|(_, p, _)| p.clone()).collect();
    let labels: Vec<_> = items.iter().map(|(_, _, l)| *l).collect();
    JointDictionary::from_columns(&stat, &spat, &labels, use_pca)
}

/// Result of one joint coding run.
#[derive(Debug, Clone)]
pub struct JointCode {
    pub alpha: DVector<f64>,
    pub gamma: DVector<f64>,
    /// Final reweighting diagonal, `1 / (2 ||(alpha_k, gamma_k)|| + eps)`.
    pub g_diag: DVector<f64>,
    /// Loss after every completed iteration.
    pub loss_trace: Vec<f64>,
    pub iterations_used: usize,
    /// Whether the stopping tolerance was met before `max_iters`.
    pub converged: bool,
}

/// Full objective:
/// `theta ||qs - U a||^2 + (1-theta) ||qp - V g||^2 + lambda1 ||a||^2 +
/// lambda2 ||g||^2 + lambda3 sum_k sqrt(a_k^2 + g_k^2)`.
pub fn j3s_loss(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    qs: &DVector<f64>,
    qp: &DVector<f64>,
    alpha: &DVector<f64>,
    gamma: &DVector<f64>,
    params: &J3sParams,
) -> f64 {
    let rs = (qs - u * alpha).norm_squared();
    let rp = (qp - v * gamma).norm_squared();
    let group: f64 = alpha
        .iter()
        .zip(gamma.iter())
        .map(|(a, g)| (a * a + g * g).sqrt())
        .sum();
    params.theta * rs
        + (1.0 - params.theta) * rp
        + params.lambda1 * alpha.norm_squared()
        + params.lambda2 * gamma.norm_squared()
        + params.lambda3 * group
}

/// Reweighting diagonal for the coupling term.
pub fn update_g(alpha: &DVector<f64>, gamma: &DVector<f64>, eps: f64) -> DVector<f64> {
    DVector::from_fn(alpha.len(), |k, _| {
        1.0 / (2.0 * (alpha[k] * alpha[k] + gamma[k] * gamma[k]).sqrt() + eps)
    })
}

/// Statistical-branch ridge step: solves
/// `(U^T U + (lambda1/theta) I + (lambda3/theta) G) a = U^T qs`
/// by Cholesky factorization.
pub fn update_alpha(
    gram_u: &DMatrix<f64>,
    ut_qs: &DVector<f64>,
    g: &DVector<f64>,
    params: &J3sParams,
) -> Result<DVector<f64>> {
    ridge_step(gram_u, ut_qs, g, params.lambda1, params.lambda3, params.theta)
}

/// Spatial-branch ridge step: solves
/// `(V^T V + (lambda2/(1-theta)) I + (lambda3/(1-theta)) G) g = V^T qp`.
pub fn update_gamma(
    gram_v: &DMatrix<f64>,
    vt_qp: &DVector<f64>,
    g: &DVector<f64>,
    params: &J3sParams,
) -> Result<DVector<f64>> {
    ridge_step(
        gram_v,
        vt_qp,
        g,
        params.lambda2,
        params.lambda3,
        1.0 - params.theta,
    )
}

fn ridge_step(
    gram: &DMatrix<f64>,
    rhs: &DVector<f64>,
    g: &DVector<f64>,
    ridge: f64,
    coupling: f64,
    branch_weight: f64,
) -> Result<DVector<f64>> {
    let n = gram.nrows();
    if gram.ncols() != n || rhs.len() != n || g.len() != n {
        return Err(J3sError::DimensionMismatch(format!(
            "ridge step got gram {}x{}, rhs {}, weights {}",
            gram.nrows(),
            gram.ncols(),
            rhs.len(),
            g.len()
        )));
    }
    let mut a = gram.clone();
    for k in 0..n {
        a[(k, k)] += ridge / branch_weight + coupling / branch_weight * g[k];
    }
    let chol = Cholesky::new(a).ok_or(J3sError::SingularSystem)?;
    Ok(chol.solve(rhs))
}

/// Joint coding against explicit dictionary matrices (already in the working
/// space). Alternates the two ridge steps with reweighting, tracking the true
/// loss; each iteration exactly minimizes the current surrogate, so the trace
/// never increases.
pub fn solve_projected(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    qs: &DVector<f64>,
    qp: &DVector<f64>,
    params: &J3sParams,
) -> Result<JointCode> {
    params.validate()?;
    let n = u.ncols();
    if n == 0 {
        return Err(J3sError::InvalidInput("empty dictionary".into()));
    }
    if v.ncols() != n {
        return Err(J3sError::DimensionMismatch(format!(
            "dictionaries disagree on column count: {} vs {}",
            n,
            v.ncols()
        )));
    }
    check_len("statistical query", qs.len(), u.nrows())?;
    check_len("spatial query", qp.len(), v.nrows())?;

    let gram_u = u.transpose() * u;
    let gram_v = v.transpose() * v;
    let ut_qs = u.transpose() * qs;
    let vt_qp = v.transpose() * qp;

    let mut g = DVector::from_element(n, 1.0);
    let mut alpha = DVector::zeros(n);
    let mut gamma = DVector::zeros(n);
    let mut loss_trace = Vec::new();
    let mut converged = false;
    let mut iterations_used = 0;

    for t in 1..=params.max_iters {
        alpha = update_alpha(&gram_u, &ut_qs, &g, params)?;
        gamma = update_gamma(&gram_v, &vt_qp, &g, params)?;
        g = update_g(&alpha, &gamma, params.eps);
        let loss = j3s_loss(u, v, qs, qp, &alpha, &gamma, params);
        if !loss.is_finite() {
            return Err(J3sError::NumericalDivergence(format!(
                "loss became {loss} at iteration {t}"
            )));
        }
        iterations_used = t;
        if let Some(&prev) = loss_trace.last() {
            loss_trace.push(loss);
            if (prev - loss).abs() < params.tol {
                converged = true;
                break;
            }
        } else {
            loss_trace.push(loss);
        }
    }

    Ok(JointCode {
        alpha,
        gamma,
        g_diag: g,
        loss_trace,
        iterations_used,
        converged,
    })
}

/// Joint coding of a raw query against the whole dictionary.
pub fn solve(
    dict: &JointDictionary,
    stat: &DVector<f64>,
    spat: &DVector<f64>,
    params: &J3sParams,
) -> Result<JointCode> {
    let (qs, qp) = dict.project_query(stat, spat)?;
    solve_projected(&dict.u, &dict.v, &qs, &qp, params)
}

/// Joint coding restricted to one class's columns.
pub fn solve_restricted(
    dict: &JointDictionary,
    class_id: u32,
    stat: &DVector<f64>,
    spat: &DVector<f64>,
    params: &J3sParams,
) -> Result<JointCode> {
    let range = dict
        .class_ranges
        .get(&class_id)
        .ok_or_else(|| J3sError::InvalidInput(format!("unknown class id {class_id}")))?
        .clone();
    let (qs, qp) = dict.project_query(stat, spat)?;
    let u = dict.u.columns(range.start, range.len()).into_owned();
    let v = dict.v.columns(range.start, range.len()).into_owned();
    solve_projected(&u, &v, &qs, &qp, params)
}
