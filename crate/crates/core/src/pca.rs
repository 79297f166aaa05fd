//! Per-dictionary PCA: when gallery vectors are much longer than the gallery
//! is wide, projecting both dictionary columns and queries onto the top
//! principal directions shrinks every linear solve without touching the
//! geometry the solver sees.

use nalgebra::{DMatrix, DVector};

use crate::error::{J3sError, Result};
use crate::spd::{complete_basis, mgs_push, sym_eig, SymMatrix};

/// A fitted affine projection `x -> components * (x - mean)`.
#[derive(Debug, Clone)]
pub struct PcaTransform {
    pub mean: DVector<f64>,
    /// `k x d`, orthonormal rows sorted by decreasing variance. Sign is fixed
    /// so each row's largest-magnitude coordinate is positive, which makes
    /// repeated fits bit-identical.
    pub components: DMatrix<f64>,
    pub k: usize,
    /// Sample variance (`n - 1` normalization) captured by each row.
    pub explained_variance: Vec<f64>,
}

/// Fit a `k`-component PCA on the columns of a `d x n` matrix.
///
/// `k` may not exceed `min(n - 1, d)`: centering removes one degree of
/// freedom, so no more directions carry variance. The directions come from
/// the symmetric eigendecomposition of whichever of `X X^T` / `X^T X` is
/// smaller; directions the data does not determine (zero-variance subspace)
/// are filled with canonical vectors, so degenerate input still yields an
/// orthonormal, deterministic transform.
pub fn pca_fit(data: &DMatrix<f64>, k: usize) -> Result<PcaTransform> {
    let (d, n) = data.shape();
    if n < 2 {
        return Err(J3sError::InvalidConfig(format!(
            "PCA needs at least 2 columns, got {n}"
        )));
    }
    let kmax = (n - 1).min(d);
    if k == 0 || k > kmax {
        return Err(J3sError::InvalidConfig(format!(
            "PCA component count must lie in 1..={kmax} for {d}x{n} data, got {k}"
        )));
    }

    let mean = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }

    let mut components = DMatrix::zeros(k, d);
    let mut explained_variance = Vec::with_capacity(k);
    if d <= n {
        // scatter matrix route: eigenvectors of X X^T are the directions
        let eig = sym_eig(&SymMatrix::new(&centered * centered.transpose())?);
        for r in 0..k {
            for i in 0..d {
                components[(r, i)] = eig.vectors[(i, r)];
            }
            explained_variance.push(eig.values[r].max(0.0) / (n as f64 - 1.0));
        }
    } else {
        // Gram matrix route: map right singular vectors through the data
        let eig = sym_eig(&SymMatrix::new(centered.transpose() * &centered)?);
        let sigma_max = eig.values[0].max(0.0).sqrt();
        let cutoff = sigma_max * 1e-12;
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(k);
        for i in 0..k {
            let sigma = eig.values[i].max(0.0).sqrt();
            if sigma <= cutoff {
                break;
            }
            let u = (&centered * eig.vectors.column(i)) / sigma;
            if !mgs_push(&mut cols, u, 1e-8) {
                break;
            }
            explained_variance.push(eig.values[i].max(0.0) / (n as f64 - 1.0));
        }
        complete_basis(&mut cols, d, k);
        explained_variance.resize(k, 0.0);
        for (r, col) in cols.iter().enumerate() {
            for i in 0..d {
                components[(r, i)] = col[i];
            }
        }
    }

    // fix each row's sign so refits are bit-identical
    for r in 0..k {
        let mut pivot = 0;
        let mut best = 0.0;
        for i in 0..d {
            if components[(r, i)].abs() > best {
                best = components[(r, i)].abs();
                pivot = i;
            }
        }
        if components[(r, pivot)] < 0.0 {
            for i in 0..d {
                components[(r, i)] = -components[(r, i)];
            }
        }
    }

    Ok(PcaTransform {
        mean,
        components,
        k,
        explained_variance,
    })
}

/// Project every column of a `d x m` matrix, yielding `k x m`.
pub fn pca_apply(t: &PcaTransform, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if data.nrows() != t.mean.len() {
        return Err(J3sError::DimensionMismatch(format!(
            "PCA was fit on dimension {} but data has {} rows",
            t.mean.len(),
            data.nrows()
        )));
    }
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &t.mean;
    }
    Ok(&t.components * centered)
}

/// Project a single vector.
pub fn pca_apply_vec(t: &PcaTransform, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != t.mean.len() {
        return Err(J3sError::DimensionMismatch(format!(
            "PCA was fit on dimension {} but vector has length {}",
            t.mean.len(),
            v.len()
        )));
    }
    Ok(&t.components * (v - &t.mean))
}
