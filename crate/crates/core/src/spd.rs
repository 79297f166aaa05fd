//! Numerical primitives for symmetric / SPD matrices: eigendecomposition,
//! safeguarded matrix logarithm, and upper-triangle vectorization.
//!
//! Everything in this module is a pure function on immutable values and can be
//! called concurrently from any number of threads.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{J3sError, Result};

/// Default eigenvalue floor used by [`spd_logm`] when flooring near-zero
/// eigenvalues of a positive semi-definite matrix.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// A square real matrix that is exactly symmetric and finite.
///
/// Construction symmetrizes the input as `(A + A^T) / 2`, writing the same
/// value into both triangles so `m[(i, j)] == m[(j, i)]` holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrize and validate a square matrix.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(J3sError::InvalidInput(format!(
                "expected a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(J3sError::InvalidInput("empty matrix".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(J3sError::InvalidInput(
                "matrix contains a non-finite entry".into(),
            ));
        }
        let n = a.nrows();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = a[(i, i)];
            for j in (i + 1)..n {
                let v = 0.5 * (a[(i, j)] + a[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    /// Side length.
    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.m[idx]
    }
}

/// Eigendecomposition of a symmetric matrix with eigenvalues sorted in
/// non-increasing order and the eigenvector columns reordered to match.
#[derive(Debug, Clone)]
pub struct EigPair {
    /// Eigenvalues, non-increasing.
    pub values: DVector<f64>,
    /// Orthonormal eigenvector columns; column `k` pairs with `values[k]`.
    pub vectors: DMatrix<f64>,
}

impl EigPair {
    /// Rebuild `V * diag(f(values)) * V^T` with a per-eigenvalue map applied.
    pub fn recompose_with(&self, f: impl Fn(f64) -> f64) -> Result<SymMatrix> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let fv = f(self.values[k]);
            scaled.column_mut(k).scale_mut(fv);
        }
        SymMatrix::new(&scaled * self.vectors.transpose())
    }
}

/// Cyclic Jacobi diagonalization: returns unsorted eigenvalues and the
/// accumulated rotation matrix.
///
/// nalgebra's QL-based `SymmetricEigen` can emit NaN on heavily rank-deficient
/// inputs (seen with `P C^T (P C^T)^T` products of rank ~11 at size 64).
/// Jacobi rotations are a few times slower but unconditionally stable, so
/// [`sym_eig`] switches to this whenever the fast path fails verification.
fn jacobi_eig(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::identity(n, n);
    // orthogonal similarity preserves the Frobenius norm, so the initial one
    // stays the right scale reference throughout
    let norm = m.norm();
    for _ in 0..50 {
        let mut off_sq = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off_sq += m[(i, j)] * m[(i, j)];
            }
        }
        if (2.0 * off_sq).sqrt() <= 1e-15 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle zeroing m[(p, q)]: t solves t^2 + 2*theta*t - 1 = 0
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                };
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    (DVector::from_fn(n, |i, _| m[(i, i)]), v)
}

/// Symmetric eigendecomposition, eigenvalues sorted non-increasing.
///
/// The fast nalgebra path is verified (finite output, reconstruction residual
/// at most `1e-11 * max(||A||_F, 1)`) and replaced by [`jacobi_eig`] when it
/// misbehaves, so every finite symmetric input gets a valid decomposition.
pub fn sym_eig(a: &SymMatrix) -> EigPair {
    let n = a.n();
    let eig = SymmetricEigen::new(a.matrix().clone());
    let mut raw_values = eig.eigenvalues;
    let mut raw_vectors = eig.eigenvectors;

    let trustworthy = raw_values.iter().all(|v| v.is_finite())
        && raw_vectors.iter().all(|v| v.is_finite())
        && {
            let mut scaled = raw_vectors.clone();
            for k in 0..n {
                scaled.column_mut(k).scale_mut(raw_values[k]);
            }
            let resid = (scaled * raw_vectors.transpose() - a.matrix()).norm();
            resid <= 1e-11 * a.matrix().norm().max(1.0)
        };
    if !trustworthy {
        (raw_values, raw_vectors) = jacobi_eig(a.matrix());
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw_values[j].total_cmp(&raw_values[i]));

    let values = DVector::from_fn(n, |k, _| raw_values[order[k]]);
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        vectors.set_column(k, &raw_vectors.column(src));
    }
    EigPair { values, vectors }
}

/// Safeguarded matrix logarithm of a symmetric positive (semi-)definite matrix.
///
/// Eigenvalues in `[-eig_floor, eig_floor)` are lifted to `eig_floor` before
/// taking the scalar log, which handles the rank-deficient covariances that the
/// robust estimator produces. An eigenvalue below `-eig_floor` means the input
/// is genuinely indefinite and is rejected.
pub fn spd_logm(p: &SymMatrix, eig_floor: f64) -> Result<SymMatrix> {
    if !(eig_floor > 0.0) {
        return Err(J3sError::InvalidConfig(format!(
            "eig_floor must be positive, got {eig_floor}"
        )));
    }
    let eig = sym_eig(p);
    let min = eig.values[eig.values.len() - 1];
    if min < -eig_floor {
        return Err(J3sError::NotPositiveDefinite {
            min_eigenvalue: min,
            eig_floor,
        });
    }
    eig.recompose_with(|l| l.max(eig_floor).ln())
}

/// Row-major upper-triangle vectorization (diagonal included).
///
/// The output has length `n(n+1)/2`; both dictionary atoms and queries use
/// this same fixed ordering, so any consistent order works and this one is it.
pub fn triu_vec(s: &SymMatrix) -> DVector<f64> {
    let n = s.n();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(s[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Append `candidate` to an orthonormal `basis`, first projecting out the
/// existing directions (two passes, so the result is orthonormal to working
/// precision even for marginal candidates). Returns whether anything of the
/// candidate survived the projection.
pub(crate) fn mgs_push(basis: &mut Vec<DVector<f64>>, candidate: DVector<f64>, tol: f64) -> bool {
    let mut v = candidate;
    for _ in 0..2 {
        for b in basis.iter() {
            let c = b.dot(&v);
            v.axpy(-c, b, 1.0);
        }
    }
    let n = v.norm();
    if n > tol {
        basis.push(v / n);
        true
    } else {
        false
    }
}

/// Grow an orthonormal `basis` of length-`dim` vectors to `target` vectors by
/// admitting canonical directions. Deterministic, and always succeeds for
/// `target <= dim`.
pub(crate) fn complete_basis(basis: &mut Vec<DVector<f64>>, dim: usize, target: usize) {
    let mut j = 0;
    while basis.len() < target && j < dim {
        let mut e = DVector::zeros(dim);
        e[j] = 1.0;
        mgs_push(basis, e, 1e-4);
        j += 1;
    }
    debug_assert_eq!(basis.len(), target);
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Matrix exponential through the eigendecomposition. Test-side inverse of
    /// `spd_logm`; intentionally not part of the library surface.
    pub fn sym_expm(s: &SymMatrix) -> SymMatrix {
        sym_eig(s).recompose_with(f64::exp).unwrap()
    }

    pub fn random_symmetric(n: usize, rng: &mut impl rand::Rng) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(a).unwrap()
    }

    /// Random SPD matrix `A A^T + jitter * I`.
    pub fn random_spd(n: usize, jitter: f64, rng: &mut impl rand::Rng) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::new(&a * a.transpose() + DMatrix::identity(n, n) * jitter).unwrap()
    }
}
