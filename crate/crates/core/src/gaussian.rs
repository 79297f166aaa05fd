//! Statistical half of the descriptor: fits a Gaussian to the columns of a
//! feature matrix, shrinks its covariance with a closed-form robust estimator,
//! embeds mean + covariance into one SPD matrix, and flattens its log into the
//! vector that the joint solver consumes.

use nalgebra::{DMatrix, DVector};

use crate::error::{J3sError, Result};
use crate::spd::{spd_logm, sym_eig, triu_vec, SymMatrix, DEFAULT_EIG_FLOOR};

/// One sample: a `d x m` matrix whose columns are local feature vectors
/// (image-set frames, dense descriptors, ...).
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub data: DMatrix<f64>,
    pub label: u32,
    pub sample_id: String,
}

impl FeatureMatrix {
    /// Requires at least one row, at least two columns (a covariance of a
    /// single column is meaningless), and finite entries.
    pub fn new(data: DMatrix<f64>, label: u32, sample_id: impl Into<String>) -> Result<Self> {
        let sample_id = sample_id.into();
        if data.nrows() == 0 {
            return Err(J3sError::InvalidInput(format!(
                "sample '{sample_id}' has no feature rows"
            )));
        }
        if data.ncols() < 2 {
            return Err(J3sError::TooFewColumns { got: data.ncols() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(J3sError::InvalidInput(format!(
                "sample '{sample_id}' contains a non-finite entry"
            )));
        }
        Ok(Self {
            data,
            label,
            sample_id,
        })
    }

    /// Feature dimension (rows).
    pub fn d(&self) -> usize {
        self.data.nrows()
    }

    /// Number of feature vectors (columns).
    pub fn m(&self) -> usize {
        self.data.ncols()
    }
}

/// Knobs for the statistical descriptor.
#[derive(Debug, Clone, Copy)]
pub struct GaussianConfig {
    /// Shrinkage weight of the robust covariance estimator, in `(0, 1)`.
    /// Larger values pull eigenvalues harder toward 1.
    pub cov_shrinkage: f64,
    /// Scale of the mean inside the SPD embedding.
    pub beta: f64,
    /// Apply the element-wise square-root map before fitting. Requires
    /// non-negative inputs (histogram-like features).
    pub use_hellinger: bool,
    /// Eigenvalue floor used when taking the matrix log of the embedding.
    pub eig_floor: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            cov_shrinkage: 0.5,
            beta: 1.0,
            use_hellinger: false,
            eig_floor: DEFAULT_EIG_FLOOR,
        }
    }
}

impl GaussianConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cov_shrinkage > 0.0 && self.cov_shrinkage < 1.0) {
            return Err(J3sError::InvalidConfig(format!(
                "cov_shrinkage must lie in (0, 1), got {}",
                self.cov_shrinkage
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if !(self.eig_floor.is_finite() && self.eig_floor > 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "eig_floor must be positive, got {}",
                self.eig_floor
            )));
        }
        Ok(())
    }
}

/// Everything the statistical branch produces for one sample.
#[derive(Debug, Clone)]
pub struct GaussianDescriptor {
    pub mean: DVector<f64>,
    pub robust_cov: SymMatrix,
    /// `(d+1) x (d+1)` SPD embedding of mean and covariance.
    pub embedding: SymMatrix,
    /// Upper triangle of `log(embedding)`, length `(d+1)(d+2)/2`.
    pub stat_vector: DVector<f64>,
}

/// Element-wise square root of a sample's features.
///
/// Histograms compared under this map behave like the Hellinger distance;
/// a negative entry is reported with its exact position.
pub fn hellinger_map(x: &FeatureMatrix) -> Result<DMatrix<f64>> {
    for j in 0..x.m() {
        for i in 0..x.d() {
            let v = x.data[(i, j)];
            if v < 0.0 {
                return Err(J3sError::NegativeFeature {
                    sample_id: x.sample_id.clone(),
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(x.data.map(f64::sqrt))
}

/// Column mean and biased (`1/m`) covariance of a `d x m` matrix.
pub fn gaussian_fit(phi: &DMatrix<f64>) -> Result<(DVector<f64>, SymMatrix)> {
    let m = phi.ncols();
    if m < 2 {
        return Err(J3sError::TooFewColumns { got: m });
    }
    let mean = phi.column_mean();
    let mut centered = phi.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = SymMatrix::new(&centered * centered.transpose() / m as f64)?;
    Ok((mean, cov))
}

/// How far below zero a covariance eigenvalue may drift (relative to the
/// largest one) before the matrix is rejected as not PSD.
const PSD_SLACK: f64 = 1e-10;

/// Closed-form robust shrinkage of a PSD covariance.
///
/// Each eigenvalue `delta` of `c` is replaced by the unique positive root of
/// `alpha * l^2 + (1 - alpha) * l - delta = 0`, computed in the
/// cancellation-free form `2 delta / ((1 - alpha) + sqrt((1 - alpha)^2 +
/// 4 alpha delta))`; eigenvectors are kept. Zero maps to zero, and the map is
/// increasing, so the result is PSD with the same rank.
pub fn robust_covariance(c: &SymMatrix, alpha: f64) -> Result<SymMatrix> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(J3sError::InvalidConfig(format!(
            "cov_shrinkage must lie in (0, 1), got {alpha}"
        )));
    }
    let eig = sym_eig(c);
    let tol = PSD_SLACK * eig.values[0].max(1.0);
    let min = eig.values[eig.values.len() - 1];
    if min < -tol {
        return Err(J3sError::InvalidInput(format!(
            "covariance has eigenvalue {min}, not positive semi-definite"
        )));
    }
    eig.recompose_with(|delta| {
        let delta = delta.max(0.0);
        let b = 1.0 - alpha;
        2.0 * delta / (b + (b * b + 4.0 * alpha * delta).sqrt())
    })
}

/// Packs mean and covariance into one SPD matrix:
/// `[[sigma + beta^2 mu mu^T, beta mu], [beta mu^T, 1]]`.
///
/// Its Schur complement with respect to the trailing 1 is exactly `sigma`, so
/// the block matrix is PSD whenever `sigma` is.
pub fn embed_spd(mean: &DVector<f64>, sigma: &SymMatrix, beta: f64) -> Result<SymMatrix> {
    let d = mean.len();
    if sigma.n() != d {
        return Err(J3sError::DimensionMismatch(format!(
            "mean has length {d} but covariance is {0}x{0}",
            sigma.n()
        )));
    }
    let mut p = DMatrix::zeros(d + 1, d + 1);
    let top = sigma.matrix() + mean * mean.transpose() * (beta * beta);
    p.view_mut((0, 0), (d, d)).copy_from(&top);
    for i in 0..d {
        p[(i, d)] = beta * mean[i];
        p[(d, i)] = beta * mean[i];
    }
    p[(d, d)] = 1.0;
    SymMatrix::new(p)
}

/// Full statistical branch for one sample: optional square-root map, Gaussian
/// fit, robust covariance, SPD embedding, matrix log, upper-triangle flatten.
pub fn build_descriptor(x: &FeatureMatrix, config: &GaussianConfig) -> Result<GaussianDescriptor> {
    config.validate()?;
    let phi = if config.use_hellinger {
        hellinger_map(x)?
    } else {
        x.data.clone()
    };
    let (mean, cov) = gaussian_fit(&phi)?;
    let robust_cov = robust_covariance(&cov, config.cov_shrinkage)?;
    let embedding = embed_spd(&mean, &robust_cov, config.beta)?;
    let log_embedding = spd_logm(&embedding, config.eig_floor)?;
    let stat_vector = triu_vec(&log_embedding);
    Ok(GaussianDescriptor {
        mean,
        robust_cov,
        embedding,
        stat_vector,
    })
}
