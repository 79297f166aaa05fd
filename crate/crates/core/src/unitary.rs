//! Spatial half of the descriptor: slide patches out of a 2-D array, learn a
//! unitary analysis transform whose coefficients are sparse under hard
//! thresholding, and flatten the resulting dictionary into the vector the
//! joint solver consumes.

use nalgebra::{DMatrix, DVector};

use crate::error::{J3sError, Result};
use crate::spd::{complete_basis, mgs_push, sym_eig, SymMatrix};

/// Stop the alternating transform updates once the objective moves less than
/// this between rounds.
const LEARN_TOL: f64 = 1e-8;

/// Starting point for the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictInit {
    /// Separable 2-D DCT laid out for column-major patch vectorization.
    Dct,
    Identity,
}

/// Patch extraction and transform-learning knobs.
#[derive(Debug, Clone, Copy)]
pub struct PatchConfig {
    pub patch_h: usize,
    pub patch_w: usize,
    pub stride: usize,
    /// Fraction of each patch's coefficients kept by the hard threshold,
    /// in `(0, 1]`; the kept count is `ceil(fraction * patch_len)`.
    pub sparsity_fraction: f64,
    /// Alternating update rounds; 0 keeps the initial transform.
    pub iterations: usize,
    pub init: DictInit,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_h: 8,
            patch_w: 8,
            stride: 4,
            sparsity_fraction: 0.1,
            iterations: 30,
            init: DictInit::Dct,
        }
    }
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_h == 0 || self.patch_w == 0 {
            return Err(J3sError::InvalidConfig(
                "patch dimensions must be at least 1".into(),
            ));
        }
        if self.stride == 0 {
            return Err(J3sError::InvalidConfig("stride must be at least 1".into()));
        }
        if !(self.sparsity_fraction > 0.0 && self.sparsity_fraction <= 1.0) {
            return Err(J3sError::InvalidConfig(format!(
                "sparsity_fraction must lie in (0, 1], got {}",
                self.sparsity_fraction
            )));
        }
        Ok(())
    }

    /// Patch length `patch_h * patch_w`.
    pub fn patch_len(&self) -> usize {
        self.patch_h * self.patch_w
    }

    /// Coefficients kept per patch.
    pub fn kept_per_patch(&self) -> usize {
        (self.sparsity_fraction * self.patch_len() as f64).ceil() as usize
    }
}

/// Learned spatial model for one sample.
#[derive(Debug, Clone)]
pub struct UnitaryDictionary {
    /// Synthesis dictionary, the transpose of the learned unitary transform.
    pub d: DMatrix<f64>,
    /// Column-major flatten of `d`, length `patch_len^2`.
    pub spatial_vector: DVector<f64>,
    /// `||W P - C||_F^2` at the last round.
    pub final_objective: f64,
    /// Objective after the initial coding and after every update round.
    pub objective_trace: Vec<f64>,
    /// Largest `||W^T W - I||_F` seen across all rounds, initial transform
    /// included.
    pub max_unitarity_residual: f64,
}

/// Orthonormal DCT-II basis as an `n x n` matrix (rows are basis functions).
pub fn dct_matrix(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    DMatrix::from_fn(n, n, |k, i| {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * nf)).cos()
    })
}

/// Slide a `patch_h x patch_w` window over `image` and stack each window,
/// vectorized column-major, as one column of the output.
///
/// Window origins advance by `stride`, rows before columns, so the column
/// order is row-major over origin positions. Only fully contained windows are
/// taken; an image smaller than the patch is an error.
pub fn extract_patches(
    image: &DMatrix<f64>,
    patch_h: usize,
    patch_w: usize,
    stride: usize,
) -> Result<DMatrix<f64>> {
    if patch_h == 0 || patch_w == 0 || stride == 0 {
        return Err(J3sError::InvalidConfig(
            "patch dimensions and stride must be at least 1".into(),
        ));
    }
    let (rows, cols) = image.shape();
    if patch_h > rows || patch_w > cols {
        return Err(J3sError::PatchTooLarge {
            patch_h,
            patch_w,
            rows,
            cols,
        });
    }
    let origins_r: Vec<usize> = (0..=rows - patch_h).step_by(stride).collect();
    let origins_c: Vec<usize> = (0..=cols - patch_w).step_by(stride).collect();
    let p = patch_h * patch_w;
    let mut out = DMatrix::zeros(p, origins_r.len() * origins_c.len());
    let mut idx = 0;
    for &r in &origins_r {
        for &c in &origins_c {
            let window = image.view((r, c), (patch_h, patch_w));
            for (k, v) in window.iter().enumerate() {
                out[(k, idx)] = *v;
            }
            idx += 1;
        }
    }
    Ok(out)
}

/// Keep the `s` entries of largest magnitude in each column, zeroing the rest.
/// Equal magnitudes are broken toward the lower row index.
pub fn hard_threshold(coeffs: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let p = coeffs.nrows();
    if s >= p {
        return coeffs.clone();
    }
    let mut out = DMatrix::zeros(p, coeffs.ncols());
    let mut order: Vec<usize> = Vec::with_capacity(p);
    for j in 0..coeffs.ncols() {
        order.clear();
        order.extend(0..p);
        // stable sort: ties keep ascending row order, so the lower index wins
        order.sort_by(|&a, &b| {
            coeffs[(b, j)]
                .abs()
                .partial_cmp(&coeffs[(a, j)].abs())
                .unwrap()
        });
        for &i in &order[..s] {
            out[(i, j)] = coeffs[(i, j)];
        }
    }
    out
}

/// Best unitary `W` for fixed codes: minimizes `||W P - C||_F` over unitary
/// matrices, equivalently maximizes `trace(W P C^T)`.
///
/// With the singular decomposition `P C^T = U S V^T`, the maximizer is
/// `W = V U^T`. The factors are computed through the symmetric
/// eigendecomposition of `(P C^T)^T (P C^T)`, with Gram-Schmidt completion of
/// whatever left-singular subspace a rank-deficient product leaves
/// undetermined — so the result is unitary by construction no matter how
/// degenerate the input is. An all-zero product leaves `W` unconstrained; the
/// identity is returned and a warning logged.
pub fn transform_update(patches: &DMatrix<f64>, codes: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = patches.nrows();
    if codes.shape() != patches.shape() {
        return Err(J3sError::DimensionMismatch(format!(
            "patches are {:?} but codes are {:?}",
            patches.shape(),
            codes.shape()
        )));
    }
    let prod = patches * codes.transpose();
    if prod.norm() < 1e-300 {
        log::warn!("transform update got an all-zero patch/code product; keeping identity");
        return Ok(DMatrix::identity(p, p));
    }
    // eigenvalues of prod^T prod are the squared singular values; its
    // eigenvectors are the right singular vectors
    let eig = sym_eig(&SymMatrix::new(prod.transpose() * &prod)?);
    let sigma_max = eig.values[0].max(0.0).sqrt();
    let cutoff = sigma_max * 1e-12;
    let mut u_cols: Vec<DVector<f64>> = Vec::with_capacity(p);
    for i in 0..p {
        let sigma = eig.values[i].max(0.0).sqrt();
        if sigma <= cutoff {
            break;
        }
        let u = (&prod * eig.vectors.column(i)) / sigma;
        mgs_push(&mut u_cols, u, 1e-8);
    }
    complete_basis(&mut u_cols, p, p);
    let u = DMatrix::from_columns(&u_cols);
    Ok(&eig.vectors * u.transpose())
}

fn init_transform(config: &PatchConfig) -> DMatrix<f64> {
    match config.init {
        // 2-D DCT of a column-major vectorized patch: C_w \otimes C_h
        DictInit::Dct => dct_matrix(config.patch_w).kronecker(&dct_matrix(config.patch_h)),
        DictInit::Identity => DMatrix::identity(config.patch_len(), config.patch_len()),
    }
}

/// Alternate hard-threshold coding and closed-form transform updates on a
/// patch matrix (`patch_len x n_patches`, as produced by [`extract_patches`]).
///
/// Each round first recodes, then refits the transform, so the objective
/// `||W P - C||_F^2` never increases; the loop stops early once it moves by
/// less than `1e-8`.
pub fn learn_unitary(patches: &DMatrix<f64>, config: &PatchConfig) -> Result<UnitaryDictionary> {
    config.validate()?;
    let p = config.patch_len();
    if patches.nrows() != p {
        return Err(J3sError::DimensionMismatch(format!(
            "patch matrix has {} rows but the configured patch is {}x{}",
            patches.nrows(),
            config.patch_h,
            config.patch_w
        )));
    }
    if patches.ncols() == 0 {
        return Err(J3sError::InvalidInput("no patches to learn from".into()));
    }
    let s = config.kept_per_patch().clamp(1, p);

    let unitarity = |w: &DMatrix<f64>| (w.transpose() * w - DMatrix::identity(p, p)).norm();

    let mut w = init_transform(config);
    let mut max_unitarity_residual = unitarity(&w);
    let mut codes = hard_threshold(&(&w * patches), s);
    let mut objective = (&w * patches - &codes).norm_squared();
    let mut objective_trace = vec![objective];

    for _ in 0..config.iterations {
        w = transform_update(patches, &codes)?;
        max_unitarity_residual = max_unitarity_residual.max(unitarity(&w));
        codes = hard_threshold(&(&w * patches), s);
        let next = (&w * patches - &codes).norm_squared();
        let delta = (objective - next).abs();
        objective = next;
        objective_trace.push(objective);
        if delta < LEARN_TOL {
            break;
        }
    }

    let d = w.transpose();
    let spatial_vector = DVector::from_column_slice(d.as_slice());
    Ok(UnitaryDictionary {
        d,
        spatial_vector,
        final_objective: objective,
        objective_trace,
        max_unitarity_residual,
    })
}

/// Lay the columns of a `d x m` sample out as a `sqrt(d) x (sqrt(d) * m)`
/// image by reshaping each column (column-major) into a square frame and
/// concatenating the frames horizontally.
///
/// Samples whose row count is not a perfect square are passed through
/// unchanged and patched as-is.
pub fn frame_mosaic(data: &DMatrix<f64>) -> DMatrix<f64> {
    let d = data.nrows();
    let side = d.isqrt();
    if side * side != d || d == 1 {
        return data.clone();
    }
    let mut out = DMatrix::zeros(side, side * data.ncols());
    for (f, col) in data.column_iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            out[(k % side, f * side + k / side)] = *v;
        }
    }
    out
}

/// Patch extraction plus transform learning in one call.
pub fn build_spatial(image: &DMatrix<f64>, config: &PatchConfig) -> Result<UnitaryDictionary> {
    let patches = extract_patches(image, config.patch_h, config.patch_w, config.stride)?;
    learn_unitary(&patches, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn orthonormality_residual(w: &DMatrix<f64>) -> f64 {
        let n = w.ncols();
        (w.transpose() * w - DMatrix::identity(n, n)).norm()
    }

    fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0f64));
        a.qr().q()
    }

    #[test]
    fn dct_is_orthonormal() {
        for n in [2, 3, 4, 8] {
            assert!(orthonormality_residual(&dct_matrix(n)) < 1e-12, "n={n}");
        }
    }

    #[test]
    fn dct_init_matches_kronecker_and_is_unitary() {
        let cfg = PatchConfig {
            patch_h: 2,
            patch_w: 3,
            ..PatchConfig::default()
        };
        let w0 = init_transform(&cfg);
        assert_eq!(w0.shape(), (6, 6));
        assert!(orthonormality_residual(&w0) < 1e-12);
    }

    #[test]
    fn patch_counts() {
        let img3 = DMatrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        assert_eq!(extract_patches(&img3, 2, 2, 1).unwrap().shape(), (4, 4));

        let img20 = DMatrix::from_fn(20, 20, |i, j| (i * 20 + j) as f64);
        assert_eq!(extract_patches(&img20, 8, 8, 4).unwrap().shape(), (64, 16));

        // stride larger than the patch leaves gaps but still works
        let img5 = DMatrix::zeros(5, 5);
        assert_eq!(extract_patches(&img5, 2, 2, 3).unwrap().ncols(), 4);
    }

    #[test]
    fn patch_contents_column_major_row_major_origins() {
        let img = DMatrix::from_row_slice(3, 3, &[
            1.0, 2.0, 3.0, //
            4.0, 5.0, 6.0, //
            7.0, 8.0, 9.0,
        ]);
        let p = extract_patches(&img, 2, 2, 1).unwrap();
        assert_eq!(p.column(0).as_slice(), &[1.0, 4.0, 2.0, 5.0]);
        assert_eq!(p.column(1).as_slice(), &[2.0, 5.0, 3.0, 6.0]);
        assert_eq!(p.column(2).as_slice(), &[4.0, 7.0, 5.0, 8.0]);
        assert_eq!(p.column(3).as_slice(), &[5.0, 8.0, 6.0, 9.0]);
    }

    #[test]
    fn patch_too_large_is_reported() {
        let img = DMatrix::zeros(4, 10);
        assert!(matches!(
            extract_patches(&img, 8, 8, 4),
            Err(J3sError::PatchTooLarge {
                patch_h: 8,
                patch_w: 8,
                rows: 4,
                cols: 10
            })
        ));
    }

    #[test]
    fn hard_threshold_keeps_largest_magnitudes() {
        let c = DMatrix::from_column_slice(4, 1, &[3.0, -5.0, 2.0, -2.0]);
        let t = hard_threshold(&c, 2);
        assert_eq!(t.column(0).as_slice(), &[3.0, -5.0, 0.0, 0.0]);
    }

    #[test]
    fn hard_threshold_ties_prefer_lower_index() {
        let c = DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.5]);
        let t = hard_threshold(&c, 1);
        assert_eq!(t.column(0).as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn hard_threshold_full_keep_is_identity() {
        let c = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(hard_threshold(&c, 2), c);
        assert_eq!(hard_threshold(&c, 5), c);
    }

    #[test]
    fn transform_update_recovers_planted_transform() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let p = 4;
        let q = random_unitary(p, &mut rng);
        // 2-sparse codes with supports covering every row
        let mut codes = DMatrix::zeros(p, 20);
        for j in 0..20 {
            codes[(j % p, j)] = rng.random_range(1.0..2.0f64);
            codes[((j + 1) % p, j)] = rng.random_range(1.0..2.0f64);
        }
        let patches = q.transpose() * &codes;
        let w = transform_update(&patches, &codes).unwrap();
        assert!((w - &q).norm() < 1e-10);
    }

    #[test]
    fn transform_update_zero_product_gives_identity() {
        let patches = DMatrix::zeros(3, 5);
        let codes = DMatrix::zeros(3, 5);
        let w = transform_update(&patches, &codes).unwrap();
        assert_eq!(w, DMatrix::identity(3, 3));
    }

    #[test]
    fn transform_update_is_unitary_even_for_rank_deficient_products() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        // rank-1 patches: constant image territory
        let u = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0f64));
        let patches = &u * DMatrix::from_fn(1, 10, |_, _| rng.random_range(0.5..1.5f64));
        let codes = hard_threshold(&patches, 2);
        let w = transform_update(&patches, &codes).unwrap();
        assert!(orthonormality_residual(&w) < 1e-10);
    }

    #[test]
    fn learn_monotone_and_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let img = DMatrix::from_fn(12, 12, |_, _| rng.random_range(0.0..255.0f64));
        let cfg = PatchConfig {
            patch_h: 4,
            patch_w: 4,
            stride: 2,
            sparsity_fraction: 0.25,
            iterations: 20,
            init: DictInit::Dct,
        };
        let dict = build_spatial(&img, &cfg).unwrap();
        assert!(dict.max_unitarity_residual < 1e-10);
        for pair in dict.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "trace must not increase: {pair:?}");
        }
        assert_eq!(dict.spatial_vector.len(), 256);
        assert_relative_eq!(
            dict.final_objective,
            *dict.objective_trace.last().unwrap()
        );
        // column-major flatten of d
        assert_eq!(dict.spatial_vector[1], dict.d[(1, 0)]);
        assert_eq!(dict.spatial_vector[16], dict.d[(0, 1)]);
    }

    #[test]
    fn learn_zero_iterations_keeps_init() {
        let img = DMatrix::from_fn(6, 6, |i, j| (i * 6 + j) as f64);
        let cfg = PatchConfig {
            patch_h: 2,
            patch_w: 2,
            stride: 2,
            sparsity_fraction: 0.5,
            iterations: 0,
            init: DictInit::Identity,
        };
        let dict = build_spatial(&img, &cfg).unwrap();
        assert_eq!(dict.objective_trace.len(), 1);
        assert_eq!(dict.d, DMatrix::identity(4, 4));
    }

    #[test]
    fn learn_handles_constant_image() {
        let img = DMatrix::from_element(8, 8, 7.0);
        let cfg = PatchConfig {
            patch_h: 4,
            patch_w: 4,
            stride: 4,
            sparsity_fraction: 0.2,
            iterations: 10,
            init: DictInit::Dct,
        };
        let dict = build_spatial(&img, &cfg).unwrap();
        assert!(dict.max_unitarity_residual < 1e-8);
        assert!(dict.spatial_vector.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn learn_rejects_mismatched_patch_rows() {
        let patches = DMatrix::zeros(5, 3);
        let cfg = PatchConfig {
            patch_h: 2,
            patch_w: 2,
            ..PatchConfig::default()
        };
        assert!(matches!(
            learn_unitary(&patches, &cfg),
            Err(J3sError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mosaic_square_frames() {
        let data = DMatrix::from_column_slice(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let img = frame_mosaic(&data);
        assert_eq!(img.shape(), (2, 4));
        assert_eq!(img.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(img.row(1).iter().copied().collect::<Vec<_>>(), vec![2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn mosaic_passthrough_for_non_square_dimension() {
        let data = DMatrix::from_column_slice(3, 2, &[1.0; 6]);
        assert_eq!(frame_mosaic(&data), data);
    }

    #[test]
    fn config_validation() {
        let bad = PatchConfig {
            sparsity_fraction: 0.0,
            ..PatchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = PatchConfig {
            stride: 0,
            ..PatchConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(PatchConfig::default().kept_per_patch(), 7);
    }

    proptest! {
        #[test]
        fn hard_threshold_keeps_exactly_s_of_distinct_values(seed in 0u64..100, s in 1usize..6) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let c = DMatrix::from_fn(6, 3, |_, _| rng.random_range(0.5..10.0f64));
            let t = hard_threshold(&c, s);
            for j in 0..3 {
                let kept = t.column(j).iter().filter(|v| **v != 0.0).count();
                prop_assert_eq!(kept, s.min(6));
                // every kept value is at least as large as every dropped one
                let min_kept = t.column(j).iter().filter(|v| **v != 0.0)
                    .fold(f64::INFINITY, |a, &b| a.min(b.abs()));
                for i in 0..6 {
                    if t[(i, j)] == 0.0 {
                        prop_assert!(c[(i, j)].abs() <= min_kept + 1e-15);
                    }
                }
            }
        }

        #[test]
        fn transform_update_always_unitary(seed in 0u64..100) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let patches = DMatrix::from_fn(4, 9, |_, _| rng.random_range(-1.0..1.0f64));
            let codes = hard_threshold(&patches, 2);
            let w = transform_update(&patches, &codes).unwrap();
            prop_assert!(orthonormality_residual(&w) < 1e-9);
        }
    }
}
