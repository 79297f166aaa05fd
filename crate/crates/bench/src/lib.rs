//! Seeded fixture builders shared by the criterion benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use j3s_core::{FeatureMatrix, GaussianConfig};

/// A labeled random feature set, `d` rows by `m` columns.
pub fn random_feature_set(d: usize, m: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let data = DMatrix::from_fn(d, m, |_, _| rng.random_range(-1.0..1.0f64));
    FeatureMatrix::new(data, 0, format!("bench{seed}")).unwrap()
}

/// Random patch matrix for transform learning.
pub fn random_patches(p: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0f64))
}

/// Per-sample `(statistical, spatial, label)` triples for dictionary
/// assembly: random loosely clustered columns, `per_class` per class.
pub fn random_dictionary_items(
    classes: usize,
    per_class: usize,
    d1: usize,
    d2: usize,
    seed: u64,
) -> Vec<(DVector<f64>, DVector<f64>, u32)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let center_s = DVector::from_fn(d1, |_, _| rng.random_range(-1.0..1.0f64));
        let center_p = DVector::from_fn(d2, |_, _| rng.random_range(-1.0..1.0f64));
        for _ in 0..per_class {
            let s = &center_s + DVector::from_fn(d1, |_, _| rng.random_range(-0.3..0.3f64));
            let p = &center_p + DVector::from_fn(d2, |_, _| rng.random_range(-0.3..0.3f64));
            items.push((s, p, c as u32));
        }
    }
    items
}

/// Descriptor configuration used across benchmarks.
pub fn gaussian_config() -> GaussianConfig {
    GaussianConfig::default()
}
