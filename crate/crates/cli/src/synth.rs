//! Deterministic synthetic dataset generator.
//!
//! Each class is a Gaussian cloud around its own mean; the means sit on
//! mutually orthogonal unit directions scaled by `separation` within-class
//! standard deviations, so `separation` directly controls how distinguishable
//! the classes are (0 makes them identical).

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal, Uniform};

use j3s_core::dataset::{
    derive_rng, write_csv_matrix, write_fmx1, ClassRecord, Manifest, SampleEntry, SampleKind,
};
use j3s_core::{J3sError, Result};

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub classes: usize,
    /// Feature dimension (rows of every sample matrix).
    pub dim: usize,
    /// Columns per sample matrix (frames of a set, or map width).
    pub set_size: usize,
    pub samples_per_class: usize,
    /// Distance between class means in units of within-class sigma.
    pub separation: f64,
    pub seed: u64,
    /// Intensity mode: 0-255-scale values, CSV files tagged `image_set`
    /// (requires square frames). Off: unit-scale features in FMX1 files
    /// tagged `feature_map`.
    pub intensity: bool,
    pub out_dir: PathBuf,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(J3sError::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.dim == 0 {
            return Err(J3sError::InvalidConfig("dim must be at least 1".into()));
        }
        if self.set_size < 2 {
            return Err(J3sError::InvalidConfig(format!(
                "set size must be at least 2 (covariance needs columns), got {}",
                self.set_size
            )));
        }
        if self.samples_per_class < 2 {
            return Err(J3sError::InvalidConfig(format!(
                "need at least 2 samples per class to split, got {}",
                self.samples_per_class
            )));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "separation must be finite and non-negative, got {}",
                self.separation
            )));
        }
        if self.intensity {
            let side = self.dim.isqrt();
            if side * side != self.dim {
                return Err(J3sError::InvalidConfig(format!(
                    "intensity mode stores square frames, so dim must be a perfect square; {} is not",
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

/// One unit direction per class, pairwise orthogonal while the dimension
/// lasts. Each class's raw draw comes from its own keyed stream, so adding
/// classes never changes earlier directions (orthogonalization against them
/// can, but ids below `dim` are unaffected by ids above).
fn class_directions(spec: &SynthSpec) -> Vec<DVector<f64>> {
    let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(spec.classes);
    for c in 0..spec.classes {
        let mut rng = derive_rng(spec.seed, "synthdir", &(c as u32).to_le_bytes());
        let raw = DVector::from_fn(spec.dim, |_, _| StandardNormal.sample(&mut rng));
        let mut v = raw.clone();
        for d in &dirs {
            let proj = d.dot(&v);
            v -= d * proj;
        }
        let v = if v.norm() > 1e-8 {
            v.normalize()
        } else {
            // span exhausted (more classes than dimensions): reuse the raw
            // direction, separability is best-effort from here
            raw.normalize()
        };
        dirs.push(v);
    }
    dirs
}

/// Generate all sample files plus `manifest.json`; returns the manifest path.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<PathBuf> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)?;

    let (base, sigma_w, ext, kind) = if spec.intensity {
        (128.0, 10.0, "csv", SampleKind::ImageSet)
    } else {
        (0.0, 1.0, "fmx1", SampleKind::FeatureMap)
    };

    let dirs = class_directions(spec);
    // mild per-class covariance anisotropy, shrinking to none as the
    // separation does so that separation 0 means fully identical classes
    let spread = (0.1 * spec.separation).min(0.5);
    let scale_dist = Uniform::new_inclusive(1.0 - spread, 1.0 + spread)
        .expect("spread is within (0, 1)");

    let mut classes = Vec::with_capacity(spec.classes);
    for (c, dir) in dirs.iter().enumerate() {
        let mu = DVector::from_element(spec.dim, base) + dir * (spec.separation * sigma_w);
        let mut cov_rng = derive_rng(spec.seed, "synthcov", &(c as u32).to_le_bytes());
        let scales =
            DVector::from_fn(spec.dim, |_, _| sigma_w * scale_dist.sample(&mut cov_rng));

        let mut samples = Vec::with_capacity(spec.samples_per_class);
        for i in 0..spec.samples_per_class {
            let id = format!("c{c}_s{i}");
            let mut rng = derive_rng(spec.seed, "synthsample", id.as_bytes());
            let data = DMatrix::from_fn(spec.dim, spec.set_size, |r, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let v = mu[r] + scales[r] * z;
                if spec.intensity {
                    v.clamp(0.0, 255.0)
                } else {
                    v
                }
            });
            let file_name = format!("{id}.{ext}");
            write_sample(&spec.out_dir.join(&file_name), &data, spec.intensity)?;
            samples.push(SampleEntry {
                id,
                path: PathBuf::from(file_name),
                kind,
            });
        }
        classes.push(ClassRecord {
            id: c as u32,
            name: format!("class_{c}"),
            samples,
        });
    }

    let manifest_path = spec.out_dir.join("manifest.json");
    Manifest { classes }.save(&manifest_path)?;
    log::info!(
        "wrote {} classes x {} samples to {}",
        spec.classes,
        spec.samples_per_class,
        spec.out_dir.display()
    );
    Ok(manifest_path)
}

fn write_sample(path: &Path, data: &DMatrix<f64>, as_csv: bool) -> Result<()> {
    if as_csv {
        write_csv_matrix(path, data)
    } else {
        write_fmx1(path, data)
    }
}
