//! Dataset handling: the JSON manifest listing classes and samples, matrix
//! loading (binary and CSV), seeded gallery/probe splitting, few-shot
//! subsampling, and reproducible additive noise.

mod fmx1;

pub use fmx1::{read_fmx1, write_fmx1, FMX1_MAGIC};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{J3sError, Result};
use crate::gaussian::FeatureMatrix;

/// How a sample's matrix should be handed to the spatial branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    /// Columns are square frames; they get tiled into a mosaic before
    /// patch extraction.
    ImageSet,
    /// The matrix itself is the 2-D array to patch.
    FeatureMap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    pub path: PathBuf,
    pub kind: SampleKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: u32,
    pub name: String,
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub classes: Vec<ClassRecord>,
}

impl Manifest {
    /// Read and validate a manifest. Relative sample paths are resolved
    /// against the manifest's directory, and every referenced file must
    /// exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: Manifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));

        if manifest.classes.is_empty() {
            return Err(J3sError::InvalidInput(format!(
                "manifest {} lists no classes",
                path.display()
            )));
        }
        let mut class_ids = HashSet::new();
        let mut sample_ids = HashSet::new();
        for class in &mut manifest.classes {
            if !class_ids.insert(class.id) {
                return Err(J3sError::InvalidInput(format!(
                    "duplicate class id {}",
                    class.id
                )));
            }
            if class.samples.is_empty() {
                return Err(J3sError::EmptyClass {
                    class_id: class.id,
                    available: 0,
                    needed: 1,
                });
            }
            for sample in &mut class.samples {
                if !sample_ids.insert(sample.id.clone()) {
                    return Err(J3sError::InvalidInput(format!(
                        "duplicate sample id '{}'",
                        sample.id
                    )));
                }
                if sample.path.is_relative() {
                    sample.path = base.join(&sample.path);
                }
                if !sample.path.is_file() {
                    return Err(J3sError::InvalidInput(format!(
                        "sample '{}': file not found: {}",
                        sample.id,
                        sample.path.display()
                    )));
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.classes.iter().map(|c| c.samples.len()).sum()
    }
}

/// Parse a CSV of numbers where each line is one feature row.
pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut values: Vec<f64> = Vec::new();
    let mut cols = 0usize;
    let mut rows = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            return Err(J3sError::FormatError {
                path: path_str,
                offset: lineno as u64 + 1,
                message: "empty line".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if rows == 0 {
            cols = fields.len();
        } else if fields.len() != cols {
            return Err(J3sError::FormatError {
                path: path_str,
                offset: lineno as u64 + 1,
                message: format!("line has {} fields, expected {cols}", fields.len()),
            });
        }
        for (f, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| J3sError::InvalidValue {
                path: path_str.clone(),
                message: format!("line {}, field {}: cannot parse '{field}'", lineno + 1, f + 1),
            })?;
            if !v.is_finite() {
                return Err(J3sError::InvalidValue {
                    path: path_str,
                    message: format!("line {}, field {}: non-finite value", lineno + 1, f + 1),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(J3sError::FormatError {
            path: path_str,
            offset: 0,
            message: "no data rows".into(),
        });
    }
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

/// Write a matrix as CSV, one feature row per line. Values are printed with
/// the shortest representation that parses back to the same `f64`, so a
/// CSV round trip is lossless.
pub fn write_csv_matrix(path: &Path, data: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", data[(i, j)]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Load a matrix, picking the format by file extension: `.fmx1` is the binary
/// container, anything else is CSV.
pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let is_fmx1 = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("fmx1"))
        .unwrap_or(false);
    if is_fmx1 {
        read_fmx1(path)
    } else {
        read_csv_matrix(path)
    }
}

/// Load one manifest entry as a labeled [`FeatureMatrix`].
pub fn load_feature_matrix(entry: &SampleEntry, class_id: u32) -> Result<FeatureMatrix> {
    let data = load_matrix(&entry.path)?;
    FeatureMatrix::new(data, class_id, entry.id.clone())
}

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent, reproducible RNG stream from a run seed, a purpose
/// tag, and a context key (class id, sample id, ...). Streams with different
/// tags or keys are unrelated, so adding a consumer never shifts the draws of
/// existing ones.
pub fn derive_rng(seed: u64, tag: &str, key: &[u8]) -> ChaCha12Rng {
    let mut h = 0xcbf29ce484222325u64;
    h = fnv1a(h, &seed.to_le_bytes());
    h = fnv1a(h, tag.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, key);
    let mut state = h;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(bytes)
}

/// Gallery size per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GalleryCount {
    Count(usize),
    /// Half the class, rounded up toward the gallery.
    Half,
}

impl GalleryCount {
    pub fn size_for(&self, available: usize) -> usize {
        match self {
            GalleryCount::Count(n) => *n,
            GalleryCount::Half => available.div_ceil(2),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub gallery: GalleryCount,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SplitSample {
    pub class_id: u32,
    pub entry: SampleEntry,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub gallery: Vec<SplitSample>,
    pub probes: Vec<SplitSample>,
}

/// Shuffle each class with its own derived stream and cut off the gallery.
///
/// Per-class streams mean adding or reordering *other* classes cannot change
/// a class's split. Every class must contribute at least one probe.
pub fn gallery_probe_split(manifest: &Manifest, spec: &SplitSpec) -> Result<Split> {
    let mut classes: Vec<&ClassRecord> = manifest.classes.iter().collect();
    classes.sort_by_key(|c| c.id);

    let mut gallery = Vec::new();
    let mut probes = Vec::new();
    for class in classes {
        let n = class.samples.len();
        if n < 2 {
            return Err(J3sError::EmptyClass {
                class_id: class.id,
                available: n,
                needed: 2,
            });
        }
        let g = spec.gallery.size_for(n);
        if g == 0 {
            return Err(J3sError::InvalidConfig(format!(
                "class {} would get an empty gallery",
                class.id
            )));
        }
        if g >= n {
            return Err(J3sError::InvalidConfig(format!(
                "class {} has {n} samples; a gallery of {g} leaves no probes",
                class.id
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = derive_rng(spec.seed, "split", &class.id.to_le_bytes());
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            let sample = SplitSample {
                class_id: class.id,
                entry: class.samples[i].clone(),
            };
            if pos < g {
                gallery.push(sample);
            } else {
                probes.push(sample);
            }
        }
    }
    Ok(Split { gallery, probes })
}

/// Keep a seeded random `k`-subset of each class, preserving the input order
/// of the survivors.
pub fn few_shot_subsample(samples: &[SplitSample], k: usize, seed: u64) -> Result<Vec<SplitSample>> {
    if k == 0 {
        return Err(J3sError::InvalidConfig(
            "few-shot count must be at least 1".into(),
        ));
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_class.entry(s.class_id).or_default().push(i);
    }
    let mut keep = BTreeSet::new();
    for (&class_id, idxs) in &by_class {
        if idxs.len() < k {
            return Err(J3sError::InvalidConfig(format!(
                "few-shot count {k} exceeds the {} gallery samples of class {class_id}",
                idxs.len()
            )));
        }
        let mut shuffled = idxs.clone();
        let mut rng = derive_rng(seed, "fewshot", &class_id.to_le_bytes());
        shuffled.shuffle(&mut rng);
        keep.extend(shuffled.into_iter().take(k));
    }
    Ok(keep.into_iter().map(|i| samples[i].clone()).collect())
}

/// Reproducible additive Gaussian noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    /// Clamp the noisy values into this closed interval (e.g. intensity data).
    pub value_range: Option<(f64, f64)>,
}

/// Add white Gaussian noise to every entry. The stream is keyed by the sample
/// id, so each sample's noise is independent of how many other samples were
/// processed before it. `sigma` must be non-negative; zero is a no-op.
pub fn add_gaussian_noise(x: &FeatureMatrix, spec: &NoiseSpec) -> FeatureMatrix {
    assert!(
        spec.sigma >= 0.0 && spec.sigma.is_finite(),
        "noise sigma must be finite and non-negative"
    );
    if spec.sigma == 0.0 {
        return x.clone();
    }
    let mut rng = derive_rng(spec.seed, "noise", x.sample_id.as_bytes());
    let normal = Normal::new(0.0, spec.sigma).expect("sigma validated above");
    let mut out = x.clone();
    for v in out.data.iter_mut() {
        *v += normal.sample(&mut rng);
        if let Some((lo, hi)) = spec.value_range {
            *v = v.clamp(lo, hi);
        }
    }
    out
}
