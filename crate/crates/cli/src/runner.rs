//! Benchmark orchestration: seeded splits, descriptor construction, dictionary
//! assembly, probe classification, and accuracy aggregation.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use j3s_core::dataset::{
    add_gaussian_noise, few_shot_subsample, gallery_probe_split, load_feature_matrix, Manifest,
    NoiseSpec, SampleKind, SplitSample, SplitSpec,
};
use j3s_core::joint::{solve, solve_restricted};
use j3s_core::unitary::{build_spatial, frame_mosaic};
use j3s_core::{
    assemble_dictionaries, build_descriptor, predict, predict_global, J3sError, JointDictionary,
    PredictionReport, Query, Result,
};

use crate::config::{ExperimentConfig, SolveMode};

/// Intensity samples are clamped into this range after corruption.
const PIXEL_RANGE: (f64, f64) = (0.0, 255.0);

/// One sample reduced to its two descriptor vectors.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub sample_id: String,
    pub class_id: u32,
    pub stat: DVector<f64>,
    pub spat: DVector<f64>,
}

/// One classified probe.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub repeat: usize,
    pub prediction: PredictionReport,
}

/// Loss trace of one (probe, class block) solve.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub repeat: usize,
    pub sample_id: String,
    pub class_id: u32,
    pub losses: Vec<f64>,
}

/// Accumulated wall clock per phase, in seconds. Logged, never written into
/// reports, so output files stay byte-identical across runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Timings {
    pub descriptor_secs: f64,
    pub solve_secs: f64,
}

/// Everything one benchmark run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    /// Class ids present in the manifest, ascending.
    pub class_ids: Vec<u32>,
    pub per_repeat_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation over repeats; 0 for a single repeat.
    pub std_accuracy: f64,
    pub rows: Vec<ReportRow>,
    pub traces: Vec<TraceRecord>,
    pub timings: Timings,
}

/// Load one split member and run both descriptor branches.
///
/// Noise (when enabled) is keyed by the per-repeat seed and the sample id, and
/// intensity data (`image_set`) is clamped to `[0, 255]` while feature data is
/// left unclamped. Image sets are tiled into a frame mosaic before patch
/// extraction; feature maps are patched directly.
fn prepare_sample(
    sample: &SplitSample,
    cfg: &ExperimentConfig,
    split_seed: u64,
) -> Result<PreparedSample> {
    let mut x = load_feature_matrix(&sample.entry, sample.class_id)?;
    if cfg.noise_sigma > 0.0 {
        let value_range = match sample.entry.kind {
            SampleKind::ImageSet => Some(PIXEL_RANGE),
            SampleKind::FeatureMap => None,
        };
        x = add_gaussian_noise(
            &x,
            &NoiseSpec {
                sigma: cfg.noise_sigma,
                seed: split_seed,
                value_range,
            },
        );
    }
    let descriptor = build_descriptor(&x, &cfg.gaussian)?;
    let spatial = match sample.entry.kind {
        SampleKind::ImageSet => build_spatial(&frame_mosaic(&x.data), &cfg.patch)?,
        SampleKind::FeatureMap => build_spatial(&x.data, &cfg.patch)?,
    };
    Ok(PreparedSample {
        sample_id: sample.entry.id.clone(),
        class_id: sample.class_id,
        stat: descriptor.stat_vector,
        spat: spatial.spatial_vector,
    })
}

fn prepare_all(
    samples: &[SplitSample],
    cfg: &ExperimentConfig,
    split_seed: u64,
) -> Result<Vec<PreparedSample>> {
    samples
        .par_iter()
        .map(|s| prepare_sample(s, cfg, split_seed))
        .collect()
}

/// Re-solve selected probes while recording per-iteration losses.
///
/// Picks the first probe of each class. Per-class mode records one trace per
/// (probe, class block); global mode solves once over the whole dictionary and
/// files the trace under the probe's own class.
fn capture_traces(
    repeat: usize,
    dict: &JointDictionary,
    queries: &[Query],
    cfg: &ExperimentConfig,
) -> Result<Vec<TraceRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for q in queries {
        let label = q.true_label.expect("probes carry labels");
        if !seen.insert(label) {
            continue;
        }
        match cfg.solve_mode {
            SolveMode::PerClass => {
                for &class_id in dict.class_ranges.keys() {
                    let code = solve_restricted(dict, class_id, &q.stat, &q.spat, &cfg.params)?;
                    out.push(TraceRecord {
                        repeat,
                        sample_id: q.sample_id.clone(),
                        class_id,
                        losses: code.loss_trace,
                    });
                }
            }
            SolveMode::Global => {
                let code = solve(dict, &q.stat, &q.spat, &cfg.params)?;
                out.push(TraceRecord {
                    repeat,
                    sample_id: q.sample_id.clone(),
                    class_id: label,
                    losses: code.loss_trace,
                });
            }
        }
    }
    Ok(out)
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_std(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Run the full benchmark: for each repeat, split with `seed + r`, build
/// descriptors from the (possibly subsampled, possibly corrupted) gallery,
/// classify every probe, and record accuracy.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let manifest = Manifest::load(&cfg.manifest_path)?;
    let mut class_ids: Vec<u32> = manifest.classes.iter().map(|c| c.id).collect();
    class_ids.sort_unstable();

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut per_repeat_accuracy = Vec::with_capacity(cfg.repeats);
    let mut timings = Timings::default();

    for r in 0..cfg.repeats {
        let split_seed = cfg.seed.wrapping_add(r as u64);
        let split = gallery_probe_split(
            &manifest,
            &SplitSpec {
                gallery: cfg.gallery,
                seed: split_seed,
            },
        )?;
        let gallery = match cfg.few_shot_k {
            Some(k) => few_shot_subsample(&split.gallery, k, split_seed)?,
            None => split.gallery,
        };

        let t0 = Instant::now();
        let prepared_gallery = prepare_all(&gallery, cfg, split_seed)?;
        let prepared_probes = prepare_all(&split.probes, cfg, split_seed)?;
        timings.descriptor_secs += t0.elapsed().as_secs_f64();

        let items: Vec<(DVector<f64>, DVector<f64>, u32)> = prepared_gallery
            .into_iter()
            .map(|p| (p.stat, p.spat, p.class_id))
            .collect();
        let dict = assemble_dictionaries(&items, cfg.use_pca)?;

        let queries: Vec<Query> = prepared_probes
            .into_iter()
            .map(|p| Query {
                sample_id: p.sample_id,
                true_label: Some(p.class_id),
                stat: p.stat,
                spat: p.spat,
            })
            .collect();

        let t1 = Instant::now();
        let predictions: Vec<PredictionReport> = queries
            .par_iter()
            .map(|q| match cfg.solve_mode {
                SolveMode::PerClass => predict(&dict, q, &cfg.params),
                SolveMode::Global => predict_global(&dict, q, &cfg.params),
            })
            .collect::<Result<_>>()?;
        timings.solve_secs += t1.elapsed().as_secs_f64();

        let correct = predictions
            .iter()
            .filter(|p| p.is_correct() == Some(true))
            .count();
        per_repeat_accuracy.push(correct as f64 / predictions.len().max(1) as f64);
        log::debug!(
            "repeat {r}: {} gallery, {} probes, accuracy {}",
            items.len(),
            predictions.len(),
            per_repeat_accuracy[r]
        );

        if cfg.trace_losses {
            traces.extend(capture_traces(r, &dict, &queries, cfg)?);
        }
        rows.extend(
            predictions
                .into_iter()
                .map(|prediction| ReportRow { repeat: r, prediction }),
        );
    }

    let mean_accuracy = mean(&per_repeat_accuracy);
    let std_accuracy = sample_std(&per_repeat_accuracy, mean_accuracy);
    log::info!(
        "benchmark: {} repeats, mean accuracy {:.4} (std {:.4}); descriptors {:.2}s, solves {:.2}s",
        cfg.repeats,
        mean_accuracy,
        std_accuracy,
        timings.descriptor_secs,
        timings.solve_secs
    );
    Ok(RunReport {
        class_ids,
        per_repeat_accuracy,
        mean_accuracy,
        std_accuracy,
        rows,
        traces,
        timings,
    })
}

/// Parameters [`run_ablation`] can sweep.
pub const ABLATABLE_PARAMS: &[&str] = &[
    "theta",
    "lambda1",
    "lambda2",
    "lambda3",
    "sparsity_fraction",
    "use_pca",
];

/// One swept value together with its full benchmark report.
#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub param: String,
    pub value: String,
    pub report: RunReport,
}

/// Reject unknown sweep parameters before any work (or output) happens.
pub fn ensure_ablatable(param: &str) -> Result<()> {
    if ABLATABLE_PARAMS.contains(&param) {
        return Ok(());
    }
    Err(J3sError::InvalidConfig(format!(
        "unknown ablation parameter '{param}' (expected one of {})",
        ABLATABLE_PARAMS.join(", ")
    )))
}

fn apply_override(cfg: &mut ExperimentConfig, param: &str, raw: &str) -> Result<()> {
    let bad = |what: &str| {
        J3sError::InvalidConfig(format!("cannot parse '{raw}' as a {what} for {param}"))
    };
    match param {
        "theta" => cfg.params.theta = raw.parse().map_err(|_| bad("number"))?,
        "lambda1" => cfg.params.lambda1 = raw.parse().map_err(|_| bad("number"))?,
        "lambda2" => cfg.params.lambda2 = raw.parse().map_err(|_| bad("number"))?,
        "lambda3" => cfg.params.lambda3 = raw.parse().map_err(|_| bad("number"))?,
        "sparsity_fraction" => {
            cfg.patch.sparsity_fraction = raw.parse().map_err(|_| bad("number"))?
        }
        "use_pca" => cfg.use_pca = raw.parse().map_err(|_| bad("boolean"))?,
        other => ensure_ablatable(other)?,
    }
    Ok(())
}

/// Re-run the benchmark once per value of a single swept parameter.
pub fn run_ablation(
    cfg: &ExperimentConfig,
    param: &str,
    values: &[String],
) -> Result<Vec<AblationOutcome>> {
    ensure_ablatable(param)?;
    if values.is_empty() {
        return Err(J3sError::InvalidConfig(
            "ablation needs at least one value".into(),
        ));
    }
    let mut out = Vec::with_capacity(values.len());
    for raw in values {
        let mut swept = cfg.clone();
        apply_override(&mut swept, param, raw)?;
        log::info!("ablation: {param} = {raw}");
        let report = run_benchmark(&swept)?;
        out.push(AblationOutcome {
            param: param.to_string(),
            value: raw.clone(),
            report,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use j3s_core::dataset::GalleryCount;
    use j3s_core::{GaussianConfig, J3sParams, PatchConfig};

    fn base_config() -> ExperimentConfig {
        ExperimentConfig {
            manifest_path: "unused.json".into(),
            params: J3sParams::default(),
            gaussian: GaussianConfig::default(),
            patch: PatchConfig::default(),
            gallery: GalleryCount::Half,
            few_shot_k: None,
            noise_sigma: 0.0,
            use_pca: true,
            repeats: 1,
            seed: 0,
            trace_losses: false,
            solve_mode: SolveMode::PerClass,
        }
    }

    #[test]
    fn mean_and_std_edge_cases() {
        assert_eq!(mean(&[]), 0.0);
        assert_eq!(mean(&[0.5]), 0.5);
        assert_eq!(sample_std(&[0.5], 0.5), 0.0);
        let xs = [0.2, 0.4, 0.9];
        let m = mean(&xs);
        assert!((m - 0.5).abs() < 1e-15);
        // sample variance ((0.09 + 0.01 + 0.16) / 2) = 0.13
        assert!((sample_std(&xs, m) - 0.13f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn overrides_touch_the_right_field() {
        let mut cfg = base_config();
        apply_override(&mut cfg, "theta", "0.3").unwrap();
        assert_eq!(cfg.params.theta, 0.3);
        apply_override(&mut cfg, "lambda3", "0.1").unwrap();
        assert_eq!(cfg.params.lambda3, 0.1);
        apply_override(&mut cfg, "sparsity_fraction", "0.25").unwrap();
        assert_eq!(cfg.patch.sparsity_fraction, 0.25);
        apply_override(&mut cfg, "use_pca", "false").unwrap();
        assert!(!cfg.use_pca);
        assert!(apply_override(&mut cfg, "use_pca", "maybe").is_err());
        assert!(apply_override(&mut cfg, "theta", "warm").is_err());
        assert!(apply_override(&mut cfg, "gallery", "3").is_err());
    }

    #[test]
    fn ablation_rejects_unknown_parameter_and_empty_sweep() {
        let cfg = base_config();
        let err = run_ablation(&cfg, "beta", &["1.0".into()]).unwrap_err();
        assert!(matches!(err, J3sError::InvalidConfig(_)));
        let err = run_ablation(&cfg, "theta", &[]).unwrap_err();
        assert!(matches!(err, J3sError::InvalidConfig(_)));
    }
}
