//! Experiment configuration assembled from CLI flags, plus the small parsers
//! for flag values that are not plain numbers.

use std::path::PathBuf;

use j3s_core::dataset::GalleryCount;
use j3s_core::error::{J3sError, Result};
use j3s_core::{GaussianConfig, J3sParams, PatchConfig};

/// How queries are coded for classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolveMode {
    /// One restricted solve per class block (the default design).
    PerClass,
    /// One solve over the full dictionary, scored per class sub-vector.
    Global,
}

/// Everything one benchmark run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub manifest_path: PathBuf,
    pub params: J3sParams,
    pub gaussian: GaussianConfig,
    pub patch: PatchConfig,
    pub gallery: GalleryCount,
    pub few_shot_k: Option<usize>,
    /// Additive Gaussian noise level; 0 disables corruption.
    pub noise_sigma: f64,
    pub use_pca: bool,
    pub repeats: usize,
    pub seed: u64,
    pub trace_losses: bool,
    pub solve_mode: SolveMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.gaussian.validate()?;
        self.patch.validate()?;
        if self.repeats == 0 {
            return Err(J3sError::InvalidConfig("repeats must be at least 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(J3sError::InvalidConfig(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.few_shot_k == Some(0) {
            return Err(J3sError::InvalidConfig(
                "few-shot count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Parse a patch geometry: `"8"` means square, `"4x6"` means height x width.
pub fn parse_patch(s: &str) -> Result<(usize, usize)> {
    let bad = || J3sError::InvalidConfig(format!("cannot parse patch size '{s}' (use \"8\" or \"8x8\")"));
    let s = s.trim();
    if let Some((h, w)) = s.split_once(['x', 'X']) {
        let h: usize = h.trim().parse().map_err(|_| bad())?;
        let w: usize = w.trim().parse().map_err(|_| bad())?;
        if h == 0 || w == 0 {
            return Err(bad());
        }
        Ok((h, w))
    } else {
        let n: usize = s.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok((n, n))
    }
}

/// Parse a per-class gallery size: an integer or `"half"`.
pub fn parse_gallery(s: &str) -> Result<GalleryCount> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("half") {
        return Ok(GalleryCount::Half);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(GalleryCount::Count(n)),
        _ => Err(J3sError::InvalidConfig(format!(
            "cannot parse gallery size '{s}' (use a positive integer or \"half\")"
        ))),
    }
}
