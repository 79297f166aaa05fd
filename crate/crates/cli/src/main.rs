use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use j3s_cli::config::{parse_gallery, parse_patch, ExperimentConfig, SolveMode};
use j3s_cli::report::{
    write_ablation_csv, write_report_csv, write_summary_csv, write_traces_csv,
};
use j3s_cli::runner::{run_ablation, run_benchmark};
use j3s_cli::synth::{generate_synthetic, SynthSpec};
use j3s_core::unitary::DictInit;
use j3s_core::{GaussianConfig, J3sParams, PatchConfig, Result};

#[derive(Parser)]
#[command(
    name = "j3s",
    version,
    about = "Joint statistical-spatial sparse classification benchmark harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a classification benchmark from a dataset manifest
    Benchmark(BenchmarkArgs),
    /// Sweep one parameter, running the full benchmark per value
    Ablate(AblateArgs),
    /// Generate a synthetic dataset plus manifest
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dataset manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,

    /// Statistical-branch weight, strictly between 0 and 1
    #[arg(long, default_value_t = 0.6)]
    theta: f64,

    /// Ridge weight on the statistical codes
    #[arg(long, default_value_t = 1e-3)]
    lambda1: f64,

    /// Ridge weight on the spatial codes
    #[arg(long, default_value_t = 1e-3)]
    lambda2: f64,

    /// Cross-branch coupling weight; 0 decouples the branches
    #[arg(long, default_value_t = 1e-3)]
    lambda3: f64,

    /// Covariance shrinkage weight, strictly between 0 and 1
    #[arg(long, default_value_t = 0.5)]
    cov_alpha: f64,

    /// Mean scale inside the SPD embedding
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// Patch size: "8" for square or "4x6" for height x width
    #[arg(long, default_value = "8")]
    patch: String,

    /// Patch stride
    #[arg(long, default_value_t = 4)]
    stride: usize,

    /// Fraction of patch coefficients kept by the hard threshold
    #[arg(long, default_value_t = 0.1)]
    sparsity: f64,

    /// Transform-learning rounds per sample
    #[arg(long, default_value_t = 30)]
    dict_iters: usize,

    /// Reduce dictionaries with PCA (the default)
    #[arg(long, overrides_with = "no_pca")]
    pca: bool,

    /// Keep dictionaries in the raw descriptor space
    #[arg(long, overrides_with = "pca")]
    no_pca: bool,

    /// Additive Gaussian noise level; image-set data is clamped to [0, 255]
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,

    /// Keep only this many gallery samples per class
    #[arg(long)]
    few_shot_k: Option<usize>,

    /// Gallery size per class: a positive count or "half"
    #[arg(long, default_value = "half")]
    gallery_per_class: String,

    /// Number of repeated splits
    #[arg(long, default_value_t = 1)]
    repeats: usize,

    /// Base seed; repeat r splits with seed + r
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Solver iteration cap per query
    #[arg(long, default_value_t = 50)]
    max_iters: usize,

    /// Solver stopping tolerance on the loss decrease
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,

    /// Record loss traces for the first probe of each class
    #[arg(long)]
    trace_losses: bool,

    /// Square-root map before Gaussian fitting (non-negative data only)
    #[arg(long)]
    hellinger: bool,

    /// How probes are coded against the gallery
    #[arg(long, value_enum, default_value = "per-class")]
    solve_mode: SolveMode,
}

impl ExperimentArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let (patch_h, patch_w) = parse_patch(&self.patch)?;
        let gallery = parse_gallery(&self.gallery_per_class)?;
        let cfg = ExperimentConfig {
            manifest_path: self.manifest,
            params: J3sParams {
                theta: self.theta,
                lambda1: self.lambda1,
                lambda2: self.lambda2,
                lambda3: self.lambda3,
                max_iters: self.max_iters,
                tol: self.tol,
                ..J3sParams::default()
            },
            gaussian: GaussianConfig {
                cov_shrinkage: self.cov_alpha,
                beta: self.beta,
                use_hellinger: self.hellinger,
                ..GaussianConfig::default()
            },
            patch: PatchConfig {
                patch_h,
                patch_w,
                stride: self.stride,
                sparsity_fraction: self.sparsity,
                iterations: self.dict_iters,
                init: DictInit::Dct,
            },
            gallery,
            few_shot_k: self.few_shot_k,
            noise_sigma: self.noise_sigma,
            use_pca: !self.no_pca,
            repeats: self.repeats,
            seed: self.seed,
            trace_losses: self.trace_losses,
            solve_mode: self.solve_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,

    /// Directory for report.csv, summary.csv and (with --trace-losses)
    /// traces.csv
    #[arg(long, default_value = "j3s-out")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,

    /// Parameter to sweep: theta, lambda1, lambda2, lambda3,
    /// sparsity_fraction or use_pca
    #[arg(long)]
    param: String,

    /// Comma-separated values to sweep
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,

    /// Directory for ablation.csv
    #[arg(long, default_value = "j3s-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of classes
    #[arg(long, default_value_t = 4)]
    classes: usize,

    /// Feature dimension (rows of every sample matrix)
    #[arg(long, default_value_t = 10)]
    dim: usize,

    /// Columns per sample matrix
    #[arg(long, default_value_t = 50)]
    set_size: usize,

    /// Samples per class
    #[arg(long, default_value_t = 10)]
    samples_per_class: usize,

    /// Distance between class means, in within-class sigmas
    #[arg(long, default_value_t = 5.0)]
    separation: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Write 0-255 intensity CSVs tagged image_set instead of FMX1 feature
    /// maps (dim must be a perfect square)
    #[arg(long)]
    intensity: bool,

    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(j3s_cli::exit_code(&e));
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Benchmark(args) => {
            let cfg = args.experiment.into_config()?;
            std::fs::create_dir_all(&args.out)?;
            let report = run_benchmark(&cfg)?;
            write_report_csv(&args.out.join("report.csv"), &report)?;
            write_summary_csv(&args.out.join("summary.csv"), &report)?;
            if cfg.trace_losses {
                write_traces_csv(&args.out.join("traces.csv"), &report)?;
            }
            println!(
                "mean accuracy {} over {} repeats -> {}",
                report.mean_accuracy,
                cfg.repeats,
                args.out.display()
            );
        }
        Command::Ablate(args) => {
            let cfg = args.experiment.into_config()?;
            j3s_cli::runner::ensure_ablatable(&args.param)?;
            std::fs::create_dir_all(&args.out)?;
            let outcomes = run_ablation(&cfg, &args.param, &args.values)?;
            let path = args.out.join("ablation.csv");
            write_ablation_csv(&path, &outcomes)?;
            println!("{} runs -> {}", outcomes.len(), path.display());
        }
        Command::Synth(args) => {
            let spec = SynthSpec {
                classes: args.classes,
                dim: args.dim,
                set_size: args.set_size,
                samples_per_class: args.samples_per_class,
                separation: args.separation,
                seed: args.seed,
                intensity: args.intensity,
                out_dir: args.out,
            };
            let path = generate_synthetic(&spec)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
