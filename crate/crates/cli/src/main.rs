//! `bootviz`: reconstruct undersampled k-space, estimate reconstruction
//! errors with a bootstrap, render the error visualizations, and summarize
//! the estimate as blurred root-sum-of-squares scalars.
//!
//! Exit status: 0 on success, 1 on error, 2 on usage errors, 3 when a flag
//! threshold is set and the run is flagged.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bootviz_cli::config::{InputSpec, PipelineConfig};
use bootviz_cli::pipeline::{cmd_pipeline, cmd_sweep, cmd_viz, format_sweep_table, VizSelection};
use bootviz_core::io::{mask_to_rle, save_gray, save_mask_pgm, BitDepth};
use bootviz_core::phantom::shepp_logan;
use bootviz_core::recon::Transform;
use bootviz_core::sampling::{make_mask, retained_fraction_of, MaskSpec};
use bootviz_core::viz::OverlayConfig;

const EXIT_FLAGGED: u8 = 3;

#[derive(Parser)]
#[command(name = "bootviz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: reconstruction, bootstrap, figures, sweep,
    /// manifest, and optional flagging.
    Pipeline(RunArgs),
    /// Run through the bootstrap once, then emit the sigma sweep only.
    Sweep(RunArgs),
    /// Re-render visualizations from a saved reconstruction and estimate.
    Viz(VizArgs),
    /// Write the built-in phantom image.
    Phantom(PhantomArgs),
    /// Write a sampling mask as PGM (and optionally run-length text).
    Mask(MaskArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKindArg {
    Horizontal,
    Radial,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Haar,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResampleArg {
    Mask,
    Residual,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Built-in phantom size (ground-truth mode).
    #[arg(long, conflicts_with_all = ["input_image", "input_kspace"])]
    phantom_size: Option<usize>,

    /// Grayscale PNG/PGM used as ground truth.
    #[arg(long, conflicts_with = "input_kspace")]
    input_image: Option<PathBuf>,

    /// Raw k-space dump (KSP1); disables true-error outputs.
    #[arg(long)]
    input_kspace: Option<PathBuf>,

    #[arg(long, value_enum)]
    mask_kind: Option<MaskKindArg>,
    /// Fraction of rows retained (horizontal masks).
    #[arg(long)]
    retained_fraction: Option<f64>,
    /// Fraction of central rows always kept (horizontal masks).
    #[arg(long)]
    center_fraction: Option<f64>,
    /// Seed for the random row selection (horizontal masks).
    #[arg(long)]
    mask_seed: Option<u64>,
    /// Number of spokes (radial masks).
    #[arg(long)]
    spokes: Option<u32>,

    /// Sparsity weight of the solver.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    ista_iterations: Option<u32>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, value_enum)]
    transform: Option<TransformArg>,

    #[arg(long)]
    boot_iterations: Option<u32>,
    #[arg(long)]
    boot_seed: Option<u64>,
    #[arg(long, value_enum)]
    resample: Option<ResampleArg>,

    /// Overlay percentile (defaults: 2 for horizontal, 1 for radial).
    #[arg(long)]
    percentile: Option<f64>,
    /// Sigma of the blurred-overlay variant.
    #[arg(long)]
    pre_blur_sigma: Option<f64>,

    /// Sigma of the summary blur (the flagging statistic's sigma).
    #[arg(long)]
    blur_sigma: Option<f64>,
    /// Kernel half-width in units of sigma.
    #[arg(long)]
    truncate: Option<f64>,
    /// Comma-separated sweep grid, e.g. 0,0.5,1,2.
    #[arg(long, value_delimiter = ',')]
    sigma_grid: Option<Vec<f64>>,
    /// Flag the run (exit 2) when rss of the blurred estimate exceeds this.
    #[arg(long)]
    flag_threshold: Option<f64>,
}

impl RunArgs {
    fn build_config(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(path) = &self.input_kspace {
            cfg.input = InputSpec::Kspace { path: path.clone() };
        } else if let Some(path) = &self.input_image {
            cfg.input = InputSpec::Image { path: path.clone() };
        } else if let Some(size) = self.phantom_size {
            cfg.input = InputSpec::Phantom { size };
        }
        self.apply_mask(&mut cfg.mask);
        if let Some(v) = self.lambda {
            cfg.recon.lambda = v;
        }
        if let Some(v) = self.ista_iterations {
            cfg.recon.iterations = v;
        }
        if let Some(v) = self.step {
            cfg.recon.step = v;
        }
        if let Some(t) = self.transform {
            cfg.recon.transform = match t {
                TransformArg::Haar => Transform::Haar,
                TransformArg::Identity => Transform::Identity,
            };
        }
        if let Some(v) = self.boot_iterations {
            cfg.bootstrap.iterations = v;
        }
        if let Some(v) = self.boot_seed {
            cfg.bootstrap.seed = v;
        }
        if let Some(r) = self.resample {
            cfg.bootstrap.resample_kind = match r {
                ResampleArg::Mask => bootviz_core::bootstrap::ResampleKind::MaskResample,
                ResampleArg::Residual => bootviz_core::bootstrap::ResampleKind::ResidualResample,
            };
        }
        if self.percentile.is_some() {
            cfg.overlay.percentile = self.percentile;
        }
        if let Some(v) = self.pre_blur_sigma {
            cfg.overlay.pre_blur_sigma = v;
        }
        if let Some(v) = self.blur_sigma {
            cfg.blur.sigma = v;
        }
        if let Some(v) = self.truncate {
            cfg.blur.truncate = v;
        }
        if let Some(grid) = &self.sigma_grid {
            cfg.summary.sigma_grid = grid.clone();
        }
        if self.flag_threshold.is_some() {
            cfg.summary.flag_threshold = self.flag_threshold;
        }
        Ok(cfg)
    }

    fn apply_mask(&self, spec: &mut MaskSpec) {
        if let Some(kind) = self.mask_kind {
            *spec = match kind {
                MaskKindArg::Horizontal => MaskSpec::Horizontal {
                    retained_fraction: self.retained_fraction.unwrap_or(0.25),
                    center_fraction: self.center_fraction.unwrap_or(0.08),
                    seed: self.mask_seed.unwrap_or(7),
                },
                MaskKindArg::Radial => MaskSpec::Radial {
                    num_spokes: self.spokes.unwrap_or(40),
                },
                MaskKindArg::Full => MaskSpec::Full,
            };
            return;
        }
        match spec {
            MaskSpec::Horizontal {
                retained_fraction,
                center_fraction,
                seed,
            } => {
                if let Some(v) = self.retained_fraction {
                    *retained_fraction = v;
                }
                if let Some(v) = self.center_fraction {
                    *center_fraction = v;
                }
                if let Some(v) = self.mask_seed {
                    *seed = v;
                }
            }
            MaskSpec::Radial { num_spokes } => {
                if let Some(v) = self.spokes {
                    *num_spokes = v;
                }
            }
            MaskSpec::Full => {}
        }
    }
}

#[derive(Args)]
struct VizArgs {
    /// Saved reconstruction (grayscale PNG/PGM).
    #[arg(long)]
    recon: PathBuf,
    /// Saved estimate: the pipeline's `estimate.png` (decoded via its JSON
    /// sidecar) or a mid-gray-centered grayscale map.
    #[arg(long)]
    estimate: PathBuf,
    /// Renderings to emit; omit for all of them.
    #[arg(long, value_enum, value_delimiter = ',')]
    select: Vec<VizSelection>,
    #[arg(long, default_value_t = 2.0)]
    percentile: f64,
    #[arg(long, default_value_t = 0.0)]
    pre_blur_sigma: f64,
    #[arg(long, default_value = "viz-out")]
    out: PathBuf,
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value = "phantom.png")]
    out: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, value_enum)]
    kind: MaskKindArg,
    #[arg(long, default_value_t = 128)]
    height: usize,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 0.25)]
    retained_fraction: f64,
    #[arg(long, default_value_t = 0.08)]
    center_fraction: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    spokes: u32,
    #[arg(long, default_value = "mask.pgm")]
    out: PathBuf,
    /// Also write the exact run-length text encoding here.
    #[arg(long)]
    rle: Option<PathBuf>,
}

fn run() -> anyhow::Result<u8> {
    match Cli::parse().command {
        Command::Pipeline(args) => {
            let cfg = args.build_config()?;
            let manifest = cmd_pipeline(&cfg)?;
            println!(
                "pipeline done: {} artifacts in {}",
                manifest.artifacts.len(),
                cfg.output.dir.display()
            );
            print!("{}", format_sweep_table(&manifest.summary));
            if let Some(flag) = &manifest.flag {
                println!("{}", flag.message);
                if flag.flagged {
                    return Ok(EXIT_FLAGGED);
                }
            }
            Ok(0)
        }
        Command::Sweep(args) => {
            let cfg = args.build_config()?;
            let rows = cmd_sweep(&cfg)?;
            print!("{}", format_sweep_table(&rows));
            println!("wrote sweep.csv and sweep.json to {}", cfg.output.dir.display());
            Ok(0)
        }
        Command::Viz(args) => {
            let overlay = OverlayConfig {
                percentile: args.percentile,
                pre_blur_sigma: args.pre_blur_sigma,
            };
            let written = cmd_viz(&args.recon, &args.estimate, &args.select, &overlay, &args.out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Phantom(args) => {
            let img = shepp_logan(args.size)?;
            save_gray(&img, &args.out, BitDepth::Sixteen)?;
            println!("wrote {}x{} phantom to {}", args.size, args.size, args.out.display());
            Ok(0)
        }
        Command::Mask(args) => {
            let spec = match args.kind {
                MaskKindArg::Horizontal => MaskSpec::Horizontal {
                    retained_fraction: args.retained_fraction,
                    center_fraction: args.center_fraction,
                    seed: args.seed,
                },
                MaskKindArg::Radial => MaskSpec::Radial {
                    num_spokes: args.spokes,
                },
                MaskKindArg::Full => MaskSpec::Full,
            };
            let mask = make_mask(&spec, args.height, args.width)?;
            save_mask_pgm(&mask, &args.out)?;
            println!(
                "wrote {} mask ({}x{}, retained fraction {:.4}) to {}",
                mask.kind(),
                args.height,
                args.width,
                retained_fraction_of(&mask),
                args.out.display()
            );
            if let Some(rle_path) = &args.rle {
                std::fs::write(rle_path, mask_to_rle(&mask))?;
                println!("wrote {}", rle_path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
