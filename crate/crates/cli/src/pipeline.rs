//! Pipeline orchestration: phantom or file in, figures and reports out.
//!
//! A successful run leaves the output directory holding the grayscale
//! displays, all four colorizations (plus the blurred-overlay variant), the
//! signed maps, composite panels with legend sidecars, the serialized
//! estimate, the sigma sweep CSV, and `manifest.json` listing every emitted
//! file with its checksum. A failed run removes whatever it had written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use bootviz_core::bootstrap::{bootstrap_errors, corrected, true_error, ErrorEstimate};
use bootviz_core::error::in_stage;
use bootviz_core::img::GrayImage;
use bootviz_core::io::{
    load_estimate, load_gray, load_kspace, mask_to_rle, save_color, save_estimate, save_gray,
    save_mask_pgm, BitDepth,
};
use bootviz_core::kspace::{fft2, KSpace};
use bootviz_core::phantom::shepp_logan;
use bootviz_core::recon::reconstruct;
use bootviz_core::sampling::{apply_mask, make_mask, MaskSpec, SamplingMask};
use bootviz_core::summary::{flag, rss, sweep, SummaryRow};
use bootviz_core::viz::{
    gray_to_color, grayscale_error, interpolate_colorize, overlay_threshold, render_panel,
    saturate_colorize, signed_colormap, ErrorScale, OverlayConfig,
};
use bootviz_core::{ColorImage, Error, Result};

use crate::config::{InputSpec, PipelineConfig};
use crate::manifest::{ArtifactEntry, RunManifest, Seeds};

const PANEL_GUTTER: usize = 8;

/// Tracks emitted files so a failed run can remove its partial outputs.
struct Emitter {
    dir: PathBuf,
    artifacts: Vec<ArtifactEntry>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn record(&mut self, name: &str) -> Result<()> {
        let sha256 = crate::config::file_digest(&self.dir.join(name))?;
        self.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256,
        });
        Ok(())
    }

    fn gray(&mut self, name: &str, img: &GrayImage, depth: BitDepth) -> Result<()> {
        save_gray(img, &self.dir.join(name), depth)?;
        self.record(name)
    }

    fn color(&mut self, name: &str, img: &ColorImage) -> Result<()> {
        save_color(img, &self.dir.join(name))?;
        self.record(name)
    }

    fn text(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|source| Error::Write { path, source })?;
        self.record(name)
    }

    fn mask(&mut self, name: &str, mask: &SamplingMask) -> Result<()> {
        save_mask_pgm(mask, &self.dir.join(name))?;
        self.record(name)
    }

    fn estimate(&mut self, name: &str, est: &ErrorEstimate) -> Result<()> {
        save_estimate(est, &self.dir.join(name))?;
        self.record(name)?;
        let sidecar = Path::new(name)
            .with_extension("json")
            .to_string_lossy()
            .into_owned();
        self.record(&sidecar)
    }

    fn cleanup(&self) {
        for entry in &self.artifacts {
            let _ = fs::remove_file(self.dir.join(&entry.file));
        }
        let _ = fs::remove_file(self.dir.join("manifest.json"));
    }
}

fn mask_seed(spec: &MaskSpec) -> Option<u64> {
    match spec {
        MaskSpec::Horizontal { seed, .. } => Some(*seed),
        _ => None,
    }
}

fn load_input(input: &InputSpec) -> Result<(Option<GrayImage>, KSpace)> {
    match input {
        InputSpec::Phantom { size } => {
            let img = shepp_logan(*size)?;
            let k = fft2(&img);
            Ok((Some(img), k))
        }
        InputSpec::Image { path } => {
            let img = load_gray(path)?;
            let k = fft2(&img);
            Ok((Some(img), k))
        }
        InputSpec::Kspace { path } => Ok((None, load_kspace(path)?)),
    }
}

fn rows_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("sigma,rss,rms\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.sigma, row.rss, row.rms));
    }
    out
}

/// Config echo written next to the images so figures stay interpretable.
#[derive(Serialize)]
struct VizSidecar {
    overlay_percentile: f64,
    overlay_pre_blur_sigma: f64,
    true_error_scale: Option<f64>,
    bootstrap_error_scale: f64,
    sign_conventions: &'static str,
}

const SIGN_CONVENTIONS: &str = "positive errors: magenta (overlay, interpolated), red \
     (saturated, signed map); negative errors: cyan (overlay), green (saturated, \
     interpolated), blue (signed map)";

/// Runs the full pipeline and writes everything under `cfg.output.dir`.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint()?;
    let mut emitter = Emitter::new(&cfg.output.dir)?;
    match run_pipeline(cfg, fingerprint, &mut emitter) {
        Ok(manifest) => Ok(manifest),
        Err(e) => {
            emitter.cleanup();
            Err(e)
        }
    }
}

fn run_pipeline(
    cfg: &PipelineConfig,
    fingerprint: String,
    em: &mut Emitter,
) -> Result<RunManifest> {
    let (original, k_full) = load_input(&cfg.input).map_err(in_stage("input"))?;
    let (h, w) = k_full.dims();

    let mask = make_mask(&cfg.mask, h, w).map_err(in_stage("sampling"))?;
    let y = apply_mask(&k_full, &mask).map_err(in_stage("sampling"))?;
    em.mask("mask.pgm", &mask)?;
    em.text("mask.rle", &mask_to_rle(&mask))?;

    let recon = reconstruct(&y, &mask, &cfg.recon)
        .map_err(in_stage("reconstruction"))?
        .image;
    if let Some(orig) = &original {
        em.gray("original.png", orig, BitDepth::Sixteen)?;
    }
    em.gray("recon.png", &recon, BitDepth::Sixteen)?;

    let est = bootstrap_errors(&y, &mask, &cfg.mask, &cfg.recon, &cfg.bootstrap)
        .map_err(in_stage("bootstrap"))?;
    let d = &est.image;
    em.estimate("estimate.png", &est)?;

    let scale_d = ErrorScale::from_image(d);
    let bootstrap_gray = grayscale_error(d, &scale_d);
    em.gray("bootstrap_gray.png", &bootstrap_gray, BitDepth::Sixteen)?;
    let corrected_img = corrected(&recon, d).map_err(in_stage("viz"))?;
    em.gray("corrected.png", &corrected_img, BitDepth::Sixteen)?;

    let (overlay_cfg, overlay_blur_cfg) = cfg.overlay.resolve(mask.kind());
    let overlay = overlay_threshold(&recon, d, &overlay_cfg).map_err(in_stage("viz"))?;
    em.color("overlay.png", &overlay)?;
    let overlay_blurred =
        overlay_threshold(&recon, d, &overlay_blur_cfg).map_err(in_stage("viz"))?;
    em.color("overlay_blurred.png", &overlay_blurred)?;
    let saturated = saturate_colorize(&recon, d, &scale_d).map_err(in_stage("viz"))?;
    em.color("saturate.png", &saturated)?;
    let interpolated = interpolate_colorize(&recon, d, &scale_d).map_err(in_stage("viz"))?;
    em.color("interpolate.png", &interpolated)?;
    em.color("signed_bootstrap.png", &signed_colormap(d, &scale_d))?;

    let mut notes = vec![SIGN_CONVENTIONS.to_string()];
    let mut true_error_scale = None;
    let true_err = if let Some(orig) = &original {
        let e = true_error(orig, &recon).map_err(in_stage("viz"))?;
        let scale_e = ErrorScale::from_image(&e);
        true_error_scale = Some(scale_e.max_abs);
        em.gray(
            "error_gray.png",
            &grayscale_error(&e, &scale_e),
            BitDepth::Sixteen,
        )?;
        em.color("signed_error.png", &signed_colormap(&e, &scale_e))?;
        Some((e, scale_e))
    } else {
        notes.push("true-error outputs omitted: input provides no ground truth".into());
        None
    };

    // Composite panels in the layout of the reference figure sets.
    let recon_color = gray_to_color(&recon);
    let bootstrap_color = gray_to_color(&bootstrap_gray);
    let corrected_color = gray_to_color(&corrected_img);
    let signed_boot_color = signed_colormap(d, &scale_d);
    {
        let panel = match (&original, &true_err) {
            (Some(orig), Some((e, scale_e))) => {
                let orig_color = gray_to_color(orig);
                let err_color = gray_to_color(&grayscale_error(e, scale_e));
                render_panel(
                    &[
                        ("original", &orig_color),
                        ("reconstruction", &recon_color),
                        ("error of reconstruction", &err_color),
                        ("bootstrap", &bootstrap_color),
                    ],
                    PANEL_GUTTER,
                )
            }
            _ => render_panel(
                &[
                    ("reconstruction", &recon_color),
                    ("bootstrap", &bootstrap_color),
                ],
                PANEL_GUTTER,
            ),
        }
        .map_err(in_stage("viz"))?;
        em.color("panel_grayscale.png", &panel.0)?;
        em.text("panel_grayscale.txt", &panel.1)?;
    }
    {
        let (panel, legend) = render_panel(
            &[
                ("reconstruction - bootstrap", &corrected_color),
                ("errors over a threshold overlaid", &overlay),
                ("bootstrap-saturated reconstruction", &saturated),
                ("bootstrap-interpolated reconstruction", &interpolated),
            ],
            PANEL_GUTTER,
        )
        .map_err(in_stage("viz"))?;
        em.color("panel_color.png", &panel)?;
        em.text("panel_color.txt", &legend)?;
    }
    {
        let (panel, legend) = match &true_err {
            Some((e, scale_e)) => render_panel(
                &[
                    ("signed error of reconstruction", &signed_colormap(e, scale_e)),
                    ("signed bootstrap", &signed_boot_color),
                ],
                PANEL_GUTTER,
            ),
            None => render_panel(&[("signed bootstrap", &signed_boot_color)], PANEL_GUTTER),
        }
        .map_err(in_stage("viz"))?;
        em.color("panel_signed.png", &panel)?;
        em.text("panel_signed.txt", &legend)?;
    }

    let sidecar = VizSidecar {
        overlay_percentile: overlay_cfg.percentile,
        overlay_pre_blur_sigma: overlay_blur_cfg.pre_blur_sigma,
        true_error_scale,
        bootstrap_error_scale: scale_d.max_abs,
        sign_conventions: SIGN_CONVENTIONS,
    };
    let mut viz_json = serde_json::to_string_pretty(&sidecar).expect("sidecar serialization");
    viz_json.push('\n');
    em.text("viz.json", &viz_json)?;

    let rows = sweep(d, &cfg.summary.sigma_grid, &cfg.blur).map_err(in_stage("summary"))?;
    em.text("sweep.csv", &rows_to_csv(&rows))?;

    let flag_decision = match cfg.summary.flag_threshold {
        None => None,
        Some(threshold) => {
            let row = rows
                .iter()
                .find(|r| (r.sigma - cfg.blur.sigma).abs() < 1e-12)
                .copied()
                .map(Ok)
                .unwrap_or_else(|| -> Result<SummaryRow> {
                    let blurred = bootviz_core::summary::blur(d, &cfg.blur);
                    let value = rss(&blurred);
                    Ok(SummaryRow {
                        sigma: cfg.blur.sigma,
                        rss: value,
                        rms: value / (d.len() as f64).sqrt(),
                    })
                })?;
            Some(flag(&row, threshold).map_err(in_stage("summary"))?)
        }
    };

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_fingerprint: fingerprint,
        seeds: Seeds {
            mask: mask_seed(&cfg.mask),
            bootstrap: cfg.bootstrap.seed,
        },
        artifacts: em.artifacts.clone(),
        summary: rows,
        flag: flag_decision,
        notes,
    };
    manifest.write(&em.dir.join("manifest.json"))?;
    Ok(manifest)
}

/// Runs the pipeline through the bootstrap once, then the sigma sweep.
/// Emits `sweep.csv` and `sweep.json`; no figures.
pub fn cmd_sweep(cfg: &PipelineConfig) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint()?;
    let mut emitter = Emitter::new(&cfg.output.dir)?;
    let run = || -> Result<Vec<SummaryRow>> {
        let (_, k_full) = load_input(&cfg.input).map_err(in_stage("input"))?;
        let (h, w) = k_full.dims();
        let mask = make_mask(&cfg.mask, h, w).map_err(in_stage("sampling"))?;
        let y = apply_mask(&k_full, &mask).map_err(in_stage("sampling"))?;
        let est = bootstrap_errors(&y, &mask, &cfg.mask, &cfg.recon, &cfg.bootstrap)
            .map_err(in_stage("bootstrap"))?;
        sweep(&est.image, &cfg.summary.sigma_grid, &cfg.blur).map_err(in_stage("summary"))
    };
    match run() {
        Ok(rows) => {
            #[derive(Serialize)]
            struct SweepReport<'a> {
                config_fingerprint: &'a str,
                rows: &'a [SummaryRow],
            }
            emitter.text("sweep.csv", &rows_to_csv(&rows))?;
            let mut json = serde_json::to_string_pretty(&SweepReport {
                config_fingerprint: &fingerprint,
                rows: &rows,
            })
            .expect("sweep serialization");
            json.push('\n');
            emitter.text("sweep.json", &json)?;
            Ok(rows)
        }
        Err(e) => {
            emitter.cleanup();
            Err(e)
        }
    }
}

/// Which standalone renderings `cmd_viz` emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VizSelection {
    Corrected,
    Overlay,
    Saturate,
    Interpolate,
    Gray,
    Signed,
}

impl VizSelection {
    pub const ALL: [VizSelection; 6] = [
        VizSelection::Corrected,
        VizSelection::Overlay,
        VizSelection::Saturate,
        VizSelection::Interpolate,
        VizSelection::Gray,
        VizSelection::Signed,
    ];
}

/// Re-renders visualizations from a saved reconstruction and estimate
/// without rerunning the solver. An estimate written by the pipeline is
/// decoded through its JSON sidecar; a plain grayscale map is interpreted as
/// a mid-gray-centered display (`d = pixel - 0.5`). An empty selection emits
/// everything.
pub fn cmd_viz(
    recon_path: &Path,
    estimate_path: &Path,
    select: &[VizSelection],
    overlay_cfg: &OverlayConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let recon = load_gray(recon_path)?;
    let d = if estimate_path.with_extension("json").exists() {
        load_estimate(estimate_path)?.image
    } else {
        load_gray(estimate_path)?.map(|v| v - 0.5)
    };
    if recon.dims() != d.dims() {
        return Err(Error::dims("cmd_viz", recon.dims(), d.dims()));
    }
    fs::create_dir_all(out_dir).map_err(|source| Error::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let selected: Vec<VizSelection> = if select.is_empty() {
        VizSelection::ALL.to_vec()
    } else {
        select.to_vec()
    };
    let scale = ErrorScale::from_image(&d);
    let mut written = Vec::new();
    for kind in selected {
        let path = match kind {
            VizSelection::Corrected => {
                let img = corrected(&recon, &d)?;
                let path = out_dir.join("viz_corrected.png");
                save_gray(&img, &path, BitDepth::Sixteen)?;
                path
            }
            VizSelection::Overlay => {
                let img = overlay_threshold(&recon, &d, overlay_cfg)?;
                let path = out_dir.join("viz_overlay.png");
                save_color(&img, &path)?;
                path
            }
            VizSelection::Saturate => {
                let img = saturate_colorize(&recon, &d, &scale)?;
                let path = out_dir.join("viz_saturate.png");
                save_color(&img, &path)?;
                path
            }
            VizSelection::Interpolate => {
                let img = interpolate_colorize(&recon, &d, &scale)?;
                let path = out_dir.join("viz_interpolate.png");
                save_color(&img, &path)?;
                path
            }
            VizSelection::Gray => {
                let img = grayscale_error(&d, &scale);
                let path = out_dir.join("viz_gray.png");
                save_gray(&img, &path, BitDepth::Sixteen)?;
                path
            }
            VizSelection::Signed => {
                let img = signed_colormap(&d, &scale);
                let path = out_dir.join("viz_signed.png");
                save_color(&img, &path)?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

/// Lines of a human-readable sweep table in the three-significant-figure
/// style of the reference tables.
pub fn format_sweep_table(rows: &[SummaryRow]) -> String {
    use bootviz_core::summary::sig3;
    let mut out = String::from("sigma    rss      rms\n");
    for row in rows {
        out.push_str(&format!(
            "{:<8} {:<8} {}\n",
            sig3(row.sigma),
            sig3(row.rss),
            sig3(row.rms)
        ));
    }
    out
}
