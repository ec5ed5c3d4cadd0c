//! Declarative pipeline configuration: a single TOML file (every field
//! optional, with documented defaults) plus flag overrides in the binary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use bootviz_core::bootstrap::BootstrapConfig;
use bootviz_core::recon::ReconConfig;
use bootviz_core::sampling::{MaskKind, MaskSpec};
use bootviz_core::summary::{BlurConfig, DEFAULT_SIGMA_GRID};
use bootviz_core::viz::OverlayConfig;
use bootviz_core::{Error, Result};

/// Where the measurements come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSpec {
    /// Built-in Shepp-Logan phantom (ground truth available).
    Phantom { size: usize },
    /// Grayscale PNG or PGM treated as ground truth.
    Image { path: PathBuf },
    /// Raw k-space dump (`KSP1`); no ground truth, so true-error outputs
    /// are omitted.
    Kspace { path: PathBuf },
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::Phantom { size: 128 }
    }
}

/// Overlay options; the percentile defaults per mask kind when unset
/// (2% horizontal, 1% radial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OverlayOptions {
    pub percentile: Option<f64>,
    /// Sigma for the blurred-overlay variant that is emitted alongside the
    /// plain one.
    pub pre_blur_sigma: f64,
}

impl Default for OverlayOptions {
    fn default() -> Self {
        Self {
            percentile: None,
            pre_blur_sigma: 1.0,
        }
    }
}

impl OverlayOptions {
    pub fn percentile_for(&self, kind: MaskKind) -> f64 {
        self.percentile.unwrap_or(match kind {
            MaskKind::Radial => 1.0,
            _ => 2.0,
        })
    }

    /// The (unblurred, blurred) overlay configurations for a mask kind.
    pub fn resolve(&self, kind: MaskKind) -> (OverlayConfig, OverlayConfig) {
        let percentile = self.percentile_for(kind);
        (
            OverlayConfig {
                percentile,
                pre_blur_sigma: 0.0,
            },
            OverlayConfig {
                percentile,
                pre_blur_sigma: self.pre_blur_sigma,
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryOptions {
    pub sigma_grid: Vec<f64>,
    /// When set, the run is flagged if the rss of the estimate blurred at
    /// the report sigma (`blur.sigma`) strictly exceeds this value, and the
    /// process exits with status 2.
    pub flag_threshold: Option<f64>,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            flag_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputOptions {
    pub dir: PathBuf,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

fn default_mask() -> MaskSpec {
    MaskSpec::Horizontal {
        retained_fraction: 0.25,
        center_fraction: 0.08,
        seed: 7,
    }
}

/// Everything a run needs. TOML sections mirror the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputSpec,
    pub mask: MaskSpec,
    pub recon: ReconConfig,
    pub bootstrap: BootstrapConfig,
    pub overlay: OverlayOptions,
    pub blur: BlurConfig,
    pub summary: SummaryOptions,
    pub output: OutputOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: InputSpec::default(),
            mask: default_mask(),
            recon: ReconConfig::default(),
            bootstrap: BootstrapConfig::default(),
            overlay: OverlayOptions::default(),
            blur: BlurConfig::default(),
            summary: SummaryOptions::default(),
            output: OutputOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if let InputSpec::Phantom { size } = self.input {
            if size < 16 {
                return Err(Error::InvalidConfig(format!(
                    "phantom size must be at least 16, got {size}"
                )));
            }
        }
        self.recon.validate()?;
        self.bootstrap.validate()?;
        self.blur.validate()?;
        if let Some(p) = self.overlay.percentile {
            if !(p > 0.0 && p < 100.0) {
                return Err(Error::InvalidConfig(format!(
                    "overlay percentile must be in (0, 100), got {p}"
                )));
            }
        }
        if self.overlay.pre_blur_sigma < 0.0 {
            return Err(Error::InvalidConfig(
                "overlay pre_blur_sigma must be nonnegative".into(),
            ));
        }
        if self.summary.sigma_grid.is_empty() {
            return Err(Error::InvalidConfig("sigma_grid must be nonempty".into()));
        }
        if self.summary.sigma_grid.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(Error::InvalidConfig(
                "sigma_grid entries must be nonnegative".into(),
            ));
        }
        if let Some(t) = self.summary.flag_threshold {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "flag_threshold must be positive, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Content hash of the run configuration. Excludes the output directory
    /// and replaces input paths with a digest of the file contents, so the
    /// fingerprint (and with it the manifest) is identical wherever the run
    /// is executed.
    pub fn fingerprint(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Canonical<'a> {
            input: String,
            mask: &'a MaskSpec,
            recon: &'a ReconConfig,
            bootstrap: &'a BootstrapConfig,
            overlay: &'a OverlayOptions,
            blur: &'a BlurConfig,
            summary: &'a SummaryOptions,
        }
        let input = match &self.input {
            InputSpec::Phantom { size } => format!("phantom:{size}"),
            InputSpec::Image { path } => format!("image:{}", file_digest(path)?),
            InputSpec::Kspace { path } => format!("kspace:{}", file_digest(path)?),
        };
        let json = serde_json::to_string(&Canonical {
            input,
            mask: &self.mask,
            recon: &self.recon,
            bootstrap: &self.bootstrap,
            overlay: &self.overlay,
            blur: &self.blur,
            summary: &self.summary,
        })
        .expect("config serialization cannot fail");
        let digest = Sha256::digest(json.as_bytes());
        Ok(format!("sha256:{digest:x}"))
    }
}

pub(crate) fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.summary.sigma_grid.len(), 9);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let text = r#"
            [input]
            kind = "phantom"
            size = 64

            [mask]
            kind = "radial"
            num_spokes = 40

            [bootstrap]
            iterations = 25
        "#;
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.input, InputSpec::Phantom { size: 64 });
        assert_eq!(cfg.mask, MaskSpec::Radial { num_spokes: 40 });
        assert_eq!(cfg.bootstrap.iterations, 25);
        assert_eq!(cfg.recon.iterations, 200);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("[recont]\nlambda = 1.0").is_err());
    }

    #[test]
    fn percentile_defaults_by_kind() {
        let opts = OverlayOptions::default();
        assert_eq!(opts.percentile_for(MaskKind::Horizontal), 2.0);
        assert_eq!(opts.percentile_for(MaskKind::Radial), 1.0);
        assert_eq!(opts.percentile_for(MaskKind::Full), 2.0);
        let fixed = OverlayOptions {
            percentile: Some(5.0),
            ..Default::default()
        };
        assert_eq!(fixed.percentile_for(MaskKind::Radial), 5.0);
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.output.dir = PathBuf::from("/somewhere/else");
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        let mut c = a.clone();
        c.bootstrap.seed = 123;
        assert_ne!(a.fingerprint().unwrap(), c.fingerprint().unwrap());
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut cfg = PipelineConfig::default();
        cfg.summary.sigma_grid = vec![];
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.summary.flag_threshold = Some(0.0);
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.overlay.percentile = Some(100.0);
        assert!(cfg.validate().is_err());

        let cfg = PipelineConfig {
            input: InputSpec::Phantom { size: 8 },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
