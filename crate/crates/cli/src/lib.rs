//! Library backing the `bootviz` binary: declarative pipeline configuration,
//! run manifests with checksums, and the orchestration that turns a phantom
//! or input file into the full set of figures, sweeps, and reports.

pub mod config;
pub mod manifest;
pub mod pipeline;

pub use config::{InputSpec, OutputOptions, OverlayOptions, PipelineConfig, SummaryOptions};
pub use manifest::{ArtifactEntry, RunManifest};
pub use pipeline::{cmd_pipeline, cmd_sweep, cmd_viz, VizSelection};
