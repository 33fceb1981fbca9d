//! The end-to-end chain behind the `crashlab` CLI: sample a design of
//! experiments, gate it through forming, simulate (or evaluate the reference
//! equations), assemble the dataset, tune and train tree ensembles, search
//! for closed-form laws, and render the report.
//!
//! Every stage writes plain files under the output directory and the next one
//! reads them back, so any stage can be rerun alone. Reals in CSVs carry a
//! fixed number of significant digits and parallel work is collected in
//! sample order, so a config yields the same bytes on any worker count.

pub mod config;
pub mod data;
mod error;
pub mod manifest;
pub mod plot;
pub mod stages;

pub use config::{DataSource, ModelKind, RunConfig};
pub use data::{SimRecord, Target};
pub use error::{PipelineError, Result};
pub use manifest::{Manifest, ManifestEntry};
pub use stages::{with_workers, Pipeline, RunArtifacts, Stage, StageOutcome};

/// Runs every stage of `cfg` on its configured worker count.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunArtifacts> {
    let pipeline = Pipeline::new(cfg.clone())?;
    with_workers(cfg.workers, || pipeline.run_all())?
}

/// Renders plots from a finished run's files.
pub fn emit_report(cfg: &RunConfig) -> Result<Vec<std::path::PathBuf>> {
    let pipeline = Pipeline::new(cfg.clone())?;
    let outcome = with_workers(cfg.workers, || pipeline.run_stage(Stage::Report))??;
    pipeline.write_manifest()?;
    Ok(outcome.outputs.iter().map(|p| pipeline.out().join(p)).collect())
}
