//! Config-driven experiments: each run yields a verdict file and CSV artifacts.

mod anneal;
pub mod config;
mod mean;
mod spectrum;
pub mod verdict;

use std::fs;
use std::path::Path;
use std::time::Instant;

pub use anneal::checkpoint_times;
pub use config::{Analysis, ExperimentConfig, ExperimentKind, PotentialSpec, ScheduleSpec, Thresholds, Validation};
pub use verdict::{config_hash, Criterion, VerdictFile, TOOL_NAME, TOOL_VERSION};

use crate::error::{Error, Result};
use crate::table::CsvTable;

pub type Artifact = (String, CsvTable);

pub const VERDICT_FILE: &str = "verdict.json";

/// Criterion ids each experiment reports, in order.
pub fn criterion_ids(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::AnnealToPi0 => &["basin_masses", "occupation_tv", "pinsker", "blow_up"],
        ExperimentKind::FreezeSubcritical => &["frozen_mass", "blow_up"],
        ExperimentKind::ConstantGMean => &["mean_dichotomy", "coupled_gap", "blow_up"],
        ExperimentKind::LandscapeSpectrum => &[
            "height_refinement",
            "height_bound",
            "spectrum_ground_state",
            "gap_exponent_monotone",
            "gap_exponent_final",
        ],
        ExperimentKind::FreeEnergyDecay => &["entropy_decrease", "blow_up"],
    }
}

fn blow_up_criterion(blown: usize, paths: usize, max_fraction: f64) -> Criterion {
    let fraction = blown as f64 / paths.max(1) as f64;
    Criterion::new(
        "blow_up",
        fraction <= max_fraction,
        format!("{blown} of {paths} paths left the ball of radius 1e6 or became non-finite"),
    )
    .with("blown_up", blown)
    .with("fraction", fraction)
    .with("threshold", max_fraction)
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub verdict: VerdictFile,
    pub artifacts: Vec<Artifact>,
}

impl ExperimentOutput {
    /// Writes every artifact and `verdict.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, table) in &self.artifacts {
            table.write(&dir.join(name))?;
        }
        fs::write(dir.join(VERDICT_FILE), serde_json::to_string_pretty(&self.verdict)? + "\n")?;
        Ok(())
    }
}

/// Validates, then runs the pipeline. No file I/O.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let validation = config.validate();
    if !validation.is_ok() {
        return Err(Error::Config(validation.errors.join("; ")));
    }
    let start = Instant::now();
    let (criteria, artifacts) = match config.experiment {
        ExperimentKind::AnnealToPi0 => anneal::anneal_to_pi0(config)?,
        ExperimentKind::FreezeSubcritical => anneal::freeze_subcritical(config)?,
        ExperimentKind::FreeEnergyDecay => anneal::free_energy_decay(config)?,
        ExperimentKind::ConstantGMean => mean::constant_g_mean(config)?,
        ExperimentKind::LandscapeSpectrum => spectrum::landscape_spectrum(config)?,
    };
    let ids: Vec<&str> = criteria.iter().map(|c| c.id.as_str()).collect();
    if ids != criterion_ids(config.experiment) {
        return Err(Error::Internal(format!("criterion ids {ids:?} do not match the verdict schema")));
    }
    let verdict = VerdictFile {
        experiment: config.experiment.as_str().into(),
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        config_hash: config_hash(config),
        seed: config.seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
        warnings: validation.warnings,
        artifacts: artifacts.iter().map(|(n, _)| n.clone()).collect(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { verdict, artifacts })
}
