//! Experiment configuration for the `run` subcommand.
//!
//! A config file is a TOML document with one table per pipeline stage. Exactly
//! one of `[input]` (edge-list files on disk) and `[synth]` (generator
//! parameters) must be present; every other table has usable defaults and may
//! be omitted. The file written next to a run's results reloads to an
//! identical experiment.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use csn_core::{
    GridSpec, InfluenceKind, NodeInfluenceConvention, PurifyThresholds, SynthConfig, TanimotoForm,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purify: Option<PurifySection>,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub influence: InfluenceSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub social: PathBuf,
    pub behavior: PathBuf,
}

/// Either a named preset (`epinions`, `friendfeed`) or four explicit
/// thresholds `[min_out, min_in, min_user_items, min_item_users]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurifySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<[usize; 4]>,
}

impl PurifySection {
    pub fn resolve(&self) -> Result<PurifyThresholds> {
        match (&self.preset, &self.thresholds) {
            (Some(_), Some(_)) => bail!("purify: give either a preset or thresholds, not both"),
            (Some(name), None) => preset_thresholds(name),
            (None, Some(t)) => Ok(PurifyThresholds {
                min_out: t[0],
                min_in: t[1],
                min_user_items: t[2],
                min_item_users: t[3],
            }),
            (None, None) => bail!("purify: empty section (set preset or thresholds)"),
        }
    }
}

pub fn preset_thresholds(name: &str) -> Result<PurifyThresholds> {
    match name {
        "epinions" => Ok(PurifyThresholds::epinions()),
        "friendfeed" => Ok(PurifyThresholds::friendfeed()),
        other => bail!("unknown purify preset {other:?} (expected epinions or friendfeed)"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub ratio: f64,
    pub seeds: Vec<u64>,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { ratio: 0.9, seeds: vec![1] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfluenceSection {
    pub kinds: Vec<InfluenceKind>,
    pub c: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub tanimoto: TanimotoForm,
    pub transpose: bool,
}

impl Default for InfluenceSection {
    fn default() -> Self {
        Self {
            kinds: vec![InfluenceKind::Rwr, InfluenceKind::Lin, InfluenceKind::Lout],
            c: csn_core::DEFAULT_DAMPING,
            tol: csn_core::DEFAULT_WALK_TOL,
            max_iters: csn_core::DEFAULT_WALK_MAX_ITERS,
            tanimoto: TanimotoForm::Rooted,
            transpose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub alpha_max: f64,
    pub beta_max: f64,
    pub step: f64,
    pub l: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { alpha_max: 4.0, beta_max: 4.0, step: 0.2, l: vec![10, 20, 50] }
    }
}

impl GridSection {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::lattice(self.alpha_max, self.beta_max, self.step)
            .context("grid: invalid lattice parameters")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Comparison pairs drawn per split for the ranking metric; 0 disables it.
    pub auc_samples: u64,
    pub auc_seed: u64,
    pub strict_mean: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self { auc_samples: csn_core::DEFAULT_AUC_SAMPLES, auc_seed: 0, strict_mean: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub enabled: bool,
    pub bins: usize,
    pub node_influence: NodeInfluenceConvention,
    /// Hybrid exponents and list length used for the recommended-item degree
    /// histogram. The default (0, 1) isolates the influence side.
    pub hist_alpha: f64,
    pub hist_beta: f64,
    pub hist_l: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            enabled: true,
            bins: 20,
            node_influence: NodeInfluenceConvention::ColumnSum,
            hist_alpha: 0.0,
            hist_beta: 1.0,
            hist_l: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.input, &self.synth) {
            (None, None) => bail!("config needs an [input] or [synth] section"),
            (Some(_), Some(_)) => bail!("config has both [input] and [synth]; pick one"),
            _ => {}
        }
        if let Some(purify) = &self.purify {
            purify.resolve()?;
        }
        if self.split.seeds.is_empty() {
            bail!("split: seeds must not be empty");
        }
        if self.influence.kinds.is_empty() {
            bail!("influence: kinds must not be empty");
        }
        if self.grid.l.is_empty() {
            bail!("grid: l must not be empty");
        }
        self.grid.spec()?;
        Ok(())
    }
}
