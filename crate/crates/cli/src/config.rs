//! Experiment configuration files.
//!
//! A config is TOML (or the JSON manifest a previous run wrote). Only
//! `experiment` and `total_steps` are required; everything else falls back
//! to the chosen preset. The manifest re-emits every resolved value, so
//! feeding it back reproduces the run exactly.

use std::path::Path;

use imba_core::nn::AdamConfig;
use imba_core::parity::{BitEncoding, ParityConfig};
use imba_core::sampler::ScheduleSpec;
use imba_core::trainer::{default_eval_every, DataMode, SamplerMode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// n=50, k=3, T=10, alpha=1.5, batch 10000.
    #[default]
    #[serde(rename = "appendixA")]
    AppendixA,
    /// n=50, k=4, T=5; `parity.zipf_alpha` must be given.
    #[serde(rename = "mainText")]
    MainText,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_tasks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zipf_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zipf_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsets_disjoint: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// On-disk experiment description. Also the `[base]` table of a sweep, in
/// which case `experiment` and `total_steps` may come from the sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_per_task: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler_mode: Option<SamplerMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_encoding: Option<BitEncoding>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hrt_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_stream_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<ParityOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam: Option<AdamOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataMode>,
}

/// A fully resolved single run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub variant: String,
    pub train: TrainConfig,
}

pub const DEFAULT_VARIANT: &str = "default";

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads TOML, or a run manifest when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|ext| ext == "json") {
            serde_json::from_str::<crate::manifest::Manifest>(&text)
                .map(|m| m.config)
                .map_err(|e| CliError::Config(e.to_string()))
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let missing = |field: &str| CliError::Config(format!("missing required field `{field}`"));
        let experiment = self
            .experiment
            .clone()
            .ok_or_else(|| missing("experiment"))?;
        if experiment.is_empty() || experiment.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "field `experiment` must be a non-empty name without path separators, got {experiment:?}"
            )));
        }
        let variant = self
            .variant
            .clone()
            .unwrap_or_else(|| DEFAULT_VARIANT.into());
        if variant.is_empty() || variant.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "invalid variant name {variant:?}"
            )));
        }
        let total_steps = self.total_steps.ok_or_else(|| missing("total_steps"))?;

        let preset = self.preset.unwrap_or_default();
        let overrides = self.parity.clone().unwrap_or_default();
        let mut parity = match preset {
            Preset::AppendixA => ParityConfig::appendix_a(),
            Preset::MainText => {
                let alpha = overrides.zipf_alpha.ok_or_else(|| {
                    CliError::Config("preset `mainText` needs `parity.zipf_alpha`".into())
                })?;
                ParityConfig::main_text(alpha)
            }
        };
        if let Some(v) = overrides.n {
            parity.n = v;
        }
        if let Some(v) = overrides.k {
            parity.k = v;
        }
        if let Some(v) = overrides.num_tasks {
            parity.num_tasks = v;
        }
        if let Some(v) = overrides.zipf_alpha {
            parity.zipf_alpha = v;
        }
        if let Some(v) = overrides.zipf_offset {
            parity.zipf_offset = v;
        }
        if let Some(v) = overrides.subsets_disjoint {
            parity.subsets_disjoint = v;
        }

        let base = TrainConfig::appendix_a();
        let adam_over = self.adam.clone().unwrap_or_default();
        let adam = AdamConfig {
            learning_rate: adam_over.learning_rate.unwrap_or(base.adam.learning_rate),
            beta1: adam_over.beta1.unwrap_or(base.adam.beta1),
            beta2: adam_over.beta2.unwrap_or(base.adam.beta2),
            epsilon: adam_over.epsilon.unwrap_or(base.adam.epsilon),
        };

        let train = TrainConfig {
            total_steps,
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            eval_every: self
                .eval_every
                .unwrap_or_else(|| default_eval_every(total_steps)),
            eval_per_task: self.eval_per_task.unwrap_or(base.eval_per_task),
            sampler_mode: self.sampler_mode.unwrap_or(base.sampler_mode),
            fixed_tau: self.fixed_tau.unwrap_or(base.fixed_tau),
            schedule: self.schedule.unwrap_or(base.schedule),
            parity,
            seed: self.seed.unwrap_or(base.seed),
            eval_stream_id: self.eval_stream_id.unwrap_or(base.eval_stream_id),
            hidden: self.hidden.unwrap_or(base.hidden),
            hidden_layers: self.hidden_layers.unwrap_or(base.hidden_layers),
            adam,
            bit_encoding: self.bit_encoding.unwrap_or(base.bit_encoding),
            hrt_threshold: self.hrt_threshold.unwrap_or(base.hrt_threshold),
            data: self.data.unwrap_or(base.data),
        };
        train
            .validate()
            .map_err(|e| CliError::Config(format!("invalid configuration: {e}")))?;
        Ok(ExperimentConfig {
            experiment,
            variant,
            train,
        })
    }

    /// The explicit form of a resolved config: every field set, no preset.
    pub fn from_resolved(cfg: &ExperimentConfig) -> Self {
        let t = &cfg.train;
        Self {
            experiment: Some(cfg.experiment.clone()),
            variant: Some(cfg.variant.clone()),
            preset: None,
            seed: Some(t.seed),
            total_steps: Some(t.total_steps),
            batch_size: Some(t.batch_size),
            eval_every: Some(t.eval_every),
            eval_per_task: Some(t.eval_per_task),
            sampler_mode: Some(t.sampler_mode),
            fixed_tau: Some(t.fixed_tau),
            schedule: Some(t.schedule),
            hidden: Some(t.hidden),
            hidden_layers: Some(t.hidden_layers),
            bit_encoding: Some(t.bit_encoding),
            hrt_threshold: Some(t.hrt_threshold),
            eval_stream_id: Some(t.eval_stream_id),
            parity: Some(ParityOverrides {
                n: Some(t.parity.n),
                k: Some(t.parity.k),
                num_tasks: Some(t.parity.num_tasks),
                zipf_alpha: Some(t.parity.zipf_alpha),
                zipf_offset: Some(t.parity.zipf_offset),
                subsets_disjoint: Some(t.parity.subsets_disjoint),
            }),
            adam: Some(AdamOverrides {
                learning_rate: Some(t.adam.learning_rate),
                beta1: Some(t.adam.beta1),
                beta2: Some(t.adam.beta2),
                epsilon: Some(t.adam.epsilon),
            }),
            data: Some(t.data),
        }
    }

    /// `other`'s set fields win.
    pub fn overlay(&self, other: &FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                FileConfig { $($f: other.$f.clone().or_else(|| self.$f.clone()),)* }
            };
        }
        let mut merged = pick!(
            experiment,
            variant,
            preset,
            seed,
            total_steps,
            batch_size,
            eval_every,
            eval_per_task,
            sampler_mode,
            fixed_tau,
            schedule,
            hidden,
            hidden_layers,
            bit_encoding,
            hrt_threshold,
            eval_stream_id,
            parity,
            adam,
            data
        );
        if let (Some(a), Some(b)) = (&self.parity, &other.parity) {
            merged.parity = Some(ParityOverrides {
                n: b.n.or(a.n),
                k: b.k.or(a.k),
                num_tasks: b.num_tasks.or(a.num_tasks),
                zipf_alpha: b.zipf_alpha.or(a.zipf_alpha),
                zipf_offset: b.zipf_offset.or(a.zipf_offset),
                subsets_disjoint: b.subsets_disjoint.or(a.subsets_disjoint),
            });
        }
        if let (Some(a), Some(b)) = (&self.adam, &other.adam) {
            merged.adam = Some(AdamOverrides {
                learning_rate: b.learning_rate.or(a.learning_rate),
                beta1: b.beta1.or(a.beta1),
                beta2: b.beta2.or(a.beta2),
                epsilon: b.epsilon.or(a.epsilon),
            });
        }
        merged
    }
}
