//! Schedule-ablation sweeps: variants x seeds, plus a per-variant summary.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use imba_core::sampler::ScheduleSpec;
use imba_core::trainer::{MetricsRecord, SamplerMode};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, FileConfig};
use crate::error::CliError;
use crate::runner::{execute_in, prepare_dir, run_dir};

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub sampler_mode: SamplerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_tau: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub experiment: String,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub base: FileConfig,
    pub variants: Vec<Variant>,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("sweep needs at least one seed".into()));
        }
        if self.variants.is_empty() {
            return Err(CliError::Config("sweep needs at least one variant".into()));
        }
        let mut names = HashSet::new();
        for v in &self.variants {
            if !names.insert(v.name.as_str()) {
                return Err(CliError::Config(format!(
                    "duplicate variant name `{}`",
                    v.name
                )));
            }
            if v.sampler_mode == SamplerMode::Scheduled
                && v.schedule.is_none()
                && self.base.schedule.is_none()
            {
                return Err(CliError::Config(format!(
                    "variant `{}` is scheduled but no schedule is given",
                    v.name
                )));
            }
        }
        // Resolve every run up front so a bad variant fails before any training.
        self.runs(None).map(|_| ())
    }

    /// Every (variant, seed) run in variant-major order. `seed_override`
    /// replaces the seed list with a single seed.
    pub fn runs(&self, seed_override: Option<u64>) -> Result<Vec<ExperimentConfig>, CliError> {
        let seeds = seed_override.map_or_else(|| self.seeds.clone(), |s| vec![s]);
        let mut runs = Vec::with_capacity(self.variants.len() * seeds.len());
        for v in &self.variants {
            for &seed in &seeds {
                let over = FileConfig {
                    experiment: Some(self.experiment.clone()),
                    variant: Some(v.name.clone()),
                    seed: Some(seed),
                    sampler_mode: Some(v.sampler_mode),
                    schedule: v.schedule,
                    fixed_tau: v.fixed_tau,
                    ..FileConfig::default()
                };
                let cfg = self.base.overlay(&over).resolve().map_err(|e| match e {
                    CliError::Config(msg) => {
                        CliError::Config(format!("variant `{}`: {msg}", v.name))
                    }
                    other => other,
                })?;
                runs.push(cfg);
            }
        }
        Ok(runs)
    }
}

/// Result of one run within a sweep.
#[derive(Debug)]
pub struct RunOutcome {
    pub variant: String,
    pub seed: u64,
    pub dir: PathBuf,
    pub result: Result<MetricsRecord, String>,
}

#[derive(Debug)]
pub struct SweepReport {
    pub outcomes: Vec<RunOutcome>,
    pub summary_path: PathBuf,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }
}

/// Runs every variant and seed with `jobs` concurrent runs, then writes
/// `<out>/<experiment>/summary.csv`. Individual run failures are recorded and
/// do not stop the sweep; directory collisions are checked before any run.
pub fn run_sweep(
    spec: &SweepSpec,
    out_root: &Path,
    seed_override: Option<u64>,
    jobs: usize,
    force: bool,
    progress: &(dyn Fn(&RunOutcome) + Sync),
) -> Result<SweepReport, CliError> {
    let runs = spec.runs(seed_override)?;
    for cfg in &runs {
        let dir = run_dir(out_root, cfg);
        if dir.exists() && !force {
            return Err(CliError::Collision(dir));
        }
    }
    for cfg in &runs {
        prepare_dir(&run_dir(out_root, cfg), force)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        runs.par_iter()
            .map(|cfg| {
                let dir = run_dir(out_root, cfg);
                let result = execute_in(cfg, &dir)
                    .map_err(|e| e.to_string())
                    .and_then(|records| records.last().cloned().ok_or_else(|| "no records".into()));
                let outcome = RunOutcome {
                    variant: cfg.variant.clone(),
                    seed: cfg.train.seed,
                    dir,
                    result,
                };
                progress(&outcome);
                outcome
            })
            .collect()
    });

    let summary_path = out_root.join(&spec.experiment).join(SUMMARY_FILE);
    let variants: Vec<String> = spec.variants.iter().map(|v| v.name.clone()).collect();
    write_summary(&summary_path, &variants, &outcomes)?;
    Ok(SweepReport {
        outcomes,
        summary_path,
    })
}

pub fn summary_header() -> Vec<&'static str> {
    let mut cols = vec!["variant", "runs", "failed"];
    for metric in SUMMARY_METRICS {
        cols.push(metric.mean_col);
        cols.push(metric.std_col);
    }
    cols.push("errors");
    cols
}

struct SummaryMetric {
    mean_col: &'static str,
    std_col: &'static str,
    get: fn(&MetricsRecord) -> f64,
}

const SUMMARY_METRICS: [SummaryMetric; 6] = [
    SummaryMetric {
        mean_col: "macro_loss_mean",
        std_col: "macro_loss_std",
        get: |r| r.macro_loss,
    },
    SummaryMetric {
        mean_col: "macro_acc_mean",
        std_col: "macro_acc_std",
        get: |r| r.macro_accuracy,
    },
    SummaryMetric {
        mean_col: "hrt_loss_mean",
        std_col: "hrt_loss_std",
        get: |r| r.hrt_loss,
    },
    SummaryMetric {
        mean_col: "hrt_acc_mean",
        std_col: "hrt_acc_std",
        get: |r| r.hrt_accuracy,
    },
    SummaryMetric {
        mean_col: "lrt_loss_mean",
        std_col: "lrt_loss_std",
        get: |r| r.lrt_loss,
    },
    SummaryMetric {
        mean_col: "lrt_acc_mean",
        std_col: "lrt_acc_std",
        get: |r| r.lrt_accuracy,
    },
];

/// Mean and sample standard deviation (n - 1); NaN where undefined.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Summary rows in the order of `variants`; within a variant, runs are
/// aggregated in the order they appear in `outcomes`.
pub fn write_summary(
    path: &Path,
    variants: &[String],
    outcomes: &[RunOutcome],
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = fs::File::create(path)?;
    writeln!(out, "{}", summary_header().join(","))?;
    for variant in variants {
        let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| &o.variant == variant).collect();
        let finals: Vec<&MetricsRecord> =
            runs.iter().filter_map(|o| o.result.as_ref().ok()).collect();
        let errors: Vec<String> = runs
            .iter()
            .filter_map(|o| {
                o.result
                    .as_ref()
                    .err()
                    .map(|e| format!("seed{}: {e}", o.seed))
            })
            .collect();
        let mut fields = vec![
            variant.clone(),
            runs.len().to_string(),
            errors.len().to_string(),
        ];
        for metric in &SUMMARY_METRICS {
            let values: Vec<f64> = finals.iter().map(|r| (metric.get)(r)).collect();
            let (mean, std) = mean_std(&values);
            fields.push(mean.to_string());
            fields.push(std.to_string());
        }
        fields.push(sanitize(&errors.join("; ")));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn sanitize(text: &str) -> String {
    text.replace([',', '\n', '\r'], " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert!(mean_std(&[4.0]).1.is_nan());
        assert!(mean_std(&[]).0.is_nan());
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = r#"
            experiment = "e"
            seeds = [1]
            [base]
            total_steps = 10
            [[variants]]
            name = "a"
            sampler_mode = "random"
            [[variants]]
            name = "a"
            sampler_mode = "random"
        "#;
        let err = SweepSpec::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn empty_seeds_rejected() {
        let text = "experiment = \"e\"\nseeds = []\n[base]\ntotal_steps = 10\n[[variants]]\nname = \"a\"\nsampler_mode = \"random\"\n";
        assert!(SweepSpec::from_toml(text).is_err());
    }

    #[test]
    fn runs_expand_variants_by_seeds() {
        let text = r#"
            experiment = "e"
            seeds = [1, 2, 3]
            [base]
            total_steps = 10
            [[variants]]
            name = "random"
            sampler_mode = "random"
            [[variants]]
            name = "fixed_tau5"
            sampler_mode = "fixed_temperature"
            fixed_tau = 5.0
            [[variants]]
            name = "cosine_warm"
            sampler_mode = "scheduled"
            schedule = { shape = "cosine", t_start = 1.0, t_end = 5.0 }
        "#;
        let spec = SweepSpec::from_toml(text).unwrap();
        let runs = spec.runs(None).unwrap();
        assert_eq!(runs.len(), 9);
        assert_eq!(runs[3].variant, "fixed_tau5");
        assert_eq!(runs[3].train.fixed_tau, 5.0);
        assert_eq!(runs[5].train.seed, 3);
        assert_eq!(spec.runs(Some(9)).unwrap().len(), 3);
    }
}
