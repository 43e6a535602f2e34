use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use imba_core::trainer::{train, write_metrics_csv, MetricsRecord};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::Manifest;

pub const METRICS_FILE: &str = "metrics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// `<root>/<experiment>/<variant>/seed<k>`
pub fn run_dir(out_root: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out_root
        .join(&cfg.experiment)
        .join(&cfg.variant)
        .join(format!("seed{}", cfg.train.seed))
}

/// Claims the run directory, refusing to reuse one unless `force` is set.
pub fn prepare_dir(dir: &Path, force: bool) -> Result<(), CliError> {
    if dir.exists() {
        if !force {
            return Err(CliError::Collision(dir.to_path_buf()));
        }
        fs::remove_dir_all(dir)?;
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Trains one configuration and writes `manifest.json` and `metrics.csv`
/// into its run directory. Returns the directory and the records.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_root: &Path,
    force: bool,
) -> Result<(PathBuf, Vec<MetricsRecord>), CliError> {
    let dir = run_dir(out_root, cfg);
    prepare_dir(&dir, force)?;
    execute_in(cfg, &dir).map(|records| (dir, records))
}

/// Runs into an already prepared directory.
pub fn execute_in(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<MetricsRecord>, CliError> {
    let manifest = Manifest::for_run(cfg);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")?;

    let report = match train(&cfg.train) {
        Ok(report) => report,
        Err(err) => {
            fs::write(dir.join("error.txt"), format!("{err}\n"))?;
            return Err(CliError::Runtime(format!(
                "{}/{} seed {}: {err}",
                cfg.experiment, cfg.variant, cfg.train.seed
            )));
        }
    };
    let file = fs::File::create(dir.join(METRICS_FILE))?;
    write_metrics_csv(BufWriter::new(file), &report.records)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(report.records)
}
