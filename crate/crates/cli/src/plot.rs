//! Long-format plot data assembled from run directories.

use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::error::CliError;
use crate::manifest::Manifest;
use crate::runner::{MANIFEST_FILE, METRICS_FILE};

struct RunTable {
    dir: PathBuf,
    variant: String,
    seed: u64,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl RunTable {
    fn load(dir: &Path) -> Result<Self, CliError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest: Manifest = serde_json::from_str(
            &fs::read_to_string(&manifest_path)
                .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?,
        )
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
        let metrics_path = dir.join(METRICS_FILE);
        let text = fs::read_to_string(&metrics_path)
            .map_err(|e| CliError::Config(format!("{}: {e}", metrics_path.display())))?;
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Config(format!("{} is empty", metrics_path.display())))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows: Vec<Vec<String>> = lines
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        if let Some(bad) = rows.iter().position(|r| r.len() != header.len()) {
            return Err(CliError::Config(format!(
                "{} line {} has {} fields, header has {}",
                metrics_path.display(),
                bad + 2,
                rows[bad].len(),
                header.len()
            )));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            variant: manifest.variant,
            seed: manifest.seed,
            header,
            rows,
        })
    }

    fn steps(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r[0].as_str()).collect()
    }
}

/// Run directories under each path (a path may itself be a run directory).
pub fn discover_runs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut dirs = Vec::new();
    for path in paths {
        if path.join(METRICS_FILE).is_file() {
            dirs.push(path.clone());
            continue;
        }
        if !path.is_dir() {
            return Err(CliError::Config(format!(
                "{} is not a directory",
                path.display()
            )));
        }
        let mut found: Vec<PathBuf> = WalkDir::new(path)
            .sort_by_file_name()
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file() && e.file_name() == METRICS_FILE)
            .filter_map(|e| e.path().parent().map(Path::to_path_buf))
            .collect();
        dirs.append(&mut found);
    }
    if dirs.is_empty() {
        return Err(CliError::Config(
            "no metrics.csv found under the given paths".into(),
        ));
    }
    Ok(dirs)
}

/// `variant,seed,step,value` rows for `metric`, copying values verbatim from
/// each run's metrics file. All runs must share the header and step cadence.
pub fn emit_plot_data(run_dirs: &[PathBuf], metric: &str) -> Result<String, CliError> {
    let tables = run_dirs
        .iter()
        .map(|d| RunTable::load(d))
        .collect::<Result<Vec<_>, _>>()?;
    let first = tables
        .first()
        .ok_or_else(|| CliError::Config("no runs given".into()))?;
    let column = first
        .header
        .iter()
        .position(|c| c == metric)
        .ok_or_else(|| {
            CliError::Config(format!(
                "unknown metric `{metric}`; available columns: {}",
                first.header.join(", ")
            ))
        })?;

    let reference_steps = first.steps();
    let offending: Vec<String> = tables
        .iter()
        .filter(|t| t.header != first.header || t.steps() != reference_steps)
        .map(|t| t.dir.display().to_string())
        .collect();
    if !offending.is_empty() {
        return Err(CliError::Config(format!(
            "runs do not share the task count and evaluation cadence of {}: {}",
            first.dir.display(),
            offending.join(", ")
        )));
    }

    let mut out = String::from("variant,seed,step,value\n");
    for t in &tables {
        for row in &t.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.variant, t.seed, row[0], row[column]
            ));
        }
    }
    Ok(out)
}
