//! Per-run metrics CSV.
//!
//! Columns: `step,progress,active_tau,macro_loss,macro_acc,hrt_loss,lrt_loss`,
//! then `task{i}_loss` and `task{i}_acc` for every task, then
//! `train_batch_loss,hrt_acc,lrt_acc,wall_ms`. Floats use Rust's shortest
//! round-trip formatting, so a written file parses back to identical values.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    pub progress: f64,
    pub active_tau: f64,
    pub per_task_loss: Vec<f64>,
    pub per_task_accuracy: Vec<f64>,
    pub macro_loss: f64,
    pub macro_accuracy: f64,
    /// Mean over high-resource tasks; NaN when the group is empty.
    pub hrt_loss: f64,
    pub lrt_loss: f64,
    pub hrt_accuracy: f64,
    pub lrt_accuracy: f64,
    /// Mean minibatch loss over the optimizer steps since the previous
    /// record; NaN for the step-0 record.
    pub train_batch_loss: f64,
    pub wall_ms: u64,
}

pub fn csv_header(num_tasks: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "step",
        "progress",
        "active_tau",
        "macro_loss",
        "macro_acc",
        "hrt_loss",
        "lrt_loss",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((0..num_tasks).map(|t| format!("task{t}_loss")));
    cols.extend((0..num_tasks).map(|t| format!("task{t}_acc")));
    cols.extend(
        ["train_batch_loss", "hrt_acc", "lrt_acc", "wall_ms"]
            .iter()
            .map(|s| s.to_string()),
    );
    cols
}

fn record_fields(r: &MetricsRecord) -> Vec<String> {
    let mut fields = vec![r.step.to_string()];
    fields.extend(
        [
            r.progress,
            r.active_tau,
            r.macro_loss,
            r.macro_accuracy,
            r.hrt_loss,
            r.lrt_loss,
        ]
        .iter()
        .map(f64::to_string),
    );
    fields.extend(r.per_task_loss.iter().map(f64::to_string));
    fields.extend(r.per_task_accuracy.iter().map(f64::to_string));
    fields.extend(
        [r.train_batch_loss, r.hrt_accuracy, r.lrt_accuracy]
            .iter()
            .map(f64::to_string),
    );
    fields.push(r.wall_ms.to_string());
    fields
}

pub fn write_metrics_csv<W: Write>(mut out: W, records: &[MetricsRecord]) -> Result<()> {
    let num_tasks = records.first().map_or(0, |r| r.per_task_loss.len());
    writeln!(out, "{}", csv_header(num_tasks).join(","))?;
    for r in records {
        if r.per_task_loss.len() != num_tasks || r.per_task_accuracy.len() != num_tasks {
            return Err(Error::ShapeMismatch(format!(
                "record at step {} has a different task count",
                r.step
            )));
        }
        writeln!(out, "{}", record_fields(r).join(","))?;
    }
    Ok(())
}

pub fn read_metrics_csv<R: BufRead>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.ok_or(Error::Parse {
        line: 1,
        reason: "empty metrics file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let num_tasks = cols
        .iter()
        .filter(|c| c.ends_with("_loss") && c.starts_with("task"))
        .count();
    if cols != csv_header(num_tasks) {
        return Err(Error::Parse {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let float = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("column {} is not a number: {:?}", cols[i], fields[i]),
            })
        };
        let int = |i: usize| -> Result<u64> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("column {} is not an integer: {:?}", cols[i], fields[i]),
            })
        };
        let t = num_tasks;
        records.push(MetricsRecord {
            step: int(0)?,
            progress: float(1)?,
            active_tau: float(2)?,
            macro_loss: float(3)?,
            macro_accuracy: float(4)?,
            hrt_loss: float(5)?,
            lrt_loss: float(6)?,
            per_task_loss: (7..7 + t).map(float).collect::<Result<_>>()?,
            per_task_accuracy: (7 + t..7 + 2 * t).map(float).collect::<Result<_>>()?,
            train_batch_loss: float(7 + 2 * t)?,
            hrt_accuracy: float(8 + 2 * t)?,
            lrt_accuracy: float(9 + 2 * t)?,
            wall_ms: int(10 + 2 * t)?,
        });
    }
    Ok(records)
}
