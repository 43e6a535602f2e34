//! Temperature-shaped task distributions, temperature schedules and
//! inverse-CDF task draws.
//!
//! A task of size `|D_i|` receives probability proportional to
//! `|D_i|^(1/tau)`. `tau = 1` is plain proportional sampling, larger values
//! flatten the distribution towards uniform and smaller values sharpen it
//! towards the largest task.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance used when validating externally supplied probability vectors.
pub const PLAN_SUM_TOLERANCE: f64 = 1e-9;

/// Plan entries below this are treated as exactly zero.
pub const MIN_PLAN_PROB: f64 = 1e-300;

/// Per-task dataset sizes. Always non-empty with every entry at least 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSizes(Vec<u64>);

impl TaskSizes {
    pub fn new(sizes: Vec<u64>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::EmptySizes);
        }
        if let Some(index) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::ZeroSize { index });
        }
        Ok(Self(sizes))
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn num_tasks(&self) -> usize {
        self.0.len()
    }
}

/// Strictly positive, finite sampling temperature.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Temperature(f64);

impl Temperature {
    pub const PROPORTIONAL: Temperature = Temperature(1.0);

    pub fn new(tau: f64) -> Result<Self> {
        if tau.is_finite() && tau > 0.0 {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidTemperature(tau))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleShape {
    Constant,
    Cosine,
    Linear,
    Exponential,
}

impl ScheduleShape {
    pub const ALL: [ScheduleShape; 4] = [
        ScheduleShape::Constant,
        ScheduleShape::Cosine,
        ScheduleShape::Linear,
        ScheduleShape::Exponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScheduleShape::Constant => "constant",
            ScheduleShape::Cosine => "cosine",
            ScheduleShape::Linear => "linear",
            ScheduleShape::Exponential => "exponential",
        }
    }
}

/// Temperature trajectory over normalized training progress.
///
/// Warming (`t_end > t_start`) and decay (`t_end < t_start`) are not separate
/// modes; the direction follows from the endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub shape: ScheduleShape,
    pub t_start: f64,
    pub t_end: f64,
}

impl ScheduleSpec {
    pub fn new(shape: ScheduleShape, t_start: f64, t_end: f64) -> Result<Self> {
        let spec = Self {
            shape,
            t_start,
            t_end,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(tau: f64) -> Result<Self> {
        Self::new(ScheduleShape::Constant, tau, tau)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_start", self.t_start), ("t_end", self.t_end)] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidSchedule(format!(
                    "{name} must be finite and positive, got {t}"
                )));
            }
        }
        if self.shape == ScheduleShape::Constant && self.t_start != self.t_end {
            return Err(Error::InvalidSchedule(format!(
                "constant schedule needs t_start == t_end, got {} and {}",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn is_warming(&self) -> bool {
        self.t_end > self.t_start
    }
}

/// A per-task categorical distribution together with its cumulative table.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl SamplingPlan {
    /// Validates `probs` (non-empty, finite, non-negative, summing to one
    /// within [`PLAN_SUM_TOLERANCE`]). Entries below [`MIN_PLAN_PROB`] are
    /// zeroed and the remainder renormalized.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPlan("no tasks".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPlan(format!(
                "entry {i} is not a finite non-negative number: {}",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PLAN_SUM_TOLERANCE {
            return Err(Error::InvalidPlan(format!("entries sum to {total}, not 1")));
        }
        let mut clamped = false;
        for p in probs.iter_mut() {
            if *p > 0.0 && *p < MIN_PLAN_PROB {
                *p = 0.0;
                clamped = true;
            }
        }
        if clamped {
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let cdf = cumulative(&probs);
        Ok(Self { probs, cdf })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn num_tasks(&self) -> usize {
        self.probs.len()
    }

    /// Index whose half-open interval `[cdf[i-1], cdf[i])` contains `u`.
    /// A draw landing exactly on a boundary selects the higher index.
    #[inline]
    pub fn index_for(&self, u: f64) -> usize {
        self.cdf.partition_point(|&c| c <= u)
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Pin the top of the table to exactly 1 from the last non-zero entry on,
    // so a uniform draw in [0, 1) can never fall off the end or land on a
    // trailing zero-probability task.
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1);
    cdf[last..].iter_mut().for_each(|c| *c = 1.0);
    cdf
}

/// `p_i = |D_i|^(1/tau) / sum_j |D_j|^(1/tau)`, evaluated as a softmax over
/// `ln |D_i| / tau` with the maximum subtracted.
pub fn temperature_distribution(sizes: &TaskSizes, tau: Temperature) -> SamplingPlan {
    let inv_tau = 1.0 / tau.value();
    let scaled: Vec<f64> = sizes
        .as_slice()
        .iter()
        .map(|&s| (s as f64).ln() * inv_tau)
        .collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probs = weights.into_iter().map(|w| w / total).collect();
    // Sizes >= 1 keep every weight in (0, 1] with the max at exactly 1, so
    // the result always passes validation.
    SamplingPlan::new(probs).expect("softmax output is a valid plan")
}

/// Checked variant taking raw inputs.
pub fn temperature_distribution_raw(sizes: &[u64], tau: f64) -> Result<SamplingPlan> {
    let sizes = TaskSizes::new(sizes.to_vec())?;
    let tau = Temperature::new(tau)?;
    Ok(temperature_distribution(&sizes, tau))
}

/// Temperature at normalized progress `t` in `[0, 1]`.
pub fn schedule_temperature(spec: &ScheduleSpec, progress: f64) -> Result<Temperature> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&progress) {
        return Err(Error::InvalidProgress(progress));
    }
    let (start, end) = (spec.t_start, spec.t_end);
    let tau = if progress == 0.0 {
        start
    } else if progress == 1.0 {
        end
    } else {
        match spec.shape {
            ScheduleShape::Constant => start,
            ScheduleShape::Cosine => start + (end - start) * (1.0 - (PI * progress).cos()) / 2.0,
            ScheduleShape::Linear => start + (end - start) * progress,
            ScheduleShape::Exponential => start * (end / start).powf(progress),
        }
    };
    Temperature::new(tau)
}

pub fn draw_task(plan: &SamplingPlan, rng: &mut RngStream) -> usize {
    plan.index_for(rng.uniform())
}

pub fn draw_batch_tasks(
    plan: &SamplingPlan,
    batch_size: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    if batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok((0..batch_size).map(|_| draw_task(plan, rng)).collect())
}
