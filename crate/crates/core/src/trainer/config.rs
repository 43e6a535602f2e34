use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, Architecture};
use crate::parity::{BitEncoding, ParityConfig};
use crate::rng::streams;
use crate::sampler::{ScheduleShape, ScheduleSpec};

/// How the batch composition is chosen at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Proportional to the task prior (temperature 1).
    Random,
    /// A constant temperature `fixed_tau`.
    FixedTemperature,
    /// Temperature follows `schedule` over training progress.
    Scheduled,
}

impl SamplerMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplerMode::Random => "random",
            SamplerMode::FixedTemperature => "fixed_temperature",
            SamplerMode::Scheduled => "scheduled",
        }
    }
}

/// Where training examples come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataMode {
    /// Fresh uniformly random inputs for every draw.
    #[default]
    Streaming,
    /// A fixed pool of `pool_size` examples per task, generated once; each
    /// draw picks a pool entry of the sampled task uniformly at random.
    FixedPool { pool_size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of optimizer steps. Zero evaluates the initial model only.
    pub total_steps: u64,
    pub batch_size: usize,
    pub eval_every: u64,
    /// Balanced evaluation examples per task.
    pub eval_per_task: usize,
    pub sampler_mode: SamplerMode,
    /// Temperature used when `sampler_mode` is `fixed_temperature`.
    pub fixed_tau: f64,
    /// Temperature trajectory used when `sampler_mode` is `scheduled`.
    pub schedule: ScheduleSpec,
    pub parity: ParityConfig,
    pub seed: u64,
    /// Stream id of the evaluation-set generator.
    pub eval_stream_id: u64,
    pub hidden: usize,
    pub hidden_layers: usize,
    pub adam: AdamConfig,
    pub bit_encoding: BitEncoding,
    /// Tasks whose prior is at least this fraction of the largest prior are
    /// high-resource.
    pub hrt_threshold: f64,
    pub data: DataMode,
}

impl TrainConfig {
    /// The `appendixA` preset at full scale: 250k steps of batch 10k, evaluated on 1k
    /// examples per task, cosine warming from 1 to 5.
    pub fn appendix_a() -> Self {
        Self {
            total_steps: 250_000,
            batch_size: 10_000,
            eval_every: 2_500,
            eval_per_task: 1_000,
            sampler_mode: SamplerMode::Scheduled,
            fixed_tau: 5.0,
            schedule: ScheduleSpec {
                shape: ScheduleShape::Cosine,
                t_start: 1.0,
                t_end: 5.0,
            },
            parity: ParityConfig::appendix_a(),
            seed: 0,
            eval_stream_id: streams::EVAL,
            hidden: 100,
            hidden_layers: 1,
            adam: AdamConfig::default(),
            bit_encoding: BitEncoding::ZeroOne,
            hrt_threshold: 0.5,
            data: DataMode::Streaming,
        }
    }

    /// The `appendixA` preset with a new step budget and batch size; evaluation runs
    /// every `total_steps / 100` steps.
    pub fn scaled(total_steps: u64, batch_size: usize) -> Self {
        Self {
            total_steps,
            batch_size,
            eval_every: default_eval_every(total_steps),
            ..Self::appendix_a()
        }
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.parity.input_dim(),
            hidden: self.hidden,
            hidden_layers: self.hidden_layers,
            out: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTrainConfig(msg));
        self.parity.validate()?;
        self.schedule.validate()?;
        self.adam.validate()?;
        self.architecture().validate()?;
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1".into());
        }
        if self.total_steps > 0 && self.eval_every > self.total_steps {
            return bad(format!(
                "eval_every={} exceeds total_steps={}",
                self.eval_every, self.total_steps
            ));
        }
        if self.eval_per_task == 0 {
            return bad("eval_per_task must be at least 1".into());
        }
        if !(self.fixed_tau.is_finite() && self.fixed_tau > 0.0) {
            return bad(format!(
                "fixed_tau must be positive, got {}",
                self.fixed_tau
            ));
        }
        if !(self.hrt_threshold > 0.0 && self.hrt_threshold < 1.0) {
            return bad(format!(
                "hrt_threshold must lie in (0, 1), got {}",
                self.hrt_threshold
            ));
        }
        if let DataMode::FixedPool { pool_size: 0 } = self.data {
            return bad("pool_size must be at least 1".into());
        }
        Ok(())
    }

    /// Steps at which a metrics record is emitted: 0, every `eval_every`,
    /// and always the final step.
    pub fn eval_steps(&self) -> Vec<u64> {
        let mut steps: Vec<u64> = (0..=self.total_steps)
            .step_by(self.eval_every as usize)
            .collect();
        if *steps.last().expect("contains 0") != self.total_steps {
            steps.push(self.total_steps);
        }
        steps
    }
}

/// One hundred evaluation points per run, at least one step apart.
pub fn default_eval_every(total_steps: u64) -> u64 {
    (total_steps / 100).max(1)
}
