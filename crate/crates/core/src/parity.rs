//! Multi-task sparse parity benchmark.
//!
//! Each task owns a subset of `k` bit positions in an `n`-bit input and its
//! label is the XOR of those bits. Examples carry a one-hot task identifier
//! appended after the data bits, so the network input has width `n + T`.
//! Task frequencies follow a Zipf law over task rank, with task 0 the most
//! frequent.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::{draw_task, SamplingPlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityConfig {
    /// Data bits per input.
    pub n: usize,
    /// Relevant bits per task.
    pub k: usize,
    pub num_tasks: usize,
    pub zipf_alpha: f64,
    /// Rank shift of the power law, `P(t) ∝ (t + offset)^-alpha`. Zero gives
    /// the plain Zipf law; non-zero values are an unverified second
    /// parameter of the task-frequency law.
    #[serde(default)]
    pub zipf_offset: f64,
    pub subsets_disjoint: bool,
}

impl ParityConfig {
    /// n=50, k=3, T=10, alpha=1.5, disjoint subsets.
    pub fn appendix_a() -> Self {
        Self {
            n: 50,
            k: 3,
            num_tasks: 10,
            zipf_alpha: 1.5,
            zipf_offset: 0.0,
            subsets_disjoint: true,
        }
    }

    /// n=50, k=4, T=5 with a caller-chosen exponent.
    pub fn main_text(zipf_alpha: f64) -> Self {
        Self {
            n: 50,
            k: 4,
            num_tasks: 5,
            zipf_alpha,
            zipf_offset: 0.0,
            subsets_disjoint: true,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n + self.num_tasks
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParityConfig(msg));
        if self.n == 0 || self.k == 0 || self.num_tasks == 0 {
            return bad("n, k and num_tasks must all be at least 1".into());
        }
        if self.k > self.n {
            return bad(format!("k={} exceeds n={}", self.k, self.n));
        }
        if !(self.zipf_alpha.is_finite() && self.zipf_alpha > 0.0) {
            return bad(format!(
                "zipf_alpha must be positive, got {}",
                self.zipf_alpha
            ));
        }
        if !(self.zipf_offset.is_finite() && self.zipf_offset > -1.0) {
            return bad(format!(
                "zipf_offset must exceed -1, got {}",
                self.zipf_offset
            ));
        }
        if self.subsets_disjoint {
            if self.num_tasks * self.k > self.n {
                return bad(format!(
                    "{} disjoint subsets of size {} need at least {} bits, have {}",
                    self.num_tasks,
                    self.k,
                    self.num_tasks * self.k,
                    self.n
                ));
            }
        } else if (binomial(self.n, self.k) as u128) < self.num_tasks as u128 {
            return bad(format!(
                "only {} distinct {}-subsets of {} bits exist, need {}",
                binomial(self.n, self.k),
                self.k,
                self.n,
                self.num_tasks
            ));
        }
        Ok(())
    }
}

/// `n choose k`, saturating at `u64::MAX`.
fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: usize,
    /// Strictly increasing positions in `[0, n)`.
    pub bit_indices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityExample {
    /// `n` data bits followed by `T` one-hot task bits, each 0 or 1.
    pub input: Vec<u8>,
    pub label: u8,
    pub task_id: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZipfPrior {
    probs: Vec<f64>,
}

impl ZipfPrior {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_tasks(&self) -> usize {
        self.probs.len()
    }

    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan::new(self.probs.clone()).expect("zipf prior is normalized")
    }
}

/// How bits are presented to the network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitEncoding {
    /// 0 -> 0.0, 1 -> 1.0
    #[default]
    ZeroOne,
    /// 0 -> -1.0, 1 -> +1.0 on the data bits; the task one-hot stays 0/1.
    PlusMinusOne,
}

impl BitEncoding {
    #[inline]
    pub fn data_value(self, bit: u8) -> f64 {
        match (self, bit) {
            (BitEncoding::ZeroOne, 0) => 0.0,
            (BitEncoding::ZeroOne, _) => 1.0,
            (BitEncoding::PlusMinusOne, 0) => -1.0,
            (BitEncoding::PlusMinusOne, _) => 1.0,
        }
    }
}

pub fn generate_tasks(cfg: &ParityConfig, rng: &mut RngStream) -> Result<Vec<TaskSpec>> {
    cfg.validate()?;
    let mut tasks = Vec::with_capacity(cfg.num_tasks);
    if cfg.subsets_disjoint {
        let mut positions: Vec<usize> = (0..cfg.n).collect();
        rng.shuffle(&mut positions);
        for (task_id, chunk) in positions.chunks(cfg.k).take(cfg.num_tasks).enumerate() {
            let mut bit_indices = chunk.to_vec();
            bit_indices.sort_unstable();
            tasks.push(TaskSpec {
                task_id,
                bit_indices,
            });
        }
    } else {
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut positions: Vec<usize> = (0..cfg.n).collect();
        while tasks.len() < cfg.num_tasks {
            // Partial Fisher-Yates: the first k slots become the subset.
            for i in 0..cfg.k {
                let j = i + rng.below((cfg.n - i) as u64) as usize;
                positions.swap(i, j);
            }
            let mut bit_indices = positions[..cfg.k].to_vec();
            bit_indices.sort_unstable();
            if seen.insert(bit_indices.clone()) {
                tasks.push(TaskSpec {
                    task_id: tasks.len(),
                    bit_indices,
                });
            }
        }
    }
    Ok(tasks)
}

/// `P(t) = t^-alpha / sum_{i=1..T} i^-alpha` over 1-indexed ranks; entry 0 is rank 1.
pub fn zipf_prior(num_tasks: usize, alpha: f64) -> Result<ZipfPrior> {
    zipf_prior_with_offset(num_tasks, alpha, 0.0)
}

pub fn zipf_prior_with_offset(num_tasks: usize, alpha: f64, offset: f64) -> Result<ZipfPrior> {
    if num_tasks == 0 {
        return Err(Error::InvalidParityConfig(
            "num_tasks must be at least 1".into(),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidZipfAlpha(alpha));
    }
    if !(offset.is_finite() && offset > -1.0) {
        return Err(Error::InvalidParityConfig(format!(
            "zipf offset must exceed -1, got {offset}"
        )));
    }
    let weights: Vec<f64> = (1..=num_tasks)
        .map(|rank| (rank as f64 + offset).powf(-alpha))
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(ZipfPrior {
        probs: weights.into_iter().map(|w| w / total).collect(),
    })
}

pub fn parity_oracle(input: &[u8], spec: &TaskSpec) -> Result<u8> {
    spec.bit_indices.iter().try_fold(0u8, |acc, &i| {
        input
            .get(i)
            .map(|&b| acc ^ (b & 1))
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: input.len(),
            })
    })
}

/// One example for a fixed task: `n` fresh data bits, the one-hot id, and the
/// parity label.
pub fn example_for_task(
    tasks: &[TaskSpec],
    n: usize,
    task_id: usize,
    rng: &mut RngStream,
) -> ParityExample {
    let num_tasks = tasks.len();
    let mut input = vec![0u8; n + num_tasks];
    rng.fill_bits(&mut input[..n]);
    input[n + task_id] = 1;
    let label = tasks[task_id]
        .bit_indices
        .iter()
        .fold(0u8, |acc, &i| acc ^ input[i]);
    ParityExample {
        input,
        label,
        task_id,
    }
}

/// Draws the task from `plan`, then the data bits, from the same stream.
pub fn sample_example(
    tasks: &[TaskSpec],
    n: usize,
    plan: &SamplingPlan,
    rng: &mut RngStream,
) -> Result<ParityExample> {
    if plan.num_tasks() != tasks.len() {
        return Err(Error::InvalidPlan(format!(
            "plan covers {} tasks, benchmark has {}",
            plan.num_tasks(),
            tasks.len()
        )));
    }
    let task_id = draw_task(plan, rng);
    Ok(example_for_task(tasks, n, task_id, rng))
}

/// `per_task` examples for each task in task order.
pub fn balanced_eval_set(
    tasks: &[TaskSpec],
    n: usize,
    per_task: usize,
    rng: &mut RngStream,
) -> Result<Vec<ParityExample>> {
    if per_task == 0 {
        return Err(Error::InvalidParityConfig(
            "per_task must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(per_task * tasks.len());
    for task in tasks {
        for _ in 0..per_task {
            out.push(example_for_task(tasks, n, task.task_id, rng));
        }
    }
    Ok(out)
}

/// Writes `task_id,label,bitstring` records, one per line.
pub fn write_dump<W: Write>(mut out: W, examples: &[ParityExample]) -> Result<()> {
    for ex in examples {
        let bits: String = ex
            .input
            .iter()
            .map(|&b| if b == 0 { '0' } else { '1' })
            .collect();
        writeln!(out, "{},{},{}", ex.task_id, ex.label, bits)?;
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(input: R) -> Result<Vec<ParityExample>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let err = |reason: &str| Error::Parse {
            line: lineno,
            reason: reason.to_string(),
        };
        let mut fields = line.split(',');
        let (Some(task), Some(label), Some(bits), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(err("expected exactly three comma-separated fields"));
        };
        let task_id: usize = task.parse().map_err(|_| err("bad task_id"))?;
        let label = match label {
            "0" => 0,
            "1" => 1,
            _ => return Err(err("label must be 0 or 1")),
        };
        let input = bits
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0u8),
                b'1' => Ok(1u8),
                _ => Err(err("bitstring must be ASCII 0/1")),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ParityExample {
            input,
            label,
            task_id,
        });
    }
    Ok(out)
}
