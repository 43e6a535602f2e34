//! Training loop: scheduled-temperature batch composition over the parity
//! benchmark, Adam updates, and periodic balanced evaluation.

mod config;
mod metrics;

use std::time::Instant;

pub use config::{default_eval_every, DataMode, SamplerMode, TrainConfig};
pub use metrics::{csv_header, read_metrics_csv, write_metrics_csv, MetricsRecord};

use crate::error::{Error, Result};
use crate::nn::{adam_step, evaluate, nll_loss, AdamState, Batch, EvalReport, Matrix, MlpModel};
use crate::parity::{
    balanced_eval_set, example_for_task, generate_tasks, zipf_prior_with_offset, BitEncoding,
    ParityExample, TaskSpec, ZipfPrior,
};
use crate::rng::{streams, RngStream};
use crate::sampler::{
    draw_batch_tasks, schedule_temperature, temperature_distribution, SamplingPlan, TaskSizes,
    Temperature,
};

/// Base used to turn prior probabilities into integer task sizes.
pub const SIZE_SCALE: f64 = 1e6;

/// Integer pseudo-sizes `round(p * 1e6)`, at least 1.
pub fn sizes_from_prior(prior: &ZipfPrior) -> TaskSizes {
    let sizes = prior
        .probs()
        .iter()
        .map(|p| ((p * SIZE_SCALE).round() as u64).max(1))
        .collect();
    TaskSizes::new(sizes).expect("prior is non-empty and sizes are clamped to >= 1")
}

/// Temperature in effect after `step` completed optimizer steps.
pub fn active_temperature(cfg: &TrainConfig, step: u64) -> Result<Temperature> {
    if step > cfg.total_steps {
        return Err(Error::InvalidTrainConfig(format!(
            "step {step} beyond total_steps {}",
            cfg.total_steps
        )));
    }
    match cfg.sampler_mode {
        SamplerMode::Random => Ok(Temperature::PROPORTIONAL),
        SamplerMode::FixedTemperature => Temperature::new(cfg.fixed_tau),
        SamplerMode::Scheduled => {
            let progress = progress(step, cfg.total_steps);
            schedule_temperature(&cfg.schedule, progress)
        }
    }
}

fn progress(step: u64, total_steps: u64) -> f64 {
    if total_steps == 0 {
        0.0
    } else {
        step as f64 / total_steps as f64
    }
}

/// Task distribution for the batch drawn after `step` completed steps.
///
/// At temperature exactly 1 this is the prior itself; otherwise the prior is
/// turned into integer sizes and reshaped by [`temperature_distribution`].
pub fn effective_task_probs(
    cfg: &TrainConfig,
    prior: &ZipfPrior,
    step: u64,
) -> Result<SamplingPlan> {
    let tau = active_temperature(cfg, step)?;
    Ok(plan_for(prior, &sizes_from_prior(prior), tau))
}

fn plan_for(prior: &ZipfPrior, sizes: &TaskSizes, tau: Temperature) -> SamplingPlan {
    if tau == Temperature::PROPORTIONAL {
        prior.plan()
    } else {
        temperature_distribution(sizes, tau)
    }
}

/// High- and low-resource task indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceGroups {
    pub hrt: Vec<usize>,
    pub lrt: Vec<usize>,
}

/// Tasks whose prior is at least `threshold * max(prior)` are high-resource.
pub fn classify_resource_groups(prior: &ZipfPrior, threshold: f64) -> Result<ResourceGroups> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidTrainConfig(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let max = prior.probs().iter().copied().fold(0.0, f64::max);
    let (hrt, lrt) = (0..prior.num_tasks()).partition(|&t| prior.probs()[t] >= threshold * max);
    Ok(ResourceGroups { hrt, lrt })
}

/// What happened in one optimizer step; handed to the observer of
/// [`train_with`].
#[derive(Debug)]
pub struct StepInfo<'a> {
    /// 1-based index of the step just taken.
    pub step: u64,
    pub tau: f64,
    pub task_ids: &'a [usize],
    pub batch_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub records: Vec<MetricsRecord>,
    pub model: MlpModel,
    pub tasks: Vec<TaskSpec>,
    pub prior: ZipfPrior,
    pub groups: ResourceGroups,
}

pub fn train(cfg: &TrainConfig) -> Result<TrainReport> {
    train_with(cfg, |_| {})
}

/// Runs training, calling `observe` after every optimizer step.
pub fn train_with(cfg: &TrainConfig, mut observe: impl FnMut(&StepInfo)) -> Result<TrainReport> {
    cfg.validate()?;
    let started = Instant::now();
    let parity = &cfg.parity;
    let num_tasks = parity.num_tasks;

    let tasks = generate_tasks(parity, &mut RngStream::new(cfg.seed, streams::TASKS))?;
    let prior = zipf_prior_with_offset(num_tasks, parity.zipf_alpha, parity.zipf_offset)?;
    let sizes = sizes_from_prior(&prior);
    let groups = classify_resource_groups(&prior, cfg.hrt_threshold)?;
    let mut model = cfg
        .architecture()
        .init(&mut RngStream::new(cfg.seed, streams::INIT))?;
    let mut optimizer = AdamState::new(&model, cfg.adam);

    let eval_examples = balanced_eval_set(
        &tasks,
        parity.n,
        cfg.eval_per_task,
        &mut RngStream::new(cfg.seed, cfg.eval_stream_id),
    )?;
    let eval_batch = encode_batch(&eval_examples, parity.n, cfg.bit_encoding)?;

    let pool = match cfg.data {
        DataMode::Streaming => None,
        DataMode::FixedPool { pool_size } => {
            let mut rng = RngStream::new(cfg.seed, streams::POOL);
            Some(
                tasks
                    .iter()
                    .map(|t| {
                        (0..pool_size)
                            .map(|_| example_for_task(&tasks, parity.n, t.task_id, &mut rng))
                            .collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>(),
            )
        }
    };

    let mut train_rng = RngStream::new(cfg.seed, streams::TRAIN);
    let eval_steps = cfg.eval_steps();
    let mut next_eval = 0;
    let mut records = Vec::with_capacity(eval_steps.len());
    let mut loss_since_record = 0.0;
    let mut steps_since_record = 0u64;

    let emit = |step: u64, model: &MlpModel, batch_loss: f64| -> Result<MetricsRecord> {
        let report = evaluate(model, &eval_batch, num_tasks)?;
        let tau = active_temperature(cfg, step)?.value();
        Ok(build_record(
            step,
            progress(step, cfg.total_steps),
            tau,
            &report,
            &groups,
            batch_loss,
            started.elapsed().as_millis() as u64,
        ))
    };

    if eval_steps[next_eval] == 0 {
        records.push(emit(0, &model, f64::NAN)?);
        next_eval += 1;
    }

    let mut examples: Vec<ParityExample> = Vec::with_capacity(cfg.batch_size);
    for step in 1..=cfg.total_steps {
        let tau = active_temperature(cfg, step - 1)?;
        let plan = plan_for(&prior, &sizes, tau);
        let task_ids = draw_batch_tasks(&plan, cfg.batch_size, &mut train_rng)?;
        examples.clear();
        for &task in &task_ids {
            let ex = match &pool {
                None => example_for_task(&tasks, parity.n, task, &mut train_rng),
                Some(pool) => {
                    let entries = &pool[task];
                    entries[train_rng.below(entries.len() as u64) as usize].clone()
                }
            };
            examples.push(ex);
        }
        let batch = encode_batch(&examples, parity.n, cfg.bit_encoding)?;

        let pass = model.forward_pass(&batch.inputs)?;
        let (loss, dlogits) = nll_loss(&pass.logits, &batch.labels)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        let grads = model.backward_pass(&batch.inputs, &pass, &dlogits)?;
        adam_step(&mut model, &grads, &mut optimizer).map_err(|err| match err {
            Error::NonFiniteGradient { param } => Error::NonFiniteGradient {
                param: format!("{param} at step {step}"),
            },
            other => other,
        })?;
        debug_assert!(model.is_finite(), "non-finite parameters after step {step}");

        observe(&StepInfo {
            step,
            tau: tau.value(),
            task_ids: &task_ids,
            batch_loss: loss,
        });
        loss_since_record += loss;
        steps_since_record += 1;

        if next_eval < eval_steps.len() && eval_steps[next_eval] == step {
            let mean_loss = loss_since_record / steps_since_record as f64;
            records.push(emit(step, &model, mean_loss)?);
            next_eval += 1;
            loss_since_record = 0.0;
            steps_since_record = 0;
        }
    }

    Ok(TrainReport {
        records,
        model,
        tasks,
        prior,
        groups,
    })
}

/// Encodes examples into network inputs: data bits per `encoding`, one-hot
/// task bits as 0/1.
pub fn encode_batch(examples: &[ParityExample], n: usize, encoding: BitEncoding) -> Result<Batch> {
    let width = examples.first().map_or(n, |e| e.input.len());
    let mut data = Vec::with_capacity(examples.len() * width);
    for ex in examples {
        if ex.input.len() != width {
            return Err(Error::ShapeMismatch("examples of different widths".into()));
        }
        data.extend(ex.input[..n].iter().map(|&b| encoding.data_value(b)));
        data.extend(ex.input[n..].iter().map(|&b| b as f64));
    }
    Batch::new(
        Matrix::from_vec(examples.len(), width, data)?,
        examples.iter().map(|e| e.label).collect(),
        examples.iter().map(|e| e.task_id).collect(),
    )
}

fn group_mean(values: &[f64], members: &[usize]) -> f64 {
    if members.is_empty() {
        f64::NAN
    } else {
        members.iter().map(|&t| values[t]).sum::<f64>() / members.len() as f64
    }
}

fn build_record(
    step: u64,
    progress: f64,
    active_tau: f64,
    report: &EvalReport,
    groups: &ResourceGroups,
    train_batch_loss: f64,
    wall_ms: u64,
) -> MetricsRecord {
    MetricsRecord {
        step,
        progress,
        active_tau,
        per_task_loss: report.per_task_loss.clone(),
        per_task_accuracy: report.per_task_accuracy.clone(),
        macro_loss: report.macro_loss,
        macro_accuracy: report.macro_accuracy,
        hrt_loss: group_mean(&report.per_task_loss, &groups.hrt),
        lrt_loss: group_mean(&report.per_task_loss, &groups.lrt),
        hrt_accuracy: group_mean(&report.per_task_accuracy, &groups.hrt),
        lrt_accuracy: group_mean(&report.per_task_accuracy, &groups.lrt),
        train_batch_loss,
        wall_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parity::zipf_prior;
    use crate::sampler::{ScheduleShape, ScheduleSpec};

    fn tiny(mode: SamplerMode) -> TrainConfig {
        let mut cfg = TrainConfig::scaled(20, 16);
        cfg.eval_every = 5;
        cfg.eval_per_task = 20;
        cfg.hidden = 8;
        cfg.sampler_mode = mode;
        cfg.seed = 3;
        cfg
    }

    #[test]
    fn random_mode_is_the_prior() {
        let prior = zipf_prior(10, 1.5).unwrap();
        let cfg = tiny(SamplerMode::Random);
        for step in [0, 7, 20] {
            assert_eq!(
                effective_task_probs(&cfg, &prior, step).unwrap().probs(),
                prior.probs()
            );
        }
        assert!(effective_task_probs(&cfg, &prior, 21).is_err());
    }

    #[test]
    fn scheduled_starts_at_the_prior() {
        let prior = zipf_prior(10, 1.5).unwrap();
        let cfg = tiny(SamplerMode::Scheduled);
        assert_eq!(
            effective_task_probs(&cfg, &prior, 0).unwrap().probs(),
            prior.probs()
        );
        assert_ne!(
            effective_task_probs(&cfg, &prior, 20).unwrap().probs(),
            prior.probs()
        );
    }

    #[test]
    fn fixed_tau_five_ratio() {
        // (p1/p10)^(1/5) = (10^1.5)^0.2 = 1.99526...; integer sizes
        // 501169 and 15848 give 1.9952713 at 40 digits.
        let prior = zipf_prior(10, 1.5).unwrap();
        let mut cfg = tiny(SamplerMode::FixedTemperature);
        cfg.fixed_tau = 5.0;
        let plan = effective_task_probs(&cfg, &prior, 0).unwrap();
        let p = plan.probs();
        let ratio = p[0] / p[9];
        assert!((ratio - 1.995_271_262_010_706_7).abs() < 1e-12, "{ratio}");
        assert!((ratio - 1.995).abs() < 1e-3);
        assert!((p[0] - 0.153_737_343_386_449_57).abs() < 1e-12);
    }

    #[test]
    fn resource_groups() {
        let zipf = zipf_prior(10, 1.5).unwrap();
        let g = classify_resource_groups(&zipf, 0.5).unwrap();
        assert_eq!(g.hrt, vec![0]);
        assert_eq!(g.lrt, (1..10).collect::<Vec<_>>());
        // 2^-1.5 = 0.35355 sits between these thresholds.
        assert_eq!(
            classify_resource_groups(&zipf, 0.35).unwrap().hrt,
            vec![0, 1]
        );
        let flat = zipf_prior(2, 1e-12).unwrap();
        assert_eq!(
            classify_resource_groups(&flat, 0.5).unwrap().hrt,
            vec![0, 1]
        );
        assert!(classify_resource_groups(&zipf, 0.0).is_err());
        assert!(classify_resource_groups(&zipf, 1.0).is_err());
    }

    #[test]
    fn uniform_prior_is_all_hrt() {
        let prior = zipf_prior_with_offset(4, 1.0, 1e12).unwrap();
        let g = classify_resource_groups(&prior, 0.5).unwrap();
        assert_eq!(g.hrt.len(), 4);
        assert!(g.lrt.is_empty());
    }

    #[test]
    fn eval_only_run() {
        let mut cfg = tiny(SamplerMode::Random);
        cfg.total_steps = 0;
        let report = train(&cfg).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert_eq!(r.step, 0);
        assert!((r.macro_loss - std::f64::consts::LN_2).abs() < 0.05);
    }

    #[test]
    fn cadence_and_determinism() {
        let cfg = tiny(SamplerMode::Scheduled);
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        let steps: Vec<u64> = a.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 5, 10, 15, 20]);
        assert_eq!(a.model, b.model);
        for (x, y) in a.records.iter().zip(&b.records) {
            let (mut x, mut y) = (x.clone(), y.clone());
            x.wall_ms = 0;
            y.wall_ms = 0;
            assert_eq!(format!("{x:?}"), format!("{y:?}"));
        }
        let last = a.records.last().unwrap();
        assert_eq!(last.active_tau, 5.0);
        assert_eq!(last.progress, 1.0);
    }

    #[test]
    fn observer_sees_every_step() {
        let mut cfg = tiny(SamplerMode::Scheduled);
        cfg.schedule = ScheduleSpec::new(ScheduleShape::Linear, 1.0, 3.0).unwrap();
        let mut seen = Vec::new();
        train_with(&cfg, |info| {
            seen.push((info.step, info.tau, info.task_ids.len()))
        })
        .unwrap();
        assert_eq!(seen.len(), 20);
        assert_eq!(seen[0], (1, 1.0, 16));
        assert!((seen[19].1 - (1.0 + 2.0 * 19.0 / 20.0)).abs() < 1e-12);
    }

    #[test]
    fn fixed_pool_mode_trains() {
        let mut cfg = tiny(SamplerMode::Random);
        cfg.data = DataMode::FixedPool { pool_size: 4 };
        let report = train(&cfg).unwrap();
        assert_eq!(report.records.len(), 5);
    }

    #[test]
    fn plus_minus_encoding() {
        let ex = ParityExample {
            input: vec![1, 0, 0, 1],
            label: 1,
            task_id: 1,
        };
        let b = encode_batch(&[ex], 2, BitEncoding::PlusMinusOne).unwrap();
        assert_eq!(b.inputs.row(0), &[1.0, -1.0, 0.0, 1.0]);
    }
}
