//! Temperature-based task sampling for imbalanced multi-task training.
//!
//! The crate is organised bottom-up:
//!
//! - [`sampler`]: temperature-shaped task distributions, temperature
//!   schedules and reproducible inverse-CDF draws.
//! - [`parity`]: the multi-task sparse-parity benchmark with Zipfian task
//!   frequencies.
//! - [`nn`]: a small ReLU MLP with manual backpropagation and Adam.
//! - [`trainer`]: the training loop tying the three together and emitting
//!   per-task metrics.
//!
//! ```
//! use imba_core::sampler::{temperature_distribution_raw, schedule_temperature, ScheduleSpec, ScheduleShape};
//!
//! let plan = temperature_distribution_raw(&[3000, 50, 50], 5.0).unwrap();
//! assert!(plan.probs()[1] > 50.0 / 3100.0);
//!
//! let warm = ScheduleSpec::new(ScheduleShape::Cosine, 1.0, 5.0).unwrap();
//! assert_eq!(schedule_temperature(&warm, 1.0).unwrap().value(), 5.0);
//! ```

pub mod error;
pub mod nn;
pub mod parity;
pub mod rng;
pub mod sampler;
pub mod trainer;

pub use error::{Error, Result};
pub use nn::{AdamConfig, MlpModel};
pub use parity::{ParityConfig, TaskSpec, ZipfPrior};
pub use rng::RngStream;
pub use sampler::{SamplingPlan, ScheduleShape, ScheduleSpec, TaskSizes, Temperature};
pub use trainer::{MetricsRecord, SamplerMode, TrainConfig};
