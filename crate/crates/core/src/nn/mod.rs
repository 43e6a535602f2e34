//! A small dense ReLU network trained with softmax cross-entropy and Adam.
//!
//! Everything is `f64`, row-major and single-threaded, so a given seed and
//! data stream produce bit-identical parameter trajectories.

mod adam;
mod eval;
mod loss;
mod matrix;
mod mlp;
mod snapshot;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use eval::{evaluate, EvalReport};
pub use loss::{nll_loss, row_nll};
pub use matrix::Matrix;
pub use mlp::{
    backward, forward, init_model, Architecture, Batch, Dense, ForwardPass, Gradients, MlpModel,
};
pub use snapshot::{read_snapshot, write_snapshot};
