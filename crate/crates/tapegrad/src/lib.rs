//! Minimal reverse-mode differentiation on batched matrices, plus the neural
//! building blocks (MLP, GRU cell, grouped categoricals with straight-through
//! sampling), Adam/EMA optimizers, a named-tensor checkpoint archive, and a
//! finite-difference gradient checker.
//!
//! Values are `ndarray::Array2` matrices with rows as the batch dimension.
//! The tape is generic over the element type: training runs in `f32`, the
//! gradient checker replays the same graph in `f64` so finite differences are
//! not drowned in single-precision noise.

mod archive;
mod gradcheck;
mod nn;
mod optim;
mod store;
mod tape;

pub use archive::{load_stores, save_stores};
pub use gradcheck::grad_check;
pub use nn::{sample_group_one_hot, sinusoidal_embedding, GruCell, Mlp};
pub use optim::{adam_step, ema_update, AdamCfg, GradNorms};
pub use store::{bind_store, collect_grads, Mat32, Param, ParamStore};
pub use tape::{Grads, Mat, Scalar, Tape, TapeError, Var};
