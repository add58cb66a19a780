//! Learning-to-search imitation on low-dimensional control tasks.
//!
//! The stack: a chunked diffusion base policy is corrected at test time by
//! MPPI search over residual action plans inside a learned recurrent
//! state-space world model, scored by a discriminator reward model and a
//! critic ensemble. Training interleaves a warm-start phase, online
//! fine-tuning on planner rollouts, and periodic distillation of the search
//! back into the base policy.

pub mod env;
pub mod rng;

pub use env::TaskKind;
