//! Latent skill embeddings for multi-task reinforcement learning.
//!
//! A single policy `π(a | s, z)` is trained on several skills at once. Each
//! rollout draws a latent `z` from a learned per-skill embedding `p(z | t)`,
//! and an inference network `q(z | s^H)` rewards the policy for producing
//! trajectories from which the latent can be recovered. The frozen policy and
//! embedding then serve as a skill library that higher-level composers drive
//! through the latent input: by interpolation, by uniform-cost search over
//! the per-skill mean latents, or by an off-policy actor-critic.
//!
//! - [`nn`]: dense networks, diagonal Gaussians, Adam.
//! - [`env`]: the point-mass and planar-arm multi-goal environments.
//! - [`trainer`]: rollouts, augmented reward, GAE and the clipped update.
//! - [`compose`]: the frozen library and the three composers.
//! - [`persist`]: config files, checkpoints and CSV export.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod compose;
pub mod env;
mod error;
pub mod nn;
pub mod persist;
pub mod trainer;

pub use error::{CheckpointError, Error, Result};
