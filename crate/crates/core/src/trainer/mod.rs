//! Stage-1 training of the latent skill library.

mod config;
mod model;
pub mod ppo;
pub mod rollout;
mod train;

pub use config::TrainConfig;
pub use model::{EmbeddingModel, ValueNormalizer};
pub use ppo::{clipped_surrogate, ppo_update, Optimizers, PpoSample, UpdateStats};
pub use rollout::{
    augmented_reward, collect_rollouts, gae_advantages, reward_terms, RewardTerms, RolloutStep,
    StateWindow, Trajectory,
};
pub use train::{train_stage1, train_with, IterationMetrics, TrainFailure, TrainOutcome, Trainer};
