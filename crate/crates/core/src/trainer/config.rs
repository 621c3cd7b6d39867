use crate::error::{Error, Result};
use crate::nn::LogStdBounds;

/// Hyperparameters of the latent-skill trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Weight of the embedding entropy bonus.
    pub alpha1: f64,
    /// Weight of the inference log-likelihood bonus.
    pub alpha2: f64,
    /// Weight of the policy entropy bonus.
    pub alpha3: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub latent_dim: usize,
    /// Number of trailing states fed to the inference network.
    pub window: usize,
    pub ppo_clip: f64,
    /// Stop the epoch loop once the minibatch KL exceeds 1.5× this value
    /// (0 disables).
    pub target_kl: f64,
    pub epochs: usize,
    pub batch_steps: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub embedding_lr: f64,
    pub value_lr: f64,
    pub inference_lr: f64,
    pub max_grad_norm: f64,
    pub total_steps: usize,
    pub policy_hidden: Vec<usize>,
    pub embedding_hidden: Vec<usize>,
    pub inference_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub log_std_min: f64,
    pub log_std_max: f64,
    pub init_policy_log_std: f64,
    pub init_embedding_log_std: f64,
    /// Output-layer gain of the embedding mean head; sets the initial spread
    /// of the skill means.
    pub embedding_init_gain: f64,
    /// Also differentiate the surrogate through the policy's latent input,
    /// with `z = μ + σ·ε` and `ε` fixed per rollout.
    pub pathwise_latent: bool,
    /// Keep the embedding at its initialization (single-task baselines).
    pub freeze_embedding: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.01,
            alpha2: 0.1,
            alpha3: 0.01,
            gamma: 0.99,
            gae_lambda: 0.95,
            latent_dim: 2,
            window: 4,
            ppo_clip: 0.2,
            target_kl: 0.03,
            epochs: 10,
            batch_steps: 1024,
            minibatch: 128,
            lr: 1e-3,
            embedding_lr: 1e-3,
            value_lr: 1e-3,
            inference_lr: 1e-3,
            max_grad_norm: 0.5,
            total_steps: 15_000,
            policy_hidden: vec![64, 64],
            embedding_hidden: vec![32],
            inference_hidden: vec![32],
            value_hidden: vec![64, 64],
            log_std_min: -5.0,
            log_std_max: 2.0,
            init_policy_log_std: -0.5,
            init_embedding_log_std: -1.0,
            embedding_init_gain: 2.0,
            pathwise_latent: true,
            freeze_embedding: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("train.alpha1", self.alpha1),
            ("train.alpha2", self.alpha2),
            ("train.alpha3", self.alpha3),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(name, "must be finite and >= 0"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("train.gamma", "must lie in (0, 1]"));
        }
        if !(self.gae_lambda >= 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::config("train.gae_lambda", "must lie in [0, 1]"));
        }
        if self.latent_dim == 0 {
            return Err(Error::config("train.latent_dim", "must be >= 1"));
        }
        if self.window == 0 {
            return Err(Error::config("train.window", "must be >= 1"));
        }
        if !(self.ppo_clip > 0.0 && self.ppo_clip < 1.0) {
            return Err(Error::config("train.ppo_clip", "must lie in (0, 1)"));
        }
        for (name, v) in [
            ("train.epochs", self.epochs),
            ("train.batch_steps", self.batch_steps),
            ("train.minibatch", self.minibatch),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be >= 1"));
            }
        }
        for (name, v) in [
            ("train.lr", self.lr),
            ("train.embedding_lr", self.embedding_lr),
            ("train.value_lr", self.value_lr),
            ("train.inference_lr", self.inference_lr),
            ("train.max_grad_norm", self.max_grad_norm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, "must be finite and > 0"));
            }
        }
        for (name, dims) in [
            ("train.policy_hidden", &self.policy_hidden),
            ("train.embedding_hidden", &self.embedding_hidden),
            ("train.inference_hidden", &self.inference_hidden),
            ("train.value_hidden", &self.value_hidden),
        ] {
            if dims.contains(&0) {
                return Err(Error::config(name, "hidden widths must be >= 1"));
            }
        }
        if !(self.embedding_init_gain > 0.0) || !self.embedding_init_gain.is_finite() {
            return Err(Error::config(
                "train.embedding_init_gain",
                "must be finite and > 0",
            ));
        }
        if !(self.target_kl >= 0.0) || !self.target_kl.is_finite() {
            return Err(Error::config("train.target_kl", "must be finite and >= 0"));
        }
        let bounds = self.log_std_bounds()?;
        for (name, v) in [
            ("train.init_policy_log_std", self.init_policy_log_std),
            ("train.init_embedding_log_std", self.init_embedding_log_std),
        ] {
            if v < bounds.min || v > bounds.max {
                return Err(Error::config(name, "outside [log_std_min, log_std_max]"));
            }
        }
        Ok(())
    }

    pub fn log_std_bounds(&self) -> Result<LogStdBounds> {
        LogStdBounds::new(self.log_std_min, self.log_std_max).map_err(|_| {
            Error::config(
                "train.log_std_min",
                "must be finite and below train.log_std_max",
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fields_are_named() {
        let cases: Vec<(TrainConfig, &str)> = vec![
            (
                TrainConfig {
                    alpha2: -1.0,
                    ..Default::default()
                },
                "train.alpha2",
            ),
            (
                TrainConfig {
                    gamma: 0.0,
                    ..Default::default()
                },
                "train.gamma",
            ),
            (
                TrainConfig {
                    latent_dim: 0,
                    ..Default::default()
                },
                "train.latent_dim",
            ),
            (
                TrainConfig {
                    window: 0,
                    ..Default::default()
                },
                "train.window",
            ),
            (
                TrainConfig {
                    ppo_clip: 1.0,
                    ..Default::default()
                },
                "train.ppo_clip",
            ),
            (
                TrainConfig {
                    log_std_min: 3.0,
                    ..Default::default()
                },
                "train.log_std_min",
            ),
        ];
        for (cfg, field) in cases {
            match cfg.validate() {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected config error for {field}, got {other:?}"),
            }
        }
    }
}
