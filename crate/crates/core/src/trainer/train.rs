use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ppo::{build_samples, ppo_update, Optimizers, UpdateStats};
use super::rollout::{collect_rollouts, Trajectory};
use super::{EmbeddingModel, TrainConfig};
use crate::env::Environment;
use crate::error::{Error, Result};

/// One row of training metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub env_steps: usize,
    pub episodes: usize,
    /// Mean undiscounted task return per skill over this batch (`None` if the
    /// skill was not sampled).
    pub skill_returns: Vec<Option<f64>>,
    pub embedding_means: Vec<Vec<f64>>,
    pub embedding_stds: Vec<Vec<f64>>,
    /// Mean `log q(z | s^H)` over the batch.
    pub inference_log_lik: f64,
    pub augmented_return: f64,
    pub update: UpdateStats,
}

/// Stateful Stage-1 optimiser: owns the model, optimiser moments and RNG.
#[derive(Debug, Clone)]
pub struct Trainer<E: Environment> {
    pub env: E,
    pub cfg: TrainConfig,
    pub model: EmbeddingModel,
    opt: Optimizers,
    rng: ChaCha8Rng,
    env_steps: usize,
    iteration: usize,
}

impl<E: Environment> Trainer<E> {
    pub fn new(env: E, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let model = EmbeddingModel::new(
            &cfg,
            env.obs_dim(),
            env.action_dim(),
            env.skills().len(),
            &mut rng,
        )?;
        let opt = Optimizers::new(&model);
        Ok(Self {
            env,
            cfg,
            model,
            opt,
            rng,
            env_steps: 0,
            iteration: 0,
        })
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Collect a batch, update, and report. On a non-finite update the model
    /// is rolled back to its state before the iteration and an error returned.
    pub fn step(&mut self) -> Result<IterationMetrics> {
        let batch = collect_rollouts(&self.model, &self.env, &self.cfg, &mut self.rng)?;
        let before = self.model.clone();
        let opt_before = self.opt.clone();
        let samples = build_samples(&mut self.model, &batch, &self.cfg)?;
        let update = match ppo_update(
            &mut self.model,
            &mut self.opt,
            &samples,
            &self.cfg,
            &mut self.rng,
        ) {
            Ok(u) if self.model.all_finite() => u,
            Ok(_) => {
                self.model = before;
                self.opt = opt_before;
                return Err(Error::Divergence {
                    iteration: self.iteration,
                    reason: "non-finite parameters after update".into(),
                });
            }
            Err(e) => {
                self.model = before;
                self.opt = opt_before;
                return Err(Error::Divergence {
                    iteration: self.iteration,
                    reason: e.to_string(),
                });
            }
        };
        let steps: usize = batch.iter().map(Trajectory::len).sum();
        self.env_steps += steps;
        let metrics = self.metrics(&batch, steps, update)?;
        self.iteration += 1;
        Ok(metrics)
    }

    fn metrics(
        &self,
        batch: &[Trajectory],
        steps: usize,
        update: UpdateStats,
    ) -> Result<IterationMetrics> {
        let n = self.model.num_skills;
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        let mut loglik = 0.0;
        let mut aug = 0.0;
        for t in batch {
            sums[t.skill] += t.task_return();
            counts[t.skill] += 1;
            loglik += t
                .steps
                .iter()
                .map(|s| s.terms.inference_log_lik)
                .sum::<f64>();
            aug += t.augmented_return();
        }
        let mut means = Vec::with_capacity(n);
        let mut stds = Vec::with_capacity(n);
        for t in 0..n {
            let d = self.model.embedding_dist(t)?;
            means.push(d.mean().to_vec());
            stds.push(d.std());
        }
        Ok(IterationMetrics {
            iteration: self.iteration,
            env_steps: self.env_steps,
            episodes: batch.len(),
            skill_returns: sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| (c > 0).then(|| s / c as f64))
                .collect(),
            embedding_means: means,
            embedding_stds: stds,
            inference_log_lik: loglik / steps.max(1) as f64,
            augmented_return: aug / batch.len().max(1) as f64,
            update,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    pub metrics: Vec<IterationMetrics>,
    pub env_steps: usize,
}

/// Training aborted; carries the last finite model when one was built.
#[derive(Debug)]
pub struct TrainFailure {
    pub error: Error,
    pub last_good: Option<TrainOutcome>,
}

impl std::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for TrainFailure {}

/// Runs collect → advantage → update until `cfg.total_steps` environment
/// steps have been consumed.
pub fn train_stage1<E: Environment>(
    env: E,
    cfg: TrainConfig,
) -> std::result::Result<TrainOutcome, Box<TrainFailure>> {
    train_with(env, cfg, |_| {})
}

/// Like [`train_stage1`] but calls `on_iteration` after every update.
pub fn train_with<E: Environment>(
    env: E,
    cfg: TrainConfig,
    mut on_iteration: impl FnMut(&IterationMetrics),
) -> std::result::Result<TrainOutcome, Box<TrainFailure>> {
    let total = cfg.total_steps;
    let mut trainer = match Trainer::new(env, cfg) {
        Ok(t) => t,
        Err(error) => {
            return Err(Box::new(TrainFailure {
                error,
                last_good: None,
            }))
        }
    };
    let mut metrics = Vec::new();
    while trainer.env_steps() < total {
        match trainer.step() {
            Ok(m) => {
                on_iteration(&m);
                metrics.push(m);
            }
            Err(error) => {
                return Err(Box::new(TrainFailure {
                    error,
                    last_good: Some(TrainOutcome {
                        model: trainer.model.clone(),
                        metrics,
                        env_steps: trainer.env_steps(),
                    }),
                }))
            }
        }
    }
    Ok(TrainOutcome {
        env_steps: trainer.env_steps(),
        model: trainer.model,
        metrics,
    })
}
