//! The jointly trained networks: latent-conditioned policy, skill embedding,
//! inference network, and value baseline.

use rand::Rng;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::nn::{Activation, DiagGaussian, GradientTape, LogStdBounds, Mlp, MlpSpec};

/// Running mean/variance of returns; the value network regresses onto
/// normalised targets and its outputs are mapped back with these statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueNormalizer {
    pub mean: f64,
    pub var: f64,
    pub count: f64,
}

impl Default for ValueNormalizer {
    fn default() -> Self {
        Self {
            mean: 0.0,
            var: 1.0,
            count: 0.0,
        }
    }
}

impl ValueNormalizer {
    pub fn std(&self) -> f64 {
        self.var.sqrt().max(1e-4)
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std()
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        self.mean + self.std() * y
    }

    /// Merges a batch into the running statistics (parallel Welford update).
    pub fn update(&mut self, xs: &[f64]) {
        if xs.is_empty() {
            return;
        }
        let n = xs.len() as f64;
        let batch_mean = xs.iter().sum::<f64>() / n;
        let batch_var = xs.iter().map(|x| (x - batch_mean).powi(2)).sum::<f64>() / n;
        if self.count == 0.0 {
            self.mean = batch_mean;
            self.var = batch_var;
            self.count = n;
            return;
        }
        let total = self.count + n;
        let delta = batch_mean - self.mean;
        let m2 = self.var * self.count + batch_var * n + delta * delta * self.count * n / total;
        self.mean += delta * n / total;
        self.var = m2 / total;
        self.count = total;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    /// `π(a | s, z)`: input is the observation followed by the latent.
    pub policy: Mlp,
    /// State-independent log standard deviation of the action distribution.
    pub policy_log_std: Vec<f64>,
    /// `p(z | t)`: one-hot skill id to `[mean ; log_std]` over latents.
    pub embedding: Mlp,
    /// `q(z | s^H)`: flattened state window to `[mean ; log_std]` over latents.
    pub inference: Mlp,
    /// Baseline on `(s, t)` in normalised-return units. It does not see `z`:
    /// the latent is sampled as part of the action, so a baseline over it
    /// would cancel the embedding's share of the advantage.
    pub value: Mlp,
    pub value_norm: ValueNormalizer,
    pub bounds: LogStdBounds,
    pub num_skills: usize,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub latent_dim: usize,
    pub window: usize,
}

impl EmbeddingModel {
    pub fn new<R: Rng + ?Sized>(
        cfg: &TrainConfig,
        obs_dim: usize,
        action_dim: usize,
        num_skills: usize,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.latent_dim;
        let policy_spec = MlpSpec::new(
            obs_dim + d,
            cfg.policy_hidden.clone(),
            action_dim,
            Activation::Tanh,
        )?;
        let embedding_spec = MlpSpec::new(
            num_skills,
            cfg.embedding_hidden.clone(),
            2 * d,
            Activation::Tanh,
        )?;
        let inference_spec = MlpSpec::new(
            obs_dim * cfg.window,
            cfg.inference_hidden.clone(),
            2 * d,
            Activation::Tanh,
        )?;
        let value_spec = MlpSpec::new(
            obs_dim + num_skills,
            cfg.value_hidden.clone(),
            1,
            Activation::Tanh,
        )?;

        let policy = Mlp::init(policy_spec, 0.01, rng)?;
        let mut embedding = Mlp::init(embedding_spec, cfg.embedding_init_gain, rng)?;
        set_log_std_head(&mut embedding, d, cfg.init_embedding_log_std);
        let mut inference = Mlp::init(inference_spec, 0.1, rng)?;
        set_log_std_head(&mut inference, d, 0.0);
        let value = Mlp::init(value_spec, 1.0, rng)?;

        Ok(Self {
            policy,
            policy_log_std: vec![cfg.init_policy_log_std; action_dim],
            embedding,
            inference,
            value,
            value_norm: ValueNormalizer::default(),
            bounds: cfg.log_std_bounds()?,
            num_skills,
            obs_dim,
            action_dim,
            latent_dim: d,
            window: cfg.window,
        })
    }

    /// The policy input. Takes only the observation and latent; the skill id
    /// is never visible to the policy.
    pub fn policy_input(&self, obs: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::dims("policy observation", self.obs_dim, obs.len()));
        }
        if z.len() != self.latent_dim {
            return Err(Error::dims("policy latent", self.latent_dim, z.len()));
        }
        let mut x = Vec::with_capacity(self.obs_dim + self.latent_dim);
        x.extend_from_slice(obs);
        x.extend_from_slice(z);
        Ok(x)
    }

    pub fn policy_forward(&self, obs: &[f64], z: &[f64]) -> Result<(DiagGaussian, GradientTape)> {
        let (mean, tape) = self.policy.forward(&self.policy_input(obs, z)?)?;
        let dist = DiagGaussian::new(mean, self.policy_log_std.clone(), self.bounds)?;
        Ok((dist, tape))
    }

    pub fn policy_dist(&self, obs: &[f64], z: &[f64]) -> Result<DiagGaussian> {
        Ok(self.policy_forward(obs, z)?.0)
    }

    pub fn one_hot(&self, task: usize) -> Result<Vec<f64>> {
        if task >= self.num_skills {
            return Err(Error::InvalidTask {
                task,
                count: self.num_skills,
            });
        }
        let mut v = vec![0.0; self.num_skills];
        v[task] = 1.0;
        Ok(v)
    }

    /// Raw `[mean ; log_std]` head of `p(z | t)` with its tape.
    pub fn embedding_forward(&self, task: usize) -> Result<(Vec<f64>, GradientTape)> {
        self.embedding.forward(&self.one_hot(task)?)
    }

    pub fn embedding_dist(&self, task: usize) -> Result<DiagGaussian> {
        DiagGaussian::from_head(&self.embedding_forward(task)?.0, self.bounds)
    }

    pub fn inference_forward(&self, window: &[f64]) -> Result<(Vec<f64>, GradientTape)> {
        let expected = self.obs_dim * self.window;
        if window.len() != expected {
            return Err(Error::dims("inference window", expected, window.len()));
        }
        self.inference.forward(window)
    }

    pub fn inference_dist(&self, window: &[f64]) -> Result<DiagGaussian> {
        DiagGaussian::from_head(&self.inference_forward(window)?.0, self.bounds)
    }

    /// Observation followed by the one-hot skill id.
    pub fn value_input(&self, obs: &[f64], task: usize) -> Result<Vec<f64>> {
        if obs.len() != self.obs_dim {
            return Err(Error::dims("value observation", self.obs_dim, obs.len()));
        }
        let mut x = Vec::with_capacity(self.obs_dim + self.num_skills);
        x.extend_from_slice(obs);
        x.extend(self.one_hot(task)?);
        Ok(x)
    }

    /// Normalised value prediction and tape.
    pub fn value_forward(&self, obs: &[f64], task: usize) -> Result<(f64, GradientTape)> {
        let (out, tape) = self.value.forward(&self.value_input(obs, task)?)?;
        Ok((out[0], tape))
    }

    /// Value estimate in return units.
    pub fn value(&self, obs: &[f64], task: usize) -> Result<f64> {
        Ok(self
            .value_norm
            .denormalize(self.value_forward(obs, task)?.0))
    }

    /// Draws the latent used for a whole rollout of skill `task`.
    pub fn sample_skill_latent<R: Rng + ?Sized>(
        &self,
        task: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, f64)> {
        let dist = self.embedding_dist(task)?;
        let z = dist.sample(rng);
        let lp = dist.log_prob(&z)?;
        Ok((z, lp))
    }

    pub fn mean_latent(&self, task: usize) -> Result<Vec<f64>> {
        Ok(self.embedding_dist(task)?.mean().to_vec())
    }

    pub fn all_finite(&self) -> bool {
        self.policy.params().all_finite()
            && self.policy_log_std.iter().all(|v| v.is_finite())
            && self.embedding.params().all_finite()
            && self.inference.params().all_finite()
            && self.value.params().all_finite()
    }
}

/// Zeroes the log-std rows of a `[mean ; log_std]` output layer and sets their
/// bias, so every input starts with the same spread.
fn set_log_std_head(net: &mut Mlp, latent_dim: usize, log_std: f64) {
    let shapes = net.params().shapes().to_vec();
    let last = *shapes.last().expect("mlp has an output layer");
    let offset: usize = shapes[..shapes.len() - 1].iter().map(|s| s.len()).sum();
    let values = net.params_mut().values_mut();
    for r in latent_dim..2 * latent_dim {
        for c in 0..last.cols {
            values[offset + r * last.cols + c] = 0.0;
        }
        values[offset + last.rows * last.cols + r] = log_std;
    }
}
