//! Deterministic actor-critic over the latent space of a frozen library.
//!
//! The high-level actor maps an observation to a latent inside a box around
//! the learned skill means; the frozen low-level policy turns that latent
//! into actions. In discrete mode the actor's proto-latent is snapped to a
//! fixed catalog of latents before execution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{blend, ActionMode, FrozenSkillLibrary, LatentComposer};
use crate::env::{Environment, Goal};
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, Activation, Adam, Mlp, MlpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComposerMode {
    Continuous,
    /// Nearest-neighbour snapping to [`discrete_catalog`].
    Discrete,
}

impl ComposerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ComposerMode::Continuous => "continuous",
            ComposerMode::Discrete => "discrete",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(ComposerMode::Continuous),
            "discrete" => Some(ComposerMode::Discrete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposerConfig {
    pub mode: ComposerMode,
    pub total_steps: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Polyak rate for the target networks.
    pub tau: f64,
    /// Std of the Gaussian exploration noise, in unit box coordinates.
    pub exploration_noise: f64,
    /// Uniformly random latents before the actor takes over.
    pub warmup_steps: usize,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub hidden: Vec<usize>,
    /// Fractional inflation of the latent box half-widths.
    pub box_margin: f64,
    /// Candidates scored by the critic in discrete mode; 1 is plain snapping.
    pub discrete_k: usize,
    pub max_grad_norm: f64,
    pub seed: u64,
}

impl Default for ComposerConfig {
    fn default() -> Self {
        Self {
            mode: ComposerMode::Continuous,
            total_steps: 10_000,
            replay_capacity: 100_000,
            batch_size: 128,
            tau: 0.005,
            exploration_noise: 0.1,
            warmup_steps: 500,
            gamma: 0.99,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            hidden: vec![32, 32],
            box_margin: 0.5,
            discrete_k: 1,
            max_grad_norm: 1.0,
            seed: 0,
        }
    }
}

impl ComposerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("composer.tau", self.tau),
            ("composer.actor_lr", self.actor_lr),
            ("composer.critic_lr", self.critic_lr),
            ("composer.max_grad_norm", self.max_grad_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be a positive number"));
            }
        }
        if self.tau > 1.0 {
            return Err(Error::config("composer.tau", "must be <= 1"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("composer.gamma", "must be in [0, 1]"));
        }
        if !(self.exploration_noise >= 0.0 && self.exploration_noise.is_finite()) {
            return Err(Error::config("composer.exploration_noise", "must be >= 0"));
        }
        if !(self.box_margin >= 0.0 && self.box_margin.is_finite()) {
            return Err(Error::config("composer.box_margin", "must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("composer.batch_size", "must be >= 1"));
        }
        if self.replay_capacity == 0 {
            return Err(Error::config("composer.replay_capacity", "must be >= 1"));
        }
        if self.discrete_k == 0 {
            return Err(Error::config("composer.discrete_k", "must be >= 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::config(
                "composer.hidden",
                "hidden widths must be >= 1",
            ));
        }
        Ok(())
    }
}

/// Skill means plus the midpoint of every pair.
pub fn discrete_catalog(library: &FrozenSkillLibrary) -> Vec<Vec<f64>> {
    let means = library.mean_latents();
    let mut out = means.to_vec();
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            out.push(blend(&means[i], &means[j], 0.5));
        }
    }
    out
}

/// Ring buffer of transitions. Actions are stored in unit box coordinates.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
    next_obs: Vec<Vec<f64>>,
    terminal: Vec<bool>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            next_obs: Vec::new(),
            terminal: Vec::new(),
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn push(
        &mut self,
        obs: Vec<f64>,
        action: Vec<f64>,
        reward: f64,
        next_obs: Vec<f64>,
        terminal: bool,
    ) {
        if self.obs.len() < self.capacity {
            self.obs.push(obs);
            self.actions.push(action);
            self.rewards.push(reward);
            self.next_obs.push(next_obs);
            self.terminal.push(terminal);
        } else {
            let i = self.head;
            self.obs[i] = obs;
            self.actions[i] = action;
            self.rewards[i] = reward;
            self.next_obs[i] = next_obs;
            self.terminal[i] = terminal;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    /// Indices drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        (0..batch)
            .map(|_| rng.random_range(0..self.len()))
            .collect()
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }
}

/// A trained high-level controller; greedy, noise-free at execution time.
#[derive(Debug, Clone)]
pub struct DdpgComposer {
    pub mode: ComposerMode,
    pub actor: Mlp,
    pub critic: Mlp,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Discrete catalog in unit box coordinates; empty in continuous mode.
    pub catalog: Vec<Vec<f64>>,
    pub discrete_k: usize,
}

impl DdpgComposer {
    fn new<R: Rng + ?Sized>(
        library: &FrozenSkillLibrary,
        obs_dim: usize,
        cfg: &ComposerConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let d = library.latent_dim();
        let actor = Mlp::init(
            MlpSpec::new(obs_dim, cfg.hidden.clone(), d, Activation::Relu)?,
            0.1,
            rng,
        )?;
        let critic = Mlp::init(
            MlpSpec::new(obs_dim + d, cfg.hidden.clone(), 1, Activation::Relu)?,
            1.0,
            rng,
        )?;
        let (lo, hi) = library.latent_box(cfg.box_margin);
        let mut c = Self {
            mode: cfg.mode,
            actor,
            critic,
            lo,
            hi,
            catalog: Vec::new(),
            discrete_k: cfg.discrete_k,
        };
        if cfg.mode == ComposerMode::Discrete {
            c.catalog = discrete_catalog(library)
                .iter()
                .map(|z| c.to_unit(z))
                .collect();
        }
        Ok(c)
    }

    pub fn latent_dim(&self) -> usize {
        self.lo.len()
    }

    /// Unit box coordinates to a latent.
    pub fn to_latent(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(u, (lo, hi))| lo + 0.5 * (u + 1.0) * (hi - lo))
            .collect()
    }

    pub fn to_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(z, (lo, hi))| 2.0 * (z - lo) / (hi - lo) - 1.0)
            .collect()
    }

    /// Actor output in unit coordinates, before any snapping.
    pub fn proto(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.actor.predict(obs)?.iter().map(|v| v.tanh()).collect())
    }

    pub fn q_value(&self, obs: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.critic.predict(&[obs, u].concat())?[0])
    }

    /// Continuous mode passes `u` through; discrete mode returns the best of
    /// the `discrete_k` nearest catalog entries under the critic.
    pub fn resolve(&self, obs: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        if self.mode == ComposerMode::Continuous {
            return Ok(u.to_vec());
        }
        let mut ranked: Vec<(f64, usize)> = self
            .catalog
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (
                    c.iter().zip(u).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
                    i,
                )
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let k = self.discrete_k.min(ranked.len());
        let mut best = ranked[0].1;
        if k > 1 {
            let mut best_q = f64::NEG_INFINITY;
            for &(_, i) in &ranked[..k] {
                let q = self.q_value(obs, &self.catalog[i])?;
                if q > best_q {
                    best_q = q;
                    best = i;
                }
            }
        }
        Ok(self.catalog[best].clone())
    }

    pub fn greedy_unit(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let u = self.proto(obs)?;
        self.resolve(obs, &u)
    }
}

impl LatentComposer for DdpgComposer {
    fn latent(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.to_latent(&self.greedy_unit(obs)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Cumulative environment steps when the episode ended.
    pub env_steps: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub final_distance: f64,
    pub success: bool,
}

#[derive(Debug, Clone)]
pub struct ComposerRun {
    pub composer: DdpgComposer,
    pub curve: Vec<EpisodeRecord>,
    pub env_steps: usize,
    pub updates: usize,
}

impl ComposerRun {
    /// Mean return of the last `n` completed episodes.
    pub fn final_mean_return(&self, n: usize) -> Option<f64> {
        let k = n.min(self.curve.len());
        if k == 0 {
            return None;
        }
        let tail = &self.curve[self.curve.len() - k..];
        Some(tail.iter().map(|e| e.episode_return).sum::<f64>() / k as f64)
    }
}

struct Learner {
    composer: DdpgComposer,
    target_actor: Mlp,
    target_critic: Mlp,
    actor_opt: Adam,
    critic_opt: Adam,
}

impl Learner {
    fn update<R: Rng + ?Sized>(
        &mut self,
        buf: &ReplayBuffer,
        cfg: &ComposerConfig,
        rng: &mut R,
    ) -> Result<()> {
        let idx = buf.sample(cfg.batch_size, rng);
        let scale = 1.0 / idx.len() as f64;
        let c = &self.composer;

        let mut critic_grads = c.critic.zero_grads();
        for &i in &idx {
            let next = &buf.next_obs[i];
            let mut target = buf.rewards[i];
            if !buf.terminal[i] {
                let u: Vec<f64> = self
                    .target_actor
                    .predict(next)?
                    .iter()
                    .map(|v| v.tanh())
                    .collect();
                let u = c.resolve(next, &u)?;
                target += cfg.gamma
                    * self
                        .target_critic
                        .predict(&[next.as_slice(), &u].concat())?[0];
            }
            let (q, tape) = c
                .critic
                .forward(&[buf.obs[i].as_slice(), &buf.actions[i]].concat())?;
            c.critic
                .backward(&tape, &[2.0 * (q[0] - target) * scale], &mut critic_grads)?;
        }

        let d = c.latent_dim();
        let mut actor_grads = c.actor.zero_grads();
        let mut scratch = c.critic.zero_grads();
        for &i in &idx {
            let obs = &buf.obs[i];
            let (pre, tape) = c.actor.forward(obs)?;
            let u: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
            let (_, ctape) = c.critic.forward(&[obs.as_slice(), &u].concat())?;
            let d_in = c.critic.backward(&ctape, &[-scale], &mut scratch)?;
            let d_pre: Vec<f64> = (0..d)
                .map(|k| d_in[obs.len() + k] * (1.0 - u[k] * u[k]))
                .collect();
            c.actor.backward(&tape, &d_pre, &mut actor_grads)?;
        }

        clip_grad_norm(&mut [&mut critic_grads], cfg.max_grad_norm);
        clip_grad_norm(&mut [&mut actor_grads], cfg.max_grad_norm);
        let c = &mut self.composer;
        self.critic_opt.step(
            c.critic.params_mut().values_mut(),
            &critic_grads,
            cfg.critic_lr,
        )?;
        self.actor_opt.step(
            c.actor.params_mut().values_mut(),
            &actor_grads,
            cfg.actor_lr,
        )?;
        polyak(&mut self.target_critic, &c.critic, cfg.tau);
        polyak(&mut self.target_actor, &c.actor, cfg.tau);
        Ok(())
    }
}

fn polyak(target: &mut Mlp, online: &Mlp, tau: f64) {
    for (t, o) in target
        .params_mut()
        .values_mut()
        .iter_mut()
        .zip(online.params().values())
    {
        *t = (1.0 - tau) * *t + tau * o;
    }
}

/// Trains a composer to reach `goal` with the library frozen. Episodes start
/// from the environment's reset state and end at the goal radius or the
/// horizon; reaching the goal is terminal, the horizon is not.
pub fn train_composer<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    goal: Goal,
    cfg: &ComposerConfig,
) -> Result<ComposerRun> {
    cfg.validate()?;
    if !(goal[0].is_finite() && goal[1].is_finite()) {
        return Err(Error::NonFinite {
            what: "composer goal".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let composer = DdpgComposer::new(library, env.obs_dim(), cfg, &mut rng)?;
    let mut learner = Learner {
        target_actor: composer.actor.clone(),
        target_critic: composer.critic.clone(),
        actor_opt: Adam::new(composer.actor.params().len()),
        critic_opt: Adam::new(composer.critic.params().len()),
        composer,
    };
    let d = library.latent_dim();
    let mut buf = ReplayBuffer::new(cfg.replay_capacity);
    let mut curve = Vec::new();
    let mut updates = 0;

    let mut state = env.reset_state(&mut rng);
    let mut ep_return = 0.0;
    let mut ep_steps = 0;
    for step in 0..cfg.total_steps {
        let obs = env.observe(&state);
        let u: Vec<f64> = if step < cfg.warmup_steps {
            (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            let proto = learner.composer.proto(&obs)?;
            proto
                .iter()
                .map(|p| {
                    let e: f64 = rng.sample(StandardNormal);
                    (p + cfg.exploration_noise * e).clamp(-1.0, 1.0)
                })
                .collect()
        };
        let u = learner.composer.resolve(&obs, &u)?;
        let z = learner.composer.to_latent(&u);
        let res = library.step(env, &state, &z, goal, ActionMode::Mean, &mut rng)?;
        let reached = res.distance < env.tolerance();
        ep_return += res.reward;
        ep_steps += 1;
        buf.push(obs, u, res.reward, env.observe(&res.next), reached);
        state = res.next;

        if step >= cfg.warmup_steps && buf.len() >= cfg.batch_size {
            learner.update(&buf, cfg, &mut rng)?;
            updates += 1;
        }

        if reached || ep_steps >= env.horizon() {
            curve.push(EpisodeRecord {
                episode: curve.len(),
                env_steps: step + 1,
                steps: ep_steps,
                episode_return: ep_return,
                final_distance: res.distance,
                success: reached,
            });
            state = env.reset_state(&mut rng);
            ep_return = 0.0;
            ep_steps = 0;
        }
    }
    if !learner.composer.actor.params().all_finite()
        || !learner.composer.critic.params().all_finite()
    {
        return Err(Error::Divergence {
            iteration: updates,
            reason: "non-finite composer parameters".into(),
        });
    }
    Ok(ComposerRun {
        composer: learner.composer,
        curve,
        env_steps: cfg.total_steps,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{PointConfig, PointEnv};
    use crate::trainer::{EmbeddingModel, TrainConfig};

    fn library() -> FrozenSkillLibrary {
        let model = EmbeddingModel::new(
            &TrainConfig::default(),
            2,
            2,
            3,
            &mut ChaCha8Rng::seed_from_u64(5),
        )
        .unwrap();
        FrozenSkillLibrary::new(model).unwrap()
    }

    #[test]
    fn catalog_is_means_and_midpoints() {
        let lib = library();
        let cat = discrete_catalog(&lib);
        assert_eq!(cat.len(), 3 + 3);
        let m = lib.mean_latents();
        assert_eq!(
            cat[3],
            vec![0.5 * (m[0][0] + m[1][0]), 0.5 * (m[0][1] + m[1][1])]
        );
        assert_eq!(
            cat[5],
            vec![0.5 * (m[1][0] + m[2][0]), 0.5 * (m[1][1] + m[2][1])]
        );
    }

    #[test]
    fn replay_wraps_at_capacity() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(vec![i as f64], vec![0.0], i as f64, vec![0.0], false);
        }
        assert_eq!(b.len(), 3);
        let mut r: Vec<f64> = (0..3).map(|i| b.reward(i)).collect();
        r.sort_by(f64::total_cmp);
        assert_eq!(r, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn unit_latent_round_trip() {
        let lib = library();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = DdpgComposer::new(&lib, 2, &ComposerConfig::default(), &mut rng).unwrap();
        let z = c.to_latent(&[0.3, -0.7]);
        let u = c.to_unit(&z);
        assert!((u[0] - 0.3).abs() < 1e-12 && (u[1] + 0.7).abs() < 1e-12);
        assert_eq!(c.to_latent(&[-1.0, 1.0]), vec![c.lo[0], c.hi[1]]);
    }

    #[test]
    fn discrete_mode_emits_only_catalog_latents() {
        let lib = library();
        let cfg = ComposerConfig {
            mode: ComposerMode::Discrete,
            ..ComposerConfig::default()
        };
        let c = DdpgComposer::new(&lib, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let cat = discrete_catalog(&lib);
        for obs in [[0.0, 0.0], [1.5, -0.3], [-2.0, 2.0]] {
            let z = c.latent(&obs).unwrap();
            assert!(cat
                .iter()
                .any(|e| e.iter().zip(&z).all(|(a, b)| (a - b).abs() < 1e-9)));
        }
    }

    #[test]
    fn snapping_picks_nearest() {
        let lib = library();
        let cfg = ComposerConfig {
            mode: ComposerMode::Discrete,
            ..ComposerConfig::default()
        };
        let c = DdpgComposer::new(&lib, 2, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for (i, e) in c.catalog.iter().enumerate() {
            let nudged: Vec<f64> = e.iter().map(|v| v + 1e-6).collect();
            assert_eq!(c.resolve(&[0.0, 0.0], &nudged).unwrap(), c.catalog[i]);
        }
    }

    #[test]
    fn training_is_deterministic_and_leaves_library_untouched() {
        let lib = library();
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let before = lib.fingerprint();
        let cfg = ComposerConfig {
            total_steps: 400,
            warmup_steps: 100,
            batch_size: 16,
            replay_capacity: 1000,
            hidden: vec![8],
            ..ComposerConfig::default()
        };
        let a = train_composer(&lib, &env, [1.0, 0.5], &cfg).unwrap();
        let b = train_composer(&lib, &env, [1.0, 0.5], &cfg).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(
            a.composer.actor.params().values(),
            b.composer.actor.params().values()
        );
        assert_eq!(a.updates, 300);
        assert_eq!(lib.fingerprint(), before);
    }

    #[test]
    fn buffer_smaller_than_batch_never_updates() {
        let lib = library();
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let cfg = ComposerConfig {
            total_steps: 200,
            warmup_steps: 0,
            batch_size: 64,
            replay_capacity: 32,
            hidden: vec![4],
            ..ComposerConfig::default()
        };
        let run = train_composer(&lib, &env, [1.0, 0.5], &cfg).unwrap();
        assert_eq!(run.updates, 0);
    }

    #[test]
    fn invalid_config_names_field() {
        let cfg = ComposerConfig {
            tau: 2.0,
            ..ComposerConfig::default()
        };
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("composer.tau"));
    }

    /// Finite-difference check of the actor's chain rule through tanh and
    /// the critic's action input.
    #[test]
    fn actor_gradient_matches_finite_differences() {
        let lib = library();
        let mut c = DdpgComposer::new(
            &lib,
            2,
            &ComposerConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        for v in c.actor.params_mut().values_mut() {
            *v *= 5.0;
        }
        let obs = [0.4, -0.9];
        let objective = |actor: &Mlp| {
            let u: Vec<f64> = actor
                .predict(&obs)
                .unwrap()
                .iter()
                .map(|v| v.tanh())
                .collect();
            -c.critic.predict(&[obs.as_slice(), &u].concat()).unwrap()[0]
        };
        let (pre, tape) = c.actor.forward(&obs).unwrap();
        let u: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
        let (_, ctape) = c.critic.forward(&[obs.as_slice(), &u].concat()).unwrap();
        let mut scratch = c.critic.zero_grads();
        let d_in = c.critic.backward(&ctape, &[-1.0], &mut scratch).unwrap();
        let d_pre: Vec<f64> = (0..2).map(|k| d_in[2 + k] * (1.0 - u[k] * u[k])).collect();
        let mut g = c.actor.zero_grads();
        c.actor.backward(&tape, &d_pre, &mut g).unwrap();

        let h = 1e-6;
        for i in 0..g.len() {
            let mut p = c.actor.clone();
            p.params_mut().values_mut()[i] += h;
            let mut m = c.actor.clone();
            m.params_mut().values_mut()[i] -= h;
            let fd = (objective(&p) - objective(&m)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-6 + 1e-4 * fd.abs(),
                "param {i}: {fd} vs {}",
                g[i]
            );
        }
    }
}
