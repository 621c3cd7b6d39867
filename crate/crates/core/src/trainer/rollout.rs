//! Rollout collection with the latent-augmented reward.

use rand::Rng;

use super::{EmbeddingModel, TrainConfig};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::nn::DiagGaussian;

/// The trailing `H` observations, oldest first, zero-padded at episode start.
#[derive(Debug, Clone)]
pub struct StateWindow {
    obs_dim: usize,
    len: usize,
    buf: Vec<f64>,
}

impl StateWindow {
    pub fn new(obs_dim: usize, len: usize) -> Self {
        Self {
            obs_dim,
            len,
            buf: vec![0.0; obs_dim * len],
        }
    }

    pub fn push(&mut self, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        self.buf.drain(..self.obs_dim);
        self.buf.extend_from_slice(obs);
    }

    pub fn flat(&self) -> &[f64] {
        &self.buf
    }

    pub fn capacity(&self) -> usize {
        self.len
    }
}

/// The four summands of the augmented reward, before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub embedding_entropy: f64,
    pub inference_log_lik: f64,
    pub policy_entropy: f64,
    pub task_reward: f64,
}

impl RewardTerms {
    pub fn total(&self, cfg: &TrainConfig) -> f64 {
        cfg.alpha1 * self.embedding_entropy
            + cfg.alpha2 * self.inference_log_lik
            + cfg.alpha3 * self.policy_entropy
            + self.task_reward
    }

    /// Everything except the task reward.
    pub fn bonus(&self, cfg: &TrainConfig) -> f64 {
        cfg.alpha1 * self.embedding_entropy
            + cfg.alpha2 * self.inference_log_lik
            + cfg.alpha3 * self.policy_entropy
    }
}

/// Computes each closed-form term of the augmented reward for one step.
pub fn reward_terms(
    model: &EmbeddingModel,
    task_reward: f64,
    window: &[f64],
    z: &[f64],
    task: usize,
    policy_dist: &DiagGaussian,
) -> Result<RewardTerms> {
    let terms = RewardTerms {
        embedding_entropy: model.embedding_dist(task)?.entropy(),
        inference_log_lik: model.inference_dist(window)?.log_prob(z)?,
        policy_entropy: policy_dist.entropy(),
        task_reward,
    };
    for (name, v) in [
        ("embedding entropy", terms.embedding_entropy),
        ("inference log-likelihood", terms.inference_log_lik),
        ("policy entropy", terms.policy_entropy),
        ("task reward", terms.task_reward),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: format!("augmented reward term `{name}`"),
            });
        }
    }
    Ok(terms)
}

/// `α₁·H[p(z|t)] + α₂·log q(z|window) + α₃·H[π(·|s,z)] + r_t`.
pub fn augmented_reward(
    model: &EmbeddingModel,
    cfg: &TrainConfig,
    task_reward: f64,
    window: &[f64],
    z: &[f64],
    task: usize,
    policy_dist: &DiagGaussian,
) -> Result<f64> {
    Ok(reward_terms(model, task_reward, window, z, task, policy_dist)?.total(cfg))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub obs: Vec<f64>,
    /// Unit-scale action as sampled from the policy (before env clamping).
    pub action: Vec<f64>,
    pub task_reward: f64,
    pub augmented_reward: f64,
    pub terms: RewardTerms,
    pub policy_logprob: f64,
    pub value_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub skill: usize,
    /// The single latent shared by every step.
    pub latent: Vec<f64>,
    pub latent_logprob: f64,
    pub steps: Vec<RolloutStep>,
    /// Flattened trailing window `s_i^H` for each step.
    pub windows: Vec<Vec<f64>>,
    /// Observation after the last step.
    pub final_obs: Vec<f64>,
    pub final_distance: f64,
    pub reached_goal: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn task_return(&self) -> f64 {
        self.steps.iter().map(|s| s.task_reward).sum()
    }

    pub fn augmented_return(&self) -> f64 {
        self.steps.iter().map(|s| s.augmented_reward).sum()
    }
}

/// Runs one episode of skill `task` with a fixed latent `z`. Actions are
/// sampled from the policy.
pub fn run_episode<E: Environment, R: Rng + ?Sized>(
    model: &EmbeddingModel,
    env: &E,
    cfg: &TrainConfig,
    task: usize,
    z: Vec<f64>,
    latent_logprob: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let scale = env.action_scale();
    let goal = env.skills().goal(task)?;
    let mut state = env.reset(task, rng)?;
    let mut window = StateWindow::new(env.obs_dim(), model.window);
    let mut obs = env.observe(&state);
    window.push(&obs);
    let mut steps = Vec::with_capacity(env.horizon());
    let mut windows = Vec::with_capacity(env.horizon());
    let mut final_distance;
    let mut reached = false;
    loop {
        let dist = model.policy_dist(&obs, &z)?;
        let action = dist.sample(rng);
        let policy_logprob = dist.log_prob(&action)?;
        let value_estimate = model.value(&obs, task)?;
        let env_action: Vec<f64> = action.iter().map(|a| a * scale).collect();
        let res = env.step_towards(&state, &env_action, goal)?;
        let terms = reward_terms(model, res.reward, window.flat(), &z, task, &dist)?;
        windows.push(window.flat().to_vec());
        steps.push(RolloutStep {
            obs: obs.clone(),
            action,
            task_reward: res.reward,
            augmented_reward: terms.total(cfg),
            terms,
            policy_logprob,
            value_estimate,
        });
        state = res.next;
        obs = env.observe(&state);
        window.push(&obs);
        final_distance = res.distance;
        if res.distance < env.tolerance() {
            reached = true;
        }
        if res.done {
            break;
        }
    }
    Ok(Trajectory {
        skill: task,
        latent: z,
        latent_logprob,
        steps,
        windows,
        final_obs: obs,
        final_distance,
        reached_goal: reached,
    })
}

/// Collects whole episodes until at least `cfg.batch_steps` transitions are
/// gathered. Each episode draws a skill uniformly and one latent from the
/// embedding, held for the entire episode.
pub fn collect_rollouts<E: Environment, R: Rng + ?Sized>(
    model: &EmbeddingModel,
    env: &E,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<Vec<Trajectory>> {
    let n = env.skills().len();
    let mut batch = Vec::new();
    let mut total = 0;
    while total < cfg.batch_steps {
        let task = rng.random_range(0..n);
        let (z, lp) = model.sample_skill_latent(task, rng)?;
        let traj = run_episode(model, env, cfg, task, z, lp, rng)?;
        total += traj.len();
        batch.push(traj);
    }
    Ok(batch)
}

/// Generalised advantage estimates over the augmented rewards of one
/// trajectory. The value after the final step is taken to be zero.
/// Returns `(advantages, returns)`.
pub fn gae_advantages(traj: &Trajectory, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = traj.steps.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for i in (0..n).rev() {
        let next_value = if i + 1 < n {
            traj.steps[i + 1].value_estimate
        } else {
            0.0
        };
        let s = &traj.steps[i];
        let delta = s.augmented_reward + gamma * next_value - s.value_estimate;
        running = delta + gamma * lambda * running;
        adv[i] = running;
    }
    let returns = adv
        .iter()
        .zip(&traj.steps)
        .map(|(a, s)| a + s.value_estimate)
        .collect();
    (adv, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{PointConfig, PointEnv};
    use crate::nn::LogStdBounds;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (EmbeddingModel, PointEnv, TrainConfig) {
        let cfg = TrainConfig::default();
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let model = EmbeddingModel::new(&cfg, 2, 2, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        (model, env, cfg)
    }

    fn step(reward: f64, value: f64) -> RolloutStep {
        RolloutStep {
            obs: vec![0.0, 0.0],
            action: vec![0.0, 0.0],
            task_reward: reward,
            augmented_reward: reward,
            terms: RewardTerms {
                embedding_entropy: 0.0,
                inference_log_lik: 0.0,
                policy_entropy: 0.0,
                task_reward: reward,
            },
            policy_logprob: 0.0,
            value_estimate: value,
        }
    }

    fn traj(steps: Vec<RolloutStep>) -> Trajectory {
        Trajectory {
            skill: 0,
            latent: vec![0.0],
            latent_logprob: 0.0,
            windows: vec![vec![]; steps.len()],
            steps,
            final_obs: vec![],
            final_distance: 0.0,
            reached_goal: false,
        }
    }

    #[test]
    fn window_keeps_latest_states() {
        let mut w = StateWindow::new(2, 3);
        w.push(&[1.0, 1.0]);
        assert_eq!(w.flat(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        w.push(&[2.0, 2.0]);
        w.push(&[3.0, 3.0]);
        w.push(&[4.0, 4.0]);
        assert_eq!(w.flat(), &[2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn ablation_returns_task_reward() {
        let (model, _, _) = setup();
        let cfg = TrainConfig {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            ..TrainConfig::default()
        };
        let dist = model.policy_dist(&[0.0, 0.0], &[0.1, 0.2]).unwrap();
        let r = augmented_reward(&model, &cfg, -3.25, &[0.0; 8], &[0.1, 0.2], 1, &dist).unwrap();
        assert_eq!(r, -3.25);
    }

    #[test]
    fn weighted_sum_arithmetic() {
        let terms = RewardTerms {
            embedding_entropy: 1.4189,
            inference_log_lik: -0.9189,
            policy_entropy: 2.8379,
            task_reward: -5.0,
        };
        let cfg = TrainConfig {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 1.0,
            ..TrainConfig::default()
        };
        assert!((terms.total(&cfg) - (-1.6621)).abs() < 1e-12);
    }

    #[test]
    fn augmented_reward_matches_term_oracle() {
        let (model, _, _) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let cfg = TrainConfig {
                alpha1: rng.random_range(0.0..1.0),
                alpha2: rng.random_range(0.0..1.0),
                alpha3: rng.random_range(0.0..1.0),
                ..TrainConfig::default()
            };
            let t = rng.random_range(0..4);
            let z = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let window: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            let r_t = rng.random_range(-3.0..0.0);
            let pol = DiagGaussian::new(
                vec![0.0, 0.0],
                vec![rng.random_range(-2.0..0.5), rng.random_range(-2.0..0.5)],
                LogStdBounds::default(),
            )
            .unwrap();
            // independent recomputation from raw network heads
            let e = model.embedding.predict(&model.one_hot(t).unwrap()).unwrap();
            let h_emb: f64 = e[2..]
                .iter()
                .map(|s| s.clamp(-5.0, 2.0) + 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5)
                .sum();
            let q = model.inference.predict(&window).unwrap();
            let mut logq = 0.0;
            for d in 0..2 {
                let s = q[2 + d].clamp(-5.0, 2.0);
                logq += -s
                    - 0.5 * (2.0 * std::f64::consts::PI).ln()
                    - 0.5 * ((z[d] - q[d]) / s.exp()).powi(2);
            }
            let h_pol: f64 = pol
                .log_std()
                .iter()
                .map(|s| s + 0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5)
                .sum();
            let want = cfg.alpha1 * h_emb + cfg.alpha2 * logq + cfg.alpha3 * h_pol + r_t;
            let got = augmented_reward(&model, &cfg, r_t, &window, &z, t, &pol).unwrap();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn non_finite_term_is_named() {
        let (model, _, cfg) = setup();
        let dist = model.policy_dist(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        let err =
            augmented_reward(&model, &cfg, f64::NAN, &[0.0; 8], &[0.0, 0.0], 0, &dist).unwrap_err();
        assert!(err.to_string().contains("task reward"), "{err}");
        let err = augmented_reward(
            &model,
            &cfg,
            0.0,
            &[0.0; 8],
            &[f64::INFINITY, 0.0],
            0,
            &dist,
        )
        .unwrap_err();
        assert!(err.to_string().contains("inference"), "{err}");
    }

    #[test]
    fn batch_bookkeeping() {
        let (model, env, _) = setup();
        let cfg = TrainConfig {
            batch_steps: 1024,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let batch = collect_rollouts(&model, &env, &cfg, &mut rng).unwrap();
        assert!(batch.len() >= 16);
        assert!(batch.iter().map(Trajectory::len).sum::<usize>() >= 1024);
        for t in &batch {
            assert!(t.len() <= 64);
            assert_eq!(t.windows.len(), t.len());
            // window i holds min(i+1, H) real states; earlier slots are zero
            assert_eq!(&t.windows[0][..6], &[0.0; 6]);
            assert_eq!(&t.windows[0][6..], t.steps[0].obs.as_slice());
            for s in &t.steps {
                let recomputed = s.terms.total(&cfg);
                assert_eq!(s.augmented_reward, recomputed);
            }
        }
    }

    #[test]
    fn recorded_actions_replay_exactly() {
        let (model, env, cfg) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let batch = collect_rollouts(&model, &env, &cfg, &mut rng).unwrap();
        for t in &batch {
            let mut state = env
                .reset(t.skill, &mut ChaCha8Rng::seed_from_u64(0))
                .unwrap();
            for s in &t.steps {
                assert_eq!(env.observe(&state), s.obs);
                let a: Vec<f64> = s.action.iter().map(|a| a * env.action_scale()).collect();
                let r = env.step(&state, &a, t.skill).unwrap();
                assert_eq!(r.reward, s.task_reward);
                state = r.next;
            }
            assert_eq!(env.observe(&state), t.final_obs);
        }
    }

    #[test]
    fn gae_edge_cases() {
        let (adv, ret) = gae_advantages(&traj(vec![step(0.0, 0.0); 5]), 0.99, 0.95);
        assert!(adv.iter().all(|a| *a == 0.0));
        assert!(ret.iter().all(|a| *a == 0.0));

        let (adv, _) = gae_advantages(&traj(vec![step(-2.0, 0.5)]), 0.99, 0.95);
        assert_eq!(adv, vec![-2.5]);
    }

    #[test]
    fn gae_lambda_one_is_discounted_return_minus_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let steps: Vec<RolloutStep> = (0..10)
                .map(|_| step(rng.random_range(-2.0..1.0), rng.random_range(-5.0..5.0)))
                .collect();
            let gamma = 0.97;
            let t = traj(steps);
            let (adv, ret) = gae_advantages(&t, gamma, 1.0);
            for i in 0..10 {
                let mut g = 0.0;
                for (k, s) in t.steps[i..].iter().enumerate() {
                    g += gamma.powi(k as i32) * s.augmented_reward;
                }
                assert!((adv[i] - (g - t.steps[i].value_estimate)).abs() < 1e-10);
                assert!((ret[i] - g).abs() < 1e-10);
            }
        }
    }
}
