use rand::Rng;
use rand_distr::StandardNormal;

use super::{distance, Environment, Goal, SkillSet, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    pub goals: Vec<Goal>,
    pub horizon: usize,
    pub tolerance: f64,
    pub max_speed: f64,
    /// Positions are clipped to `[-workspace, workspace]²`.
    pub workspace: f64,
    pub reset_noise: f64,
}

impl Default for PointConfig {
    fn default() -> Self {
        Self {
            goals: vec![[2.0, 0.0], [0.0, 2.0], [-2.0, 0.0], [0.0, -2.0]],
            horizon: 64,
            tolerance: 0.1,
            max_speed: 0.25,
            workspace: 5.0,
            reset_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub position: [f64; 2],
    pub steps: usize,
}

/// A point mass steered by 2D velocity commands.
#[derive(Debug, Clone)]
pub struct PointEnv {
    cfg: PointConfig,
    skills: SkillSet,
}

impl PointEnv {
    pub fn new(cfg: PointConfig) -> Result<Self> {
        let skills = if cfg.goals.len() == 1 {
            SkillSet::single(cfg.goals[0])?
        } else {
            SkillSet::new(cfg.goals.clone())?
        };
        validate(&cfg)?;
        Ok(Self { cfg, skills })
    }

    pub fn config(&self) -> &PointConfig {
        &self.cfg
    }

    /// Scales `action` down to `max_speed` if its norm exceeds it.
    pub fn clamp_action(&self, action: &[f64]) -> [f64; 2] {
        let n = (action[0] * action[0] + action[1] * action[1]).sqrt();
        if n > self.cfg.max_speed {
            let s = self.cfg.max_speed / n;
            [action[0] * s, action[1] * s]
        } else {
            [action[0], action[1]]
        }
    }
}

fn validate(cfg: &PointConfig) -> Result<()> {
    if cfg.horizon == 0 {
        return Err(Error::config("env.horizon", "must be >= 1"));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::config("env.tolerance", "must be > 0"));
    }
    if !(cfg.max_speed > 0.0) {
        return Err(Error::config("env.max_speed", "must be > 0"));
    }
    if !(cfg.workspace > 0.0) {
        return Err(Error::config("env.workspace", "must be > 0"));
    }
    if !(cfg.reset_noise >= 0.0) {
        return Err(Error::config("env.reset_noise", "must be >= 0"));
    }
    for (i, g) in cfg.goals.iter().enumerate() {
        if g[0].abs() > cfg.workspace || g[1].abs() > cfg.workspace {
            return Err(Error::config(
                format!("env.goals[{i}]"),
                "outside the workspace box",
            ));
        }
    }
    Ok(())
}

impl Environment for PointEnv {
    type State = PointState;

    fn skills(&self) -> &SkillSet {
        &self.skills
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn tolerance(&self) -> f64 {
        self.cfg.tolerance
    }

    fn action_scale(&self) -> f64 {
        self.cfg.max_speed
    }

    fn reset_state<R: Rng + ?Sized>(&self, rng: &mut R) -> PointState {
        let mut position = [0.0, 0.0];
        if self.cfg.reset_noise > 0.0 {
            let w = self.cfg.workspace;
            for p in &mut position {
                let eps: f64 = rng.sample(StandardNormal);
                *p = (self.cfg.reset_noise * eps).clamp(-w, w);
            }
        }
        PointState { position, steps: 0 }
    }

    fn observe(&self, state: &PointState) -> Vec<f64> {
        state.position.to_vec()
    }

    fn task_point(&self, state: &PointState) -> Goal {
        state.position
    }

    fn elapsed(&self, state: &PointState) -> usize {
        state.steps
    }

    fn key_coords(&self, state: &PointState) -> Vec<f64> {
        state.position.to_vec()
    }

    fn step_towards(
        &self,
        state: &PointState,
        action: &[f64],
        goal: Goal,
    ) -> Result<StepResult<PointState>> {
        if action.len() != 2 {
            return Err(Error::dims("point action", 2, action.len()));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite {
                what: "point action".into(),
            });
        }
        let v = self.clamp_action(action);
        let w = self.cfg.workspace;
        let position = [
            (state.position[0] + v[0]).clamp(-w, w),
            (state.position[1] + v[1]).clamp(-w, w),
        ];
        let next = PointState {
            position,
            steps: state.steps + 1,
        };
        let d = distance(position, goal);
        Ok(StepResult {
            next,
            reward: -d,
            done: d < self.cfg.tolerance || next.steps >= self.cfg.horizon,
            distance: d,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env_with_goals(goals: Vec<Goal>) -> PointEnv {
        PointEnv::new(PointConfig {
            goals,
            ..PointConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn three_four_five() {
        let env = env_with_goals(vec![[3.0, 4.0], [-1.0, 0.0]]);
        let s = PointState {
            position: [0.0, 0.0],
            steps: 0,
        };
        let r = env.step(&s, &[0.0, 0.0], 0).unwrap();
        assert_eq!(r.reward, -5.0);
        assert!(!r.done);
    }

    #[test]
    fn at_goal_is_absorbing() {
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let s = PointState {
            position: [2.0, 0.0],
            steps: 3,
        };
        let r = env.step(&s, &[0.0, 0.0], 0).unwrap();
        assert_eq!(r.reward, 0.0);
        assert!(r.done);
    }

    #[test]
    fn rewards_match_distance_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let env = PointEnv::new(PointConfig::default()).unwrap();
        for _ in 0..200 {
            let s = PointState {
                position: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
                steps: 0,
            };
            let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let task = rng.random_range(0..4);
            let r = env.step(&s, &a, task).unwrap();
            let speed = (a[0] * a[0] + a[1] * a[1]).sqrt();
            let k = if speed > 0.25 { 0.25 / speed } else { 1.0 };
            let p = [s.position[0] + a[0] * k, s.position[1] + a[1] * k];
            let g = env.skills().goals()[task];
            let want = -((p[0] - g[0]).hypot(p[1] - g[1]));
            assert!((r.reward - want).abs() < 1e-12);
            assert!(r.reward <= 0.0);
        }
    }

    #[test]
    fn action_is_speed_limited() {
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let s = env.reset(0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let r = env.step(&s, &[10.0, 0.0], 0).unwrap();
        assert!((r.next.position[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn horizon_ends_episode() {
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let mut s = env.reset(1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for i in 0..64 {
            let r = env.step(&s, &[0.0, 0.0], 1).unwrap();
            assert_eq!(r.done, i == 63);
            s = r.next;
        }
    }

    #[test]
    fn reset_is_fixed_or_reproducibly_jittered() {
        let env = PointEnv::new(PointConfig::default()).unwrap();
        for t in 0..4 {
            let s = env
                .reset(t, &mut ChaCha8Rng::seed_from_u64(t as u64))
                .unwrap();
            assert_eq!(s.position, [0.0, 0.0]);
        }
        assert!(env.reset(4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());

        let noisy = PointEnv::new(PointConfig {
            reset_noise: 0.01,
            ..PointConfig::default()
        })
        .unwrap();
        let a = noisy.reset(0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = noisy.reset(0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.position, [0.0, 0.0]);
        assert!(a.position[0].abs() < 0.1);
    }

    #[test]
    fn invalid_task_is_an_error() {
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let s = PointState {
            position: [0.0, 0.0],
            steps: 0,
        };
        assert!(matches!(
            env.step(&s, &[0.0, 0.0], 9),
            Err(Error::InvalidTask { .. })
        ));
    }
}
