//! Two-link planar arm commanded by incremental joint movements.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use super::{distance, Environment, Goal, SkillSet, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ArmConfig {
    pub link_lengths: [f64; 2],
    pub home: [f64; 2],
    pub joint_min: [f64; 2],
    pub joint_max: [f64; 2],
    /// Per-joint bound on a single incremental movement (radians).
    pub max_delta: f64,
    pub goals: Vec<Goal>,
    pub horizon: usize,
    pub tolerance: f64,
    pub reset_noise: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        // square of side 1 centred at (0, 1.3) plus edge midpoints
        let goals = vec![
            [-0.5, 0.8],
            [0.0, 0.8],
            [0.5, 0.8],
            [0.5, 1.3],
            [0.5, 1.8],
            [0.0, 1.8],
            [-0.5, 1.8],
            [-0.5, 1.3],
        ];
        Self {
            link_lengths: [1.0, 1.0],
            home: [FRAC_PI_4, FRAC_PI_2],
            joint_min: [-PI, -PI],
            joint_max: [PI, PI],
            max_delta: 0.04,
            goals,
            horizon: 128,
            tolerance: 0.05,
            reset_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState {
    pub joint_angles: [f64; 2],
    pub steps: usize,
}

/// End-effector position of a planar two-link chain.
pub fn arm_fk(link_lengths: [f64; 2], q: [f64; 2]) -> [f64; 2] {
    let [l1, l2] = link_lengths;
    [
        l1 * q[0].cos() + l2 * (q[0] + q[1]).cos(),
        l1 * q[0].sin() + l2 * (q[0] + q[1]).sin(),
    ]
}

#[derive(Debug, Clone)]
pub struct ArmEnv {
    cfg: ArmConfig,
    skills: SkillSet,
}

impl ArmEnv {
    pub fn new(cfg: ArmConfig) -> Result<Self> {
        validate(&cfg)?;
        let skills = if cfg.goals.len() == 1 {
            SkillSet::single(cfg.goals[0])?
        } else {
            SkillSet::new(cfg.goals.clone())?
        };
        Ok(Self { cfg, skills })
    }

    pub fn config(&self) -> &ArmConfig {
        &self.cfg
    }

    pub fn end_effector(&self, state: &ArmState) -> [f64; 2] {
        arm_fk(self.cfg.link_lengths, state.joint_angles)
    }

    fn clip_joints(&self, q: [f64; 2]) -> [f64; 2] {
        [
            q[0].clamp(self.cfg.joint_min[0], self.cfg.joint_max[0]),
            q[1].clamp(self.cfg.joint_min[1], self.cfg.joint_max[1]),
        ]
    }
}

fn validate(cfg: &ArmConfig) -> Result<()> {
    if cfg.link_lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::config("env.link_lengths", "must be > 0"));
    }
    for j in 0..2 {
        if !(cfg.joint_min[j] < cfg.joint_max[j]) {
            return Err(Error::config(
                "env.joint_min",
                "must be below env.joint_max",
            ));
        }
        if cfg.home[j] < cfg.joint_min[j] || cfg.home[j] > cfg.joint_max[j] {
            return Err(Error::config("env.home", "outside joint limits"));
        }
    }
    if !(cfg.max_delta > 0.0) {
        return Err(Error::config("env.max_delta", "must be > 0"));
    }
    if cfg.horizon == 0 {
        return Err(Error::config("env.horizon", "must be >= 1"));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::config("env.tolerance", "must be > 0"));
    }
    if !(cfg.reset_noise >= 0.0) {
        return Err(Error::config("env.reset_noise", "must be >= 0"));
    }
    let reach = cfg.link_lengths[0] + cfg.link_lengths[1];
    for (i, g) in cfg.goals.iter().enumerate() {
        if g[0].hypot(g[1]) > reach {
            return Err(Error::config(
                format!("env.goals[{i}]"),
                "outside the reachable workspace",
            ));
        }
    }
    Ok(())
}

impl Environment for ArmEnv {
    type State = ArmState;

    fn skills(&self) -> &SkillSet {
        &self.skills
    }

    /// Joint angles followed by the end-effector position.
    fn obs_dim(&self) -> usize {
        4
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
        self.cfg.max_delta
    }

    fn reset_state<R: Rng + ?Sized>(&self, rng: &mut R) -> ArmState {
        let mut q = self.cfg.home;
        if self.cfg.reset_noise > 0.0 {
            for v in &mut q {
                let eps: f64 = rng.sample(StandardNormal);
                *v += self.cfg.reset_noise * eps;
            }
            q = self.clip_joints(q);
        }
        ArmState {
            joint_angles: q,
            steps: 0,
        }
    }

    fn observe(&self, state: &ArmState) -> Vec<f64> {
        let ee = self.end_effector(state);
        vec![state.joint_angles[0], state.joint_angles[1], ee[0], ee[1]]
    }

    fn task_point(&self, state: &ArmState) -> Goal {
        self.end_effector(state)
    }

    fn elapsed(&self, state: &ArmState) -> usize {
        state.steps
    }

    fn key_coords(&self, state: &ArmState) -> Vec<f64> {
        state.joint_angles.to_vec()
    }

    fn step_towards(
        &self,
        state: &ArmState,
        action: &[f64],
        goal: Goal,
    ) -> Result<StepResult<ArmState>> {
        if action.len() != 2 {
            return Err(Error::dims("arm action", 2, action.len()));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite {
                what: "arm action".into(),
            });
        }
        let m = self.cfg.max_delta;
        let q = self.clip_joints([
            state.joint_angles[0] + action[0].clamp(-m, m),
            state.joint_angles[1] + action[1].clamp(-m, m),
        ]);
        let next = ArmState {
            joint_angles: q,
            steps: state.steps + 1,
        };
        let d = distance(arm_fk(self.cfg.link_lengths, q), goal);
        Ok(StepResult {
            next,
            reward: -d,
            done: d < self.cfg.tolerance || next.steps >= self.cfg.horizon,
            distance: d,
        })
    }
}

#[cfg(test)]
#[allow(clippy::manual_clamp)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: [f64; 2], b: [f64; 2]) -> bool {
        (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12
    }

    #[test]
    fn forward_kinematics_cases() {
        assert!(close(arm_fk([1.0, 1.0], [0.0, 0.0]), [2.0, 0.0]));
        assert!(close(arm_fk([1.0, 1.0], [FRAC_PI_2, 0.0]), [0.0, 2.0]));
        assert!(close(arm_fk([1.0, 1.0], [0.0, PI]), [0.0, 0.0]));
    }

    #[test]
    fn zero_action_keeps_distance() {
        let env = ArmEnv::new(ArmConfig::default()).unwrap();
        let s = env.reset(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let before = env.distance_to(&s, env.skills().goals()[3]);
        let r = env.step(&s, &[0.0, 0.0], 3).unwrap();
        assert_eq!(r.reward, -before);
        assert_eq!(r.next.joint_angles, s.joint_angles);
    }

    #[test]
    fn goal_at_current_pose_is_done() {
        let home_ee = arm_fk([1.0, 1.0], [FRAC_PI_4, FRAC_PI_2]);
        let env = ArmEnv::new(ArmConfig {
            goals: vec![home_ee, [0.5, 0.5]],
            ..ArmConfig::default()
        })
        .unwrap();
        let s = env.reset(0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let r = env.step(&s, &[0.0, 0.0], 0).unwrap();
        assert!(r.done);
    }

    #[test]
    fn random_transitions_match_oracle() {
        let env = ArmEnv::new(ArmConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let s = ArmState {
                joint_angles: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
                steps: 0,
            };
            let a = [rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1)];
            let task = rng.random_range(0..8);
            let r = env.step(&s, &a, task).unwrap();
            let q1 = (s.joint_angles[0] + a[0].max(-0.04).min(0.04))
                .max(-PI)
                .min(PI);
            let q2 = (s.joint_angles[1] + a[1].max(-0.04).min(0.04))
                .max(-PI)
                .min(PI);
            let x = q1.cos() + (q1 + q2).cos();
            let y = q1.sin() + (q1 + q2).sin();
            let g = env.skills().goals()[task];
            let want = -((x - g[0]).powi(2) + (y - g[1]).powi(2)).sqrt();
            assert!((r.reward - want).abs() < 1e-12);
            let ee = env.end_effector(&r.next);
            assert!(ee[0].hypot(ee[1]) <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn reset_defaults_to_home() {
        let env = ArmEnv::new(ArmConfig::default()).unwrap();
        for t in 0..8 {
            let s = env.reset(t, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!(s.joint_angles, [FRAC_PI_4, FRAC_PI_2]);
        }
    }

    #[test]
    fn rejects_unreachable_goal() {
        let cfg = ArmConfig {
            goals: vec![[3.0, 0.0], [0.0, 1.0]],
            ..ArmConfig::default()
        };
        assert!(ArmEnv::new(cfg).is_err());
    }
}
