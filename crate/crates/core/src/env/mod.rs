//! Deterministic multi-task environments.
//!
//! Environments are immutable configuration values; all dynamics are pure
//! functions of `(state, action, goal)`, so copies may be stepped freely and a
//! recorded action sequence always replays to the same states.

mod arm;
mod point;
mod skills;

pub use arm::{arm_fk, ArmConfig, ArmEnv, ArmState};
pub use point::{PointConfig, PointEnv, PointState};
pub use skills::{distance, Goal, SkillSet};

use std::fmt::Debug;

use rand::Rng;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub next: S,
    /// Negative task-space distance to the active goal after the transition.
    pub reward: f64,
    /// Goal reached or horizon exhausted.
    pub done: bool,
    pub distance: f64,
}

pub trait Environment: Clone + Debug + Send + Sync {
    type State: Clone + Debug + PartialEq + Send + Sync;

    fn skills(&self) -> &SkillSet;
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Multiplier from unit policy outputs to environment actions.
    fn action_scale(&self) -> f64;
    /// Goal-reaching radius used for `done` and for success checks.
    fn tolerance(&self) -> f64;

    /// The fixed start state, optionally jittered by the configured noise.
    fn reset_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn observe(&self, state: &Self::State) -> Vec<f64>;

    /// Task-space position the reward is measured from.
    fn task_point(&self, state: &Self::State) -> Goal;

    /// Number of transitions taken since reset.
    fn elapsed(&self, state: &Self::State) -> usize;

    /// Coordinates used for duplicate detection during search.
    fn key_coords(&self, state: &Self::State) -> Vec<f64>;

    /// One transition towards an arbitrary task-space goal.
    fn step_towards(
        &self,
        state: &Self::State,
        action: &[f64],
        goal: Goal,
    ) -> Result<StepResult<Self::State>>;

    fn reset<R: Rng + ?Sized>(&self, task: usize, rng: &mut R) -> Result<Self::State> {
        self.skills().check(task)?;
        Ok(self.reset_state(rng))
    }

    fn step(
        &self,
        state: &Self::State,
        action: &[f64],
        task: usize,
    ) -> Result<StepResult<Self::State>> {
        let goal = self.skills().goal(task)?;
        self.step_towards(state, action, goal)
    }

    fn distance_to(&self, state: &Self::State, goal: Goal) -> f64 {
        distance(self.task_point(state), goal)
    }
}
