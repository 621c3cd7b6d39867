//! Driving a frozen skill library through its latent input.
//!
//! Nothing here mutates the policy or the embedding: every composer borrows a
//! [`FrozenSkillLibrary`] immutably and only chooses which latent to feed.

mod ddpg;
mod eval;
mod interp;
mod library;
mod ucs;

pub use ddpg::{
    discrete_catalog, train_composer, ComposerConfig, ComposerMode, ComposerRun, DdpgComposer,
    EpisodeRecord, ReplayBuffer,
};
pub use eval::{execute_composed, EpisodeEval, EvalReport, FixedLatent, LatentComposer};
pub use interp::{blend, execute_fixed, interpolate_execute, InterpolationSchedule};
pub use library::{ActionMode, FrozenSkillLibrary};
pub use ucs::{
    apply_option, cell_centre, execute_plan, plan_tour, ucs_plan, ucs_plan_with, visited_key, Plan,
    PlanConfig, PlanStep,
};

use crate::env::{Environment, Goal};

/// One executed transition.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    /// Schedule, plan step or episode index, depending on the caller.
    pub segment: usize,
    pub t: usize,
    /// Observation before the transition.
    pub obs: Vec<f64>,
    pub latent: Vec<f64>,
    pub reward: f64,
    /// Distance to the reporting goal after the transition.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedTrace {
    pub rows: Vec<TraceRow>,
    pub final_point: Goal,
    pub final_distance: f64,
}

impl ExecutedTrace {
    pub(crate) fn finish<E: Environment>(
        env: &E,
        rows: Vec<TraceRow>,
        state: &E::State,
        goal: Goal,
    ) -> Self {
        Self {
            rows,
            final_point: env.task_point(state),
            final_distance: env.distance_to(state, goal),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.reward).sum()
    }
}
