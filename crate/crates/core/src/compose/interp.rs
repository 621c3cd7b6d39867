//! Steering the frozen policy with convex combinations of latents.

use rand::Rng;

use super::{ActionMode, ExecutedTrace, FrozenSkillLibrary, TraceRow};
use crate::env::{Environment, Goal};
use crate::error::{Error, Result};

/// `λ z_a + (1 − λ) z_b`.
pub fn blend(z_a: &[f64], z_b: &[f64], lambda: f64) -> Vec<f64> {
    z_a.iter()
        .zip(z_b)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect()
}

/// Hold `z_a`, ramp λ from 1 down to 0, then hold `z_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSchedule {
    pub z_a: Vec<f64>,
    pub z_b: Vec<f64>,
    pub hold_steps: usize,
    pub ramp_steps: usize,
}

impl InterpolationSchedule {
    pub fn new(z_a: Vec<f64>, z_b: Vec<f64>, hold_steps: usize, ramp_steps: usize) -> Result<Self> {
        if z_a.len() != z_b.len() {
            return Err(Error::dims("interpolation endpoint", z_a.len(), z_b.len()));
        }
        if z_a.iter().chain(&z_b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "interpolation endpoint".into(),
            });
        }
        Ok(Self {
            z_a,
            z_b,
            hold_steps,
            ramp_steps,
        })
    }

    pub fn len(&self) -> usize {
        2 * self.hold_steps + self.ramp_steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// λ at step `i`. During the ramp λ takes `1 − (k+1)/ramp_steps`, so the
    /// last ramp step already feeds `z_b`.
    pub fn lambda(&self, i: usize) -> f64 {
        if i < self.hold_steps {
            1.0
        } else if i < self.hold_steps + self.ramp_steps {
            let k = i - self.hold_steps;
            1.0 - (k + 1) as f64 / self.ramp_steps as f64
        } else {
            0.0
        }
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.lambda(i)).collect()
    }

    pub fn latent(&self, i: usize) -> Vec<f64> {
        blend(&self.z_a, &self.z_b, self.lambda(i))
    }
}

/// Runs each schedule in turn from `start`, in closed loop. Row segments are
/// the schedule index. The environment's `done` flag is ignored; every
/// scheduled step is executed.
pub fn interpolate_execute<E: Environment, R: Rng + ?Sized>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    schedules: &[InterpolationSchedule],
    goal: Goal,
    mode: ActionMode,
    rng: &mut R,
) -> Result<ExecutedTrace> {
    let mut rows = Vec::new();
    let mut state = start.clone();
    let mut t = 0;
    for (segment, sched) in schedules.iter().enumerate() {
        library.check_latent(&sched.z_a)?;
        for i in 0..sched.len() {
            let z = sched.latent(i);
            let obs = env.observe(&state);
            let res = library.step(env, &state, &z, goal, mode, rng)?;
            rows.push(TraceRow {
                segment,
                t,
                obs,
                latent: z,
                reward: res.reward,
                distance: res.distance,
            });
            state = res.next;
            t += 1;
        }
    }
    Ok(ExecutedTrace::finish(env, rows, &state, goal))
}

/// Feeds one fixed latent for `steps` transitions, stopping early once the
/// goal is within tolerance when `stop_at_goal` is set.
#[allow(clippy::too_many_arguments)]
pub fn execute_fixed<E: Environment, R: Rng + ?Sized>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    z: &[f64],
    steps: usize,
    goal: Goal,
    mode: ActionMode,
    stop_at_goal: bool,
    segment: usize,
    rng: &mut R,
) -> Result<(ExecutedTrace, E::State)> {
    library.check_latent(z)?;
    let mut rows = Vec::with_capacity(steps);
    let mut state = start.clone();
    for t in 0..steps {
        let obs = env.observe(&state);
        let res = library.step(env, &state, z, goal, mode, rng)?;
        rows.push(TraceRow {
            segment,
            t,
            obs,
            latent: z.to_vec(),
            reward: res.reward,
            distance: res.distance,
        });
        state = res.next;
        if stop_at_goal && res.distance < env.tolerance() {
            break;
        }
    }
    Ok((ExecutedTrace::finish(env, rows, &state, goal), state))
}
