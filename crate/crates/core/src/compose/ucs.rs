//! Uniform-cost search over sequences of skill options.
//!
//! An option holds one skill's mean latent for a fixed number of steps with
//! mean actions, so expanding a node is deterministic and a plan replays to
//! exactly the state the search saw.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ActionMode, ExecutedTrace, FrozenSkillLibrary, TraceRow};
use crate::env::{Environment, Goal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanConfig {
    /// Steps per option (K).
    pub option_duration: usize,
    /// Expansion budget before giving up.
    pub max_nodes: usize,
    /// Longest option sequence considered.
    pub max_depth: usize,
    /// Grid cell size for duplicate detection on `key_coords`.
    pub resolution: f64,
    /// Goal radius; `None` uses the environment's tolerance.
    pub tolerance: Option<f64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            option_duration: 16,
            max_nodes: 10_000,
            max_depth: 8,
            resolution: 0.05,
            tolerance: None,
        }
    }
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.option_duration == 0 {
            return Err(Error::config("plan.option_duration", "must be >= 1"));
        }
        if self.max_nodes == 0 {
            return Err(Error::config("plan.max_nodes", "must be >= 1"));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::config(
                "plan.resolution",
                "must be a positive number",
            ));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(Error::config("plan.tolerance", "must be > 0"));
            }
        }
        Ok(())
    }

    fn radius<E: Environment>(&self, env: &E) -> f64 {
        self.tolerance.unwrap_or_else(|| env.tolerance())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub skill: usize,
    pub latent: Vec<f64>,
    /// Transitions actually executed; fewer than K if the goal was hit.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan<S> {
    pub steps: Vec<PlanStep>,
    pub cost: f64,
    pub expanded: usize,
    pub terminal: S,
    pub terminal_distance: f64,
}

impl<S> Plan<S> {
    pub fn skills(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.skill).collect()
    }

    pub fn total_steps(&self) -> usize {
        self.steps.iter().map(|s| s.steps).sum()
    }
}

/// Grid cell of `coords` at the given resolution.
pub fn visited_key(coords: &[f64], resolution: f64) -> Vec<i64> {
    coords
        .iter()
        .map(|c| (c / resolution).floor() as i64)
        .collect()
}

/// Centre of a grid cell; inverse of [`visited_key`] up to half a cell.
pub fn cell_centre(key: &[i64], resolution: f64) -> Vec<f64> {
    key.iter().map(|&k| (k as f64 + 0.5) * resolution).collect()
}

#[allow(clippy::too_many_arguments)]
fn run_option<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    state: &E::State,
    z: &[f64],
    goal: Goal,
    duration: usize,
    radius: f64,
    mut record: Option<(&mut Vec<TraceRow>, usize, &mut usize)>,
) -> Result<(E::State, usize)> {
    // Mean actions never touch the generator.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = state.clone();
    for k in 0..duration {
        let obs = env.observe(&s);
        let res = library.step(env, &s, z, goal, ActionMode::Mean, &mut rng)?;
        if let Some((rows, segment, t)) = record.as_mut() {
            rows.push(TraceRow {
                segment: *segment,
                t: **t,
                obs,
                latent: z.to_vec(),
                reward: res.reward,
                distance: res.distance,
            });
            **t += 1;
        }
        s = res.next;
        if res.distance < radius {
            return Ok((s, k + 1));
        }
    }
    Ok((s, duration))
}

/// Runs skill `skill`'s mean latent for up to `option_duration` steps,
/// stopping as soon as the goal radius is entered.
pub fn apply_option<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    state: &E::State,
    skill: usize,
    goal: Goal,
    cfg: &PlanConfig,
) -> Result<(E::State, usize)> {
    let z = library.mean_latent(skill)?;
    run_option(
        library,
        env,
        state,
        z,
        goal,
        cfg.option_duration,
        cfg.radius(env),
        None,
    )
}

struct Node<S> {
    state: S,
    cost: f64,
    options: Vec<usize>,
    steps: Vec<usize>,
}

struct Frontier {
    cost: f64,
    options: Vec<usize>,
    node: usize,
}

// Min-heap on (cost, option sequence).
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.options.cmp(&self.options))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

/// Uniform-cost search with a constant cost of K per option.
pub fn ucs_plan<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    goal: Goal,
    cfg: &PlanConfig,
) -> Result<Plan<E::State>> {
    let k = cfg.option_duration as f64;
    ucs_plan_with(library, env, start, goal, cfg, |_| k)
}

/// Uniform-cost search with a caller-supplied non-negative option cost.
/// Equal-cost ties go to the lexicographically smaller option sequence. The
/// goal test happens when a node is popped, so the first goal popped is
/// cost-optimal among plans whose prefixes survive duplicate pruning.
pub fn ucs_plan_with<E: Environment, C: Fn(&PlanStep) -> f64>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    goal: Goal,
    cfg: &PlanConfig,
    cost: C,
) -> Result<Plan<E::State>> {
    cfg.validate()?;
    let radius = cfg.radius(env);
    let n = library.num_skills();

    let mut nodes = vec![Node {
        state: start.clone(),
        cost: 0.0,
        options: Vec::new(),
        steps: Vec::new(),
    }];
    let mut heap = BinaryHeap::new();
    heap.push(Frontier {
        cost: 0.0,
        options: Vec::new(),
        node: 0,
    });
    let mut closed: HashSet<Vec<i64>> = HashSet::new();
    let mut expanded = 0;
    let mut nearest = (env.distance_to(start, goal), 0usize);

    while let Some(entry) = heap.pop() {
        let node = &nodes[entry.node];
        let d = env.distance_to(&node.state, goal);
        if d < radius {
            let steps = node
                .options
                .iter()
                .zip(&node.steps)
                .map(|(&skill, &steps)| {
                    Ok(PlanStep {
                        skill,
                        latent: library.mean_latent(skill)?.to_vec(),
                        steps,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Plan {
                steps,
                cost: node.cost,
                expanded,
                terminal: node.state.clone(),
                terminal_distance: d,
            });
        }
        if !closed.insert(visited_key(&env.key_coords(&node.state), cfg.resolution)) {
            continue;
        }
        if node.options.len() >= cfg.max_depth {
            continue;
        }
        if expanded >= cfg.max_nodes {
            return Err(failure(
                "node budget exhausted",
                expanded,
                &nodes[nearest.1].options,
                nearest.0,
            ));
        }
        expanded += 1;

        let parent = entry.node;
        for skill in 0..n {
            let p = &nodes[parent];
            let z = library.mean_latent(skill)?;
            let (state, steps) = run_option(
                library,
                env,
                &p.state,
                z,
                goal,
                cfg.option_duration,
                radius,
                None,
            )?;
            let step = PlanStep {
                skill,
                latent: z.to_vec(),
                steps,
            };
            let c = cost(&step);
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::config(
                    "plan.cost",
                    format!("option cost must be finite and >= 0, got {c}"),
                ));
            }
            let mut options = p.options.clone();
            options.push(skill);
            let mut step_counts = p.steps.clone();
            step_counts.push(steps);
            let child_cost = p.cost + c;
            let cd = env.distance_to(&state, goal);
            let idx = nodes.len();
            if cd < nearest.0 {
                nearest = (cd, idx);
            }
            heap.push(Frontier {
                cost: child_cost,
                options: options.clone(),
                node: idx,
            });
            nodes.push(Node {
                state,
                cost: child_cost,
                options,
                steps: step_counts,
            });
        }
    }
    Err(failure(
        "frontier exhausted",
        expanded,
        &nodes[nearest.1].options,
        nearest.0,
    ))
}

fn failure(reason: &str, expanded: usize, nearest: &[usize], nearest_distance: f64) -> Error {
    Error::PlanFailed {
        reason: reason.into(),
        expanded,
        nearest: nearest.to_vec(),
        nearest_distance,
    }
}

/// Replays a plan open-loop from `start`. Each row's segment is the plan step.
pub fn execute_plan<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    steps: &[PlanStep],
    goal: Goal,
    cfg: &PlanConfig,
) -> Result<(ExecutedTrace, E::State)> {
    let radius = cfg.radius(env);
    let mut rows = Vec::new();
    let mut t = 0;
    let mut state = start.clone();
    for (segment, step) in steps.iter().enumerate() {
        library.check_latent(&step.latent)?;
        let (next, _) = run_option(
            library,
            env,
            &state,
            &step.latent,
            goal,
            cfg.option_duration,
            radius,
            Some((&mut rows, segment, &mut t)),
        )?;
        state = next;
    }
    Ok((ExecutedTrace::finish(env, rows, &state, goal), state))
}

/// Plans leg by leg through `waypoints`, each leg starting where the previous
/// plan ended.
pub fn plan_tour<E: Environment>(
    library: &FrozenSkillLibrary,
    env: &E,
    start: &E::State,
    waypoints: &[Goal],
    cfg: &PlanConfig,
) -> Result<Vec<Plan<E::State>>> {
    let mut legs = Vec::with_capacity(waypoints.len());
    let mut state = start.clone();
    for &w in waypoints {
        let plan = ucs_plan(library, env, &state, w, cfg)?;
        state = plan.terminal.clone();
        legs.push(plan);
    }
    Ok(legs)
}
