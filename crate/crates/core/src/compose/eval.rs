use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ActionMode, ExecutedTrace, FrozenSkillLibrary, TraceRow};
use crate::env::{Environment, Goal};
use crate::error::Result;

/// Anything that picks a latent from the current observation.
pub trait LatentComposer {
    fn latent(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

/// The same latent at every step, e.g. one skill's mean.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLatent(pub Vec<f64>);

impl LatentComposer for FixedLatent {
    fn latent(&self, _obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeEval {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub final_distance: f64,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeEval>,
    pub traces: Vec<ExecutedTrace>,
}

impl EvalReport {
    pub fn success_rate(&self) -> f64 {
        self.episodes.iter().filter(|e| e.success).count() as f64
            / self.episodes.len().max(1) as f64
    }

    pub fn mean_final_distance(&self) -> f64 {
        self.episodes.iter().map(|e| e.final_distance).sum::<f64>()
            / self.episodes.len().max(1) as f64
    }

    pub fn mean_return(&self) -> f64 {
        self.episodes.iter().map(|e| e.total_reward).sum::<f64>()
            / self.episodes.len().max(1) as f64
    }
}

/// Closed-loop episodes with `composer` choosing the latent at every step.
/// Each episode starts from a reset drawn from `seed` and runs to the goal
/// radius or the horizon. Trace rows carry the episode index as segment.
#[allow(clippy::too_many_arguments)]
pub fn execute_composed<E: Environment, C: LatentComposer + ?Sized>(
    library: &FrozenSkillLibrary,
    composer: &C,
    env: &E,
    goal: Goal,
    episodes: usize,
    mode: ActionMode,
    seed: u64,
) -> Result<EvalReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EvalReport {
        episodes: Vec::with_capacity(episodes),
        traces: Vec::with_capacity(episodes),
    };
    for episode in 0..episodes {
        let mut state = env.reset_state(&mut rng);
        let mut rows = Vec::new();
        let mut success = false;
        for t in 0..env.horizon() {
            let obs = env.observe(&state);
            let z = composer.latent(&obs)?;
            library.check_latent(&z)?;
            let res = library.step(env, &state, &z, goal, mode, &mut rng)?;
            rows.push(TraceRow {
                segment: episode,
                t,
                obs,
                latent: z,
                reward: res.reward,
                distance: res.distance,
            });
            state = res.next;
            if res.distance < env.tolerance() {
                success = true;
                break;
            }
        }
        let trace = ExecutedTrace::finish(env, rows, &state, goal);
        report.episodes.push(EpisodeEval {
            episode,
            steps: trace.len(),
            total_reward: trace.total_reward(),
            final_distance: trace.final_distance,
            success,
        });
        report.traces.push(trace);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{PointConfig, PointEnv};
    use crate::trainer::{EmbeddingModel, TrainConfig};

    #[test]
    fn fixed_latent_mean_mode_is_reproducible() {
        let model = EmbeddingModel::new(
            &TrainConfig::default(),
            2,
            2,
            4,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let lib = FrozenSkillLibrary::new(model).unwrap();
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let c = FixedLatent(lib.mean_latent(0).unwrap().to_vec());
        let a = execute_composed(&lib, &c, &env, [2.0, 0.0], 3, ActionMode::Mean, 1).unwrap();
        let b = execute_composed(&lib, &c, &env, [2.0, 0.0], 3, ActionMode::Mean, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.episodes.len(), 3);
        for (e, tr) in a.episodes.iter().zip(&a.traces) {
            assert_eq!(e.steps, tr.len());
            assert!(e.success || e.steps == env.horizon());
            assert!(tr.rows.iter().all(|r| r.segment == e.episode));
        }
    }

    #[test]
    fn wrong_latent_size_is_an_error() {
        let model = EmbeddingModel::new(
            &TrainConfig::default(),
            2,
            2,
            4,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let lib = FrozenSkillLibrary::new(model).unwrap();
        let env = PointEnv::new(PointConfig::default()).unwrap();
        let r = execute_composed(
            &lib,
            &FixedLatent(vec![0.0; 3]),
            &env,
            [2.0, 0.0],
            1,
            ActionMode::Mean,
            0,
        );
        assert!(r.is_err());
    }
}
