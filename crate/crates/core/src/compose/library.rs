use rand::Rng;

use crate::env::{Environment, Goal, StepResult};
use crate::error::{Error, Result};
use crate::nn::fingerprint;
use crate::trainer::EmbeddingModel;

/// How the frozen policy turns its Gaussian into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// The distribution mean; deterministic.
    Mean,
    Sample,
}

/// A trained policy and embedding, held read-only for composition.
#[derive(Debug, Clone)]
pub struct FrozenSkillLibrary {
    model: EmbeddingModel,
    means: Vec<Vec<f64>>,
    stds: Vec<Vec<f64>>,
}

impl FrozenSkillLibrary {
    pub fn new(model: EmbeddingModel) -> Result<Self> {
        let mut means = Vec::with_capacity(model.num_skills);
        let mut stds = Vec::with_capacity(model.num_skills);
        for t in 0..model.num_skills {
            let d = model.embedding_dist(t)?;
            means.push(d.mean().to_vec());
            stds.push(d.std());
        }
        Ok(Self { model, means, stds })
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn num_skills(&self) -> usize {
        self.means.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.model.latent_dim
    }

    /// `z̄_t`, the mean of `p(z | t)`.
    pub fn mean_latent(&self, task: usize) -> Result<&[f64]> {
        self.means
            .get(task)
            .map(Vec::as_slice)
            .ok_or(Error::InvalidTask {
                task,
                count: self.num_skills(),
            })
    }

    pub fn mean_latents(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn embedding_stds(&self) -> &[Vec<f64>] {
        &self.stds
    }

    /// Axis-aligned box over every `z̄_t ± 3σ_t`, with each half-width scaled
    /// by `1 + margin`.
    pub fn latent_box(&self, margin: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.latent_dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (m, s) in self.means.iter().zip(&self.stds) {
            for k in 0..d {
                lo[k] = lo[k].min(m[k] - 3.0 * s[k]);
                hi[k] = hi[k].max(m[k] + 3.0 * s[k]);
            }
        }
        for k in 0..d {
            let c = 0.5 * (lo[k] + hi[k]);
            let h = 0.5 * (hi[k] - lo[k]) * (1.0 + margin);
            lo[k] = c - h;
            hi[k] = c + h;
        }
        (lo, hi)
    }

    /// Hash of the policy and embedding parameters.
    pub fn fingerprint(&self) -> u64 {
        let mut all = self.model.policy.params().values().to_vec();
        all.extend_from_slice(&self.model.policy_log_std);
        all.extend_from_slice(self.model.embedding.params().values());
        fingerprint(&all)
    }

    pub fn check_latent(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.latent_dim() {
            return Err(Error::dims("composer latent", self.latent_dim(), z.len()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "composer latent".into(),
            });
        }
        Ok(())
    }

    /// Unit-scale action of the frozen policy.
    pub fn action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        z: &[f64],
        mode: ActionMode,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let dist = self.model.policy_dist(obs, z)?;
        Ok(match mode {
            ActionMode::Mean => dist.mean().to_vec(),
            ActionMode::Sample => dist.sample(rng),
        })
    }

    /// One closed-loop transition with latent `z`, rewarded against `goal`.
    pub fn step<E: Environment, R: Rng + ?Sized>(
        &self,
        env: &E,
        state: &E::State,
        z: &[f64],
        goal: Goal,
        mode: ActionMode,
        rng: &mut R,
    ) -> Result<StepResult<E::State>> {
        let obs = env.observe(state);
        let scale = env.action_scale();
        let a: Vec<f64> = self
            .action(&obs, z, mode, rng)?
            .iter()
            .map(|v| v * scale)
            .collect();
        env.step_towards(state, &a, goal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::TrainConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn library() -> FrozenSkillLibrary {
        let model = EmbeddingModel::new(
            &TrainConfig::default(),
            2,
            2,
            4,
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        FrozenSkillLibrary::new(model).unwrap()
    }

    #[test]
    fn box_covers_three_sigma_with_margin() {
        let lib = library();
        let (lo0, hi0) = lib.latent_box(0.0);
        let (lo, hi) = lib.latent_box(0.5);
        for (m, s) in lib.mean_latents().iter().zip(lib.embedding_stds()) {
            for k in 0..2 {
                assert!(m[k] - 3.0 * s[k] >= lo0[k] - 1e-12);
                assert!(m[k] + 3.0 * s[k] <= hi0[k] + 1e-12);
            }
        }
        for k in 0..2 {
            assert!(((hi[k] - lo[k]) - 1.5 * (hi0[k] - lo0[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn fingerprint_tracks_policy_and_embedding_only() {
        let lib = library();
        let mut model = lib.model().clone();
        model.value.params_mut().values_mut()[0] += 1.0;
        assert_eq!(
            FrozenSkillLibrary::new(model.clone())
                .unwrap()
                .fingerprint(),
            lib.fingerprint()
        );
        model.embedding.params_mut().values_mut()[0] += 1e-12;
        assert_ne!(
            FrozenSkillLibrary::new(model).unwrap().fingerprint(),
            lib.fingerprint()
        );
    }

    #[test]
    fn rejects_bad_latents() {
        let lib = library();
        assert!(lib.check_latent(&[0.0]).is_err());
        assert!(lib.check_latent(&[0.0, f64::NAN]).is_err());
        assert!(lib.mean_latent(4).is_err());
    }
}
