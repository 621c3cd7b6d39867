//! Clipped policy-gradient update for the policy and embedding, with the
//! inference network and value baseline regressed alongside.
//!
//! The importance ratio of each step combines the action likelihood under
//! `π(a | s, z)` with the latent likelihood under `p(z | t)`, so gradients of
//! the surrogate reach both networks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::rollout::{gae_advantages, Trajectory};
use super::{EmbeddingModel, TrainConfig};
use crate::error::{Error, Result};
use crate::nn::{clip_grad_norm, Adam, DiagGaussian, GradientTape};

/// `min(ρA, clip(ρ, 1-ε, 1+ε)A)` for one sample.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// True when the clipped branch is active and the sample contributes no
/// gradient.
fn is_clipped(ratio: f64, advantage: f64, clip: f64) -> bool {
    (advantage > 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpoSample {
    pub obs: Vec<f64>,
    pub latent: Vec<f64>,
    pub skill: usize,
    pub action: Vec<f64>,
    pub old_policy_logprob: f64,
    pub old_latent_logprob: f64,
    /// Standardised noise `(z - μ) / σ` of the latent under the embedding
    /// that drew it.
    pub latent_noise: Vec<f64>,
    pub advantage: f64,
    /// Return target in normalised value units.
    pub value_target: f64,
    pub window: Vec<f64>,
}

/// Flattens a batch into samples: computes advantages and returns, folds the
/// returns into the model's value normaliser, and standardises advantages.
pub fn build_samples(
    model: &mut EmbeddingModel,
    batch: &[Trajectory],
    cfg: &TrainConfig,
) -> Result<Vec<PpoSample>> {
    let mut samples = Vec::new();
    let mut returns = Vec::new();
    for traj in batch {
        let (adv, ret) = gae_advantages(traj, cfg.gamma, cfg.gae_lambda);
        let emb = model.embedding_dist(traj.skill)?;
        let noise: Vec<f64> = traj
            .latent
            .iter()
            .zip(emb.mean())
            .zip(emb.std())
            .map(|((z, m), s)| (z - m) / s)
            .collect();
        for (i, step) in traj.steps.iter().enumerate() {
            samples.push(PpoSample {
                obs: step.obs.clone(),
                latent: traj.latent.clone(),
                skill: traj.skill,
                action: step.action.clone(),
                old_policy_logprob: step.policy_logprob,
                old_latent_logprob: traj.latent_logprob,
                latent_noise: noise.clone(),
                advantage: adv[i],
                value_target: 0.0,
                window: traj.windows[i].clone(),
            });
        }
        returns.extend(ret);
    }
    model.value_norm.update(&returns);
    for (s, r) in samples.iter_mut().zip(&returns) {
        s.value_target = model.value_norm.normalize(*r);
    }
    let n = samples.len() as f64;
    if n > 1.0 {
        let mean = samples.iter().map(|s| s.advantage).sum::<f64>() / n;
        let var = samples
            .iter()
            .map(|s| (s.advantage - mean).powi(2))
            .sum::<f64>()
            / n;
        let std = var.sqrt().max(1e-8);
        for s in &mut samples {
            s.advantage = (s.advantage - mean) / std;
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    pub policy: Vec<f64>,
    pub policy_log_std: Vec<f64>,
    pub embedding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyLoss {
    pub loss: f64,
    pub grads: PolicyGrads,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub entropy: f64,
}

/// Negated clipped surrogate minus the policy entropy bonus, averaged over
/// `samples`, together with its exact gradient.
pub fn policy_loss(
    model: &EmbeddingModel,
    samples: &[&PpoSample],
    cfg: &TrainConfig,
) -> Result<PolicyLoss> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::dims("policy minibatch", 1, 0));
    }
    let inv_n = 1.0 / n as f64;
    let d = model.latent_dim;

    // p(z|t) is evaluated once per skill present in the minibatch.
    let mut emb: Vec<Option<(Vec<f64>, GradientTape, DiagGaussian)>> = vec![None; model.num_skills];
    let mut emb_grad_head: Vec<Vec<f64>> = vec![vec![0.0; 2 * d]; model.num_skills];
    for s in samples {
        if emb.get(s.skill).is_none() {
            return Err(Error::InvalidTask {
                task: s.skill,
                count: model.num_skills,
            });
        }
        if emb[s.skill].is_none() {
            let (head, tape) = model.embedding_forward(s.skill)?;
            let dist = DiagGaussian::from_head(&head, model.bounds)?;
            emb[s.skill] = Some((head, tape, dist));
        }
    }

    let mut grads = PolicyGrads {
        policy: model.policy.zero_grads(),
        policy_log_std: vec![0.0; model.action_dim],
        embedding: model.embedding.zero_grads(),
    };
    let mut loss = 0.0;
    let mut clipped = 0usize;
    let mut kl = 0.0;

    for s in samples {
        let (_, _, emb_dist) = emb[s.skill].as_ref().expect("cached above");
        let z_in = if cfg.pathwise_latent {
            reparameterise(emb_dist, &s.latent_noise)
        } else {
            s.latent.clone()
        };
        let (dist, tape) = model.policy_forward(&s.obs, &z_in)?;
        let lp = dist.log_prob(&s.action)?;
        let lpz = emb_dist.log_prob(&s.latent)?;
        let log_ratio = (lp - s.old_policy_logprob) + (lpz - s.old_latent_logprob);
        let ratio = log_ratio.exp();
        loss -= clipped_surrogate(ratio, s.advantage, cfg.ppo_clip) * inv_n;
        kl += ((ratio - 1.0) - log_ratio) * inv_n;
        if is_clipped(ratio, s.advantage, cfg.ppo_clip) {
            clipped += 1;
            continue;
        }
        // dLoss/dlog_ratio
        let g = -ratio * s.advantage * inv_n;
        if g == 0.0 {
            continue;
        }
        let (dm, ds) = dist.log_prob_grad(&s.action)?;
        let d_out: Vec<f64> = dm.iter().map(|v| g * v).collect();
        let d_in = model.policy.backward(&tape, &d_out, &mut grads.policy)?;
        for (k, v) in ds.iter().enumerate() {
            if model.bounds.passes_gradient(model.policy_log_std[k]) {
                grads.policy_log_std[k] += g * v;
            }
        }
        let (dzm, dzs) = emb_dist.log_prob_grad(&s.latent)?;
        let head = &mut emb_grad_head[s.skill];
        for k in 0..d {
            head[k] += g * dzm[k];
            head[d + k] += g * dzs[k];
        }
        if cfg.pathwise_latent {
            // z = μ + σ·ε feeds the policy, so d/dμ = d/dz and d/dlogσ = d/dz·σε
            let dz = &d_in[model.obs_dim..];
            let std = emb_dist.std();
            for k in 0..d {
                head[k] += dz[k];
                head[d + k] += dz[k] * std[k] * s.latent_noise[k];
            }
        }
    }

    // policy entropy is state independent: Σ_k (log_std_k + const)
    let policy_entropy = DiagGaussian::new(
        vec![0.0; model.action_dim],
        model.policy_log_std.clone(),
        model.bounds,
    )?
    .entropy();
    loss -= cfg.alpha3 * policy_entropy;
    for k in 0..model.action_dim {
        if model.bounds.passes_gradient(model.policy_log_std[k]) {
            grads.policy_log_std[k] -= cfg.alpha3;
        }
    }

    // the embedding entropy acts only through the augmented reward
    for (t, cached) in emb.iter().enumerate() {
        let Some((head, tape, _)) = cached else {
            continue;
        };
        let mut d_head = emb_grad_head[t].clone();
        for k in 0..d {
            if !model.bounds.passes_gradient(head[d + k]) {
                d_head[d + k] = 0.0;
            }
        }
        model
            .embedding
            .backward(tape, &d_head, &mut grads.embedding)?;
    }

    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "policy loss".into(),
        });
    }
    Ok(PolicyLoss {
        loss,
        grads,
        clip_fraction: clipped as f64 * inv_n,
        approx_kl: kl,
        entropy: policy_entropy,
    })
}

fn reparameterise(dist: &DiagGaussian, noise: &[f64]) -> Vec<f64> {
    dist.mean()
        .iter()
        .zip(dist.std())
        .zip(noise)
        .map(|((m, s), e)| m + s * e)
        .collect()
}

/// Half mean squared error of the normalised value prediction.
pub fn value_loss(model: &EmbeddingModel, samples: &[&PpoSample]) -> Result<(f64, Vec<f64>)> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::dims("value minibatch", 1, 0));
    }
    let inv_n = 1.0 / n as f64;
    let mut grads = model.value.zero_grads();
    let mut loss = 0.0;
    for s in samples {
        let (v, tape) = model.value_forward(&s.obs, s.skill)?;
        let err = v - s.value_target;
        loss += 0.5 * err * err * inv_n;
        model.value.backward(&tape, &[err * inv_n], &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "value loss".into(),
        });
    }
    Ok((loss, grads))
}

/// Negative mean log-likelihood of the recorded latents under `q(z | s^H)`.
pub fn inference_loss(
    model: &EmbeddingModel,
    pairs: &[(&[f64], &[f64])],
) -> Result<(f64, Vec<f64>)> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::dims("inference minibatch", 1, 0));
    }
    let inv_n = 1.0 / n as f64;
    let d = model.latent_dim;
    let mut grads = model.inference.zero_grads();
    let mut loss = 0.0;
    for (window, z) in pairs {
        let (head, tape) = model.inference_forward(window)?;
        let dist = DiagGaussian::from_head(&head, model.bounds)?;
        loss -= dist.log_prob(z)? * inv_n;
        let (dm, ds) = dist.log_prob_grad(z)?;
        let mut d_head = vec![0.0; 2 * d];
        for k in 0..d {
            d_head[k] = -dm[k] * inv_n;
            if model.bounds.passes_gradient(head[d + k]) {
                d_head[d + k] = -ds[k] * inv_n;
            }
        }
        model.inference.backward(&tape, &d_head, &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            what: "inference loss".into(),
        });
    }
    Ok((loss, grads))
}

/// Optimiser state for every trained parameter block.
#[derive(Debug, Clone)]
pub struct Optimizers {
    pub policy: Adam,
    pub policy_log_std: Adam,
    pub embedding: Adam,
    pub inference: Adam,
    pub value: Adam,
}

impl Optimizers {
    pub fn new(model: &EmbeddingModel) -> Self {
        Self {
            policy: Adam::new(model.policy.params().len()),
            policy_log_std: Adam::new(model.policy_log_std.len()),
            embedding: Adam::new(model.embedding.params().len()),
            inference: Adam::new(model.inference.params().len()),
            value: Adam::new(model.value.params().len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub inference_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub policy_entropy: f64,
    pub minibatches: usize,
    /// The epoch loop stopped because the policy moved past `target_kl`.
    pub early_stopped: bool,
}

/// Several epochs of minibatch updates over `samples`.
pub fn ppo_update<R: Rng + ?Sized>(
    model: &mut EmbeddingModel,
    opt: &mut Optimizers,
    samples: &[PpoSample],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    if samples.is_empty() {
        return Err(Error::dims("ppo batch", 1, 0));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut stats = UpdateStats::default();
    'epochs: for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch) {
            let mb: Vec<&PpoSample> = chunk.iter().map(|&i| &samples[i]).collect();

            let mut pl = policy_loss(model, &mb, cfg)?;
            if cfg.target_kl > 0.0 && pl.approx_kl > 1.5 * cfg.target_kl {
                stats.early_stopped = true;
                break 'epochs;
            }
            {
                let PolicyGrads {
                    policy,
                    policy_log_std,
                    embedding,
                } = &mut pl.grads;
                if cfg.freeze_embedding {
                    clip_grad_norm(
                        &mut [policy.as_mut_slice(), policy_log_std.as_mut_slice()],
                        cfg.max_grad_norm,
                    );
                } else {
                    clip_grad_norm(
                        &mut [
                            policy.as_mut_slice(),
                            policy_log_std.as_mut_slice(),
                            embedding.as_mut_slice(),
                        ],
                        cfg.max_grad_norm,
                    );
                }
            }
            opt.policy.step(
                model.policy.params_mut().values_mut(),
                &pl.grads.policy,
                cfg.lr,
            )?;
            opt.policy_log_std
                .step(&mut model.policy_log_std, &pl.grads.policy_log_std, cfg.lr)?;
            for v in &mut model.policy_log_std {
                *v = model.bounds.clamp(*v);
            }
            if !cfg.freeze_embedding {
                opt.embedding.step(
                    model.embedding.params_mut().values_mut(),
                    &pl.grads.embedding,
                    cfg.embedding_lr,
                )?;
            }

            let (vl, mut vg) = value_loss(model, &mb)?;
            clip_grad_norm(&mut [vg.as_mut_slice()], cfg.max_grad_norm);
            opt.value
                .step(model.value.params_mut().values_mut(), &vg, cfg.value_lr)?;

            let pairs: Vec<(&[f64], &[f64])> = mb
                .iter()
                .map(|s| (s.window.as_slice(), s.latent.as_slice()))
                .collect();
            let (il, mut ig) = inference_loss(model, &pairs)?;
            clip_grad_norm(&mut [ig.as_mut_slice()], cfg.max_grad_norm);
            opt.inference.step(
                model.inference.params_mut().values_mut(),
                &ig,
                cfg.inference_lr,
            )?;

            stats.policy_loss += pl.loss;
            stats.value_loss += vl;
            stats.inference_loss += il;
            stats.approx_kl += pl.approx_kl;
            stats.clip_fraction += pl.clip_fraction;
            stats.policy_entropy = pl.entropy;
            stats.minibatches += 1;
        }
    }
    let m = stats.minibatches.max(1) as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.inference_loss /= m;
    stats.approx_kl /= m;
    stats.clip_fraction /= m;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn surrogate_clip_arithmetic() {
        assert!((clipped_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_surrogate(0.5, 1.0, 0.2) - 0.5).abs() < 1e-15);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
        assert!((clipped_surrogate(1.5, -1.0, 0.2) + 1.5).abs() < 1e-15);
        assert!(is_clipped(1.5, 1.0, 0.2));
        assert!(!is_clipped(0.5, 1.0, 0.2));
        assert!(is_clipped(0.5, -1.0, 0.2));
    }

    fn mini_cfg() -> TrainConfig {
        TrainConfig {
            latent_dim: 2,
            window: 2,
            policy_hidden: vec![4],
            embedding_hidden: vec![4],
            inference_hidden: vec![4],
            value_hidden: vec![4],
            alpha1: 0.05,
            alpha3: 0.07,
            ..TrainConfig::default()
        }
    }

    fn gauss(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut *rng);
                scale * e
            })
            .collect()
    }

    /// A model with non-trivial outputs and samples whose ratios sit inside
    /// the clip range, so the loss is smooth around the current parameters.
    fn mini_problem(seed: u64) -> (EmbeddingModel, Vec<PpoSample>, TrainConfig) {
        let cfg = mini_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = EmbeddingModel::new(&cfg, 2, 2, 3, &mut rng).unwrap();
        for net in [
            &mut model.policy,
            &mut model.embedding,
            &mut model.inference,
            &mut model.value,
        ] {
            for v in net.params_mut().values_mut() {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += 0.3 * e;
            }
        }
        model.policy_log_std = vec![-0.3, 0.2];
        let mut samples = Vec::new();
        for i in 0..6 {
            let skill = i % 3;
            let emb = model.embedding_dist(skill).unwrap();
            let noise = gauss(&mut rng, 2, 1.0);
            let latent: Vec<f64> = emb
                .mean()
                .iter()
                .zip(emb.std())
                .zip(&noise)
                .map(|((m, s), e)| m + s * e)
                .collect();
            let obs = gauss(&mut rng, 2, 1.0);
            let pol = model.policy_dist(&obs, &latent).unwrap();
            let action = pol.sample(&mut rng);
            let lp = pol.log_prob(&action).unwrap();
            let lpz = emb.log_prob(&latent).unwrap();
            samples.push(PpoSample {
                window: gauss(&mut rng, 4, 1.0),
                obs,
                old_policy_logprob: lp + 0.05 * (i as f64 - 2.5) / 2.5,
                old_latent_logprob: lpz - 0.02,
                latent,
                latent_noise: noise,
                skill,
                action,
                advantage: if i % 2 == 0 { 1.3 } else { -0.7 },
                value_target: 0.4 - 0.1 * i as f64,
            });
        }
        (model, samples, cfg)
    }

    fn assert_close(analytic: f64, numeric: f64, what: &str) {
        let scale = analytic.abs().max(numeric.abs());
        assert!(
            (analytic - numeric).abs() <= 1e-3 * scale + 1e-7,
            "{what}: analytic {analytic} vs numeric {numeric}"
        );
    }

    fn central<F: FnMut(f64) -> f64>(mut f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn policy_loss_matches_finite_differences() {
        for pathwise in [false, true] {
            let (mut model, samples, mut cfg) = mini_problem(11);
            cfg.pathwise_latent = pathwise;
            let refs: Vec<&PpoSample> = samples.iter().collect();
            let pl = policy_loss(&model, &refs, &cfg).unwrap();
            assert_eq!(pl.clip_fraction, 0.0);
            for i in 0..model.policy.params().len() {
                let x = model.policy.params().values()[i];
                let n = central(
                    |v| {
                        model.policy.params_mut().values_mut()[i] = v;
                        policy_loss(&model, &refs, &cfg).unwrap().loss
                    },
                    x,
                );
                model.policy.params_mut().values_mut()[i] = x;
                assert_close(pl.grads.policy[i], n, &format!("policy[{i}]"));
            }
            for i in 0..model.action_dim {
                let x = model.policy_log_std[i];
                let n = central(
                    |v| {
                        model.policy_log_std[i] = v;
                        policy_loss(&model, &refs, &cfg).unwrap().loss
                    },
                    x,
                );
                model.policy_log_std[i] = x;
                assert_close(
                    pl.grads.policy_log_std[i],
                    n,
                    &format!("policy_log_std[{i}]"),
                );
            }
            for i in 0..model.embedding.params().len() {
                let x = model.embedding.params().values()[i];
                let n = central(
                    |v| {
                        model.embedding.params_mut().values_mut()[i] = v;
                        policy_loss(&model, &refs, &cfg).unwrap().loss
                    },
                    x,
                );
                model.embedding.params_mut().values_mut()[i] = x;
                assert_close(
                    pl.grads.embedding[i],
                    n,
                    &format!("embedding[{i}] pathwise={pathwise}"),
                );
            }
        }
    }

    #[test]
    fn value_loss_matches_finite_differences() {
        let (mut model, samples, _) = mini_problem(12);
        let refs: Vec<&PpoSample> = samples.iter().collect();
        let (_, g) = value_loss(&model, &refs).unwrap();
        for i in 0..model.value.params().len() {
            let x = model.value.params().values()[i];
            let n = central(
                |v| {
                    model.value.params_mut().values_mut()[i] = v;
                    value_loss(&model, &refs).unwrap().0
                },
                x,
            );
            model.value.params_mut().values_mut()[i] = x;
            assert_close(g[i], n, &format!("value[{i}]"));
        }
    }

    #[test]
    fn inference_loss_matches_finite_differences() {
        let (mut model, samples, _) = mini_problem(13);
        let pairs: Vec<(&[f64], &[f64])> = samples
            .iter()
            .map(|s| (s.window.as_slice(), s.latent.as_slice()))
            .collect();
        let (_, g) = inference_loss(&model, &pairs).unwrap();
        for i in 0..model.inference.params().len() {
            let x = model.inference.params().values()[i];
            let n = central(
                |v| {
                    model.inference.params_mut().values_mut()[i] = v;
                    inference_loss(&model, &pairs).unwrap().0
                },
                x,
            );
            model.inference.params_mut().values_mut()[i] = x;
            assert_close(g[i], n, &format!("inference[{i}]"));
        }
    }

    #[test]
    fn zero_advantage_leaves_only_the_entropy_gradient() {
        let (model, mut samples, cfg) = mini_problem(14);
        for s in &mut samples {
            s.advantage = 0.0;
        }
        let refs: Vec<&PpoSample> = samples.iter().collect();
        let pl = policy_loss(&model, &refs, &cfg).unwrap();
        assert!(pl.grads.policy.iter().all(|g| *g == 0.0));
        assert!(pl.grads.embedding.iter().all(|g| *g == 0.0));
        for g in &pl.grads.policy_log_std {
            assert_eq!(*g, -cfg.alpha3);
        }
    }

    #[test]
    fn inference_fit_reduces_loss() {
        let (mut model, _, cfg) = mini_problem(15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // latent is a fixed linear function of the window plus small noise
        let data: Vec<(Vec<f64>, Vec<f64>)> = (0..32)
            .map(|_| {
                let w = gauss(&mut rng, 4, 1.0);
                let e: f64 = StandardNormal.sample(&mut rng);
                let z = vec![0.5 * w[0] - 0.2 * w[3], 0.3 * w[1] + 0.1 + 0.01 * e];
                (w, z)
            })
            .collect();
        let pairs: Vec<(&[f64], &[f64])> = data
            .iter()
            .map(|(w, z)| (w.as_slice(), z.as_slice()))
            .collect();
        let initial = inference_loss(&model, &pairs).unwrap().0;
        let mut opt = Adam::new(model.inference.params().len());
        for _ in 0..200 {
            let (_, g) = inference_loss(&model, &pairs).unwrap();
            opt.step(
                model.inference.params_mut().values_mut(),
                &g,
                cfg.inference_lr,
            )
            .unwrap();
        }
        let fitted = inference_loss(&model, &pairs).unwrap().0;
        assert!(fitted < initial, "{fitted} !< {initial}");
    }

    #[test]
    fn frozen_embedding_is_not_updated() {
        let (mut model, samples, mut cfg) = mini_problem(16);
        cfg.freeze_embedding = true;
        cfg.epochs = 2;
        cfg.minibatch = 3;
        let before = model.embedding.clone();
        let mut opt = Optimizers::new(&model);
        ppo_update(
            &mut model,
            &mut opt,
            &samples,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(model.embedding, before);
    }
}
