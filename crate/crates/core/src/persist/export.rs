//! CSV export. Every file starts with a header row; floats are written with
//! 17 significant digits so values parse back to the same bits.

use std::io::Write;
use std::path::Path;

use csv::Writer;

use crate::compose::{EpisodeRecord, PlanStep, TraceRow};
use crate::error::Result;
use crate::trainer::IterationMetrics;

/// `{:.16e}`: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn open(path: &Path) -> Result<Writer<std::fs::File>> {
    Ok(Writer::from_path(path)?)
}

fn finish<W: Write>(mut w: Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

pub fn metrics_header(num_skills: usize, latent_dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["iteration", "env_steps", "episodes"]
        .map(String::from)
        .to_vec();
    for t in 0..num_skills {
        h.push(format!("return_{t}"));
    }
    for t in 0..num_skills {
        for k in 0..latent_dim {
            h.push(format!("z_mean_{t}_{k}"));
        }
        for k in 0..latent_dim {
            h.push(format!("z_std_{t}_{k}"));
        }
    }
    h.extend(
        [
            "inference_log_lik",
            "augmented_return",
            "policy_loss",
            "value_loss",
            "inference_loss",
            "approx_kl",
            "clip_fraction",
            "policy_entropy",
            "early_stopped",
        ]
        .map(String::from),
    );
    h
}

pub fn write_metrics<W: Write>(
    out: W,
    metrics: &[IterationMetrics],
    num_skills: usize,
    latent_dim: usize,
) -> Result<()> {
    let mut w = Writer::from_writer(out);
    w.write_record(metrics_header(num_skills, latent_dim))?;
    for m in metrics {
        let mut row = vec![
            m.iteration.to_string(),
            m.env_steps.to_string(),
            m.episodes.to_string(),
        ];
        row.extend(
            m.skill_returns
                .iter()
                .map(|r| r.map(fmt_f64).unwrap_or_default()),
        );
        for (mu, sd) in m.embedding_means.iter().zip(&m.embedding_stds) {
            row.extend(mu.iter().copied().map(fmt_f64));
            row.extend(sd.iter().copied().map(fmt_f64));
        }
        let u = &m.update;
        row.extend(
            [
                m.inference_log_lik,
                m.augmented_return,
                u.policy_loss,
                u.value_loss,
                u.inference_loss,
                u.approx_kl,
                u.clip_fraction,
                u.policy_entropy,
            ]
            .map(fmt_f64),
        );
        row.push(u.early_stopped.to_string());
        w.write_record(row)?;
    }
    finish(w)
}

pub fn write_metrics_csv(
    path: &Path,
    metrics: &[IterationMetrics],
    num_skills: usize,
    latent_dim: usize,
) -> Result<()> {
    write_metrics(
        std::fs::File::create(path)?,
        metrics,
        num_skills,
        latent_dim,
    )
}

/// Columns `segment,t,obs_0..,z_0..,reward,distance`.
pub fn write_trace_csv(
    path: &Path,
    rows: &[TraceRow],
    obs_dim: usize,
    latent_dim: usize,
) -> Result<()> {
    let mut w = open(path)?;
    let mut h: Vec<String> = vec!["segment".into(), "t".into()];
    h.extend((0..obs_dim).map(|k| format!("obs_{k}")));
    h.extend((0..latent_dim).map(|k| format!("z_{k}")));
    h.push("reward".into());
    h.push("distance".into());
    w.write_record(&h)?;
    for r in rows {
        let mut row = vec![r.segment.to_string(), r.t.to_string()];
        row.extend(r.obs.iter().copied().map(fmt_f64));
        row.extend(r.latent.iter().copied().map(fmt_f64));
        row.push(fmt_f64(r.reward));
        row.push(fmt_f64(r.distance));
        w.write_record(row)?;
    }
    finish(w)
}

pub fn write_curve_csv(path: &Path, curve: &[EpisodeRecord]) -> Result<()> {
    let mut w = open(path)?;
    w.write_record([
        "episode",
        "env_steps",
        "steps",
        "return",
        "final_distance",
        "success",
    ])?;
    for e in curve {
        w.write_record([
            e.episode.to_string(),
            e.env_steps.to_string(),
            e.steps.to_string(),
            fmt_f64(e.episode_return),
            fmt_f64(e.final_distance),
            e.success.to_string(),
        ])?;
    }
    finish(w)
}

/// One row per option; `legs[i]` is the plan for waypoint `i`.
pub fn write_plan_csv(path: &Path, legs: &[&[PlanStep]], latent_dim: usize) -> Result<()> {
    let mut w = open(path)?;
    let mut h: Vec<String> = ["leg", "index", "skill", "steps"]
        .map(String::from)
        .to_vec();
    h.extend((0..latent_dim).map(|k| format!("z_{k}")));
    w.write_record(&h)?;
    for (leg, steps) in legs.iter().enumerate() {
        for (i, s) in steps.iter().enumerate() {
            let mut row = vec![
                leg.to_string(),
                i.to_string(),
                s.skill.to_string(),
                s.steps.to_string(),
            ];
            row.extend(s.latent.iter().copied().map(fmt_f64));
            w.write_record(row)?;
        }
    }
    finish(w)
}
