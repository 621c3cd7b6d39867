//! Command implementations behind the `latent-skills` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use latent_skills::compose::{
    blend, execute_composed, execute_fixed, execute_plan, interpolate_execute, plan_tour,
    train_composer, ActionMode, ComposerMode, FixedLatent, FrozenSkillLibrary,
    InterpolationSchedule, LatentComposer, TraceRow,
};
use latent_skills::env::{Environment, Goal};
use latent_skills::persist::{
    load_checkpoint, parse_goal, save_checkpoint, write_curve_csv, write_metrics_csv,
    write_plan_csv, write_trace_csv, Checkpoint, EnvKind, RunConfig, FORMAT_VERSION,
};
use latent_skills::trainer::{train_with, EmbeddingModel};
use latent_skills::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_PLAN: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "latent-skills",
    version,
    about = "Train and compose latent skill embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration file. Commands that read a checkpoint default to
    /// the configuration stored inside it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (overrides `run.out_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn goal_arg(s: &str) -> std::result::Result<Goal, String> {
    parse_goal(s).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the skill library; writes model.ckpt, metrics.csv, summary.json.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Feed interpolated latents between two skills.
    Interp {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Two skill ids, e.g. `0,1`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        skills: Option<Vec<usize>>,
        /// Number of λ values in the grid sweep.
        #[arg(long)]
        grid: Option<usize>,
        /// Run one hold/ramp/hold schedule instead of a λ grid.
        #[arg(long)]
        schedule: bool,
    },
    /// Search for a sequence of skill options through one or more goals.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Waypoint `x,y`; repeat for a tour.
        #[arg(long = "goal", required = true, value_parser = goal_arg, allow_hyphen_values = true)]
        goals: Vec<Goal>,
    },
    /// Train a latent-space composer for a goal; writes composer.ckpt.
    Compose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_parser = goal_arg, allow_hyphen_values = true)]
        goal: Goal,
        /// `continuous` or `discrete`.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Closed-loop evaluation of a skill's mean latent, or of the composer
    /// stored in the checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_parser = goal_arg, allow_hyphen_values = true)]
        goal: Option<Goal>,
        #[arg(long)]
        skill: Option<usize>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Sample low-level actions instead of using the policy mean.
        #[arg(long)]
        stochastic: bool,
    },
    /// Print checkpoint metadata as JSON.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

/// Maps a failure to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config { .. }) => EXIT_CONFIG,
        Some(
            Error::Divergence { .. } | Error::NonFinite { .. } | Error::NonFiniteGradient { .. },
        ) => EXIT_DIVERGENCE,
        Some(Error::PlanFailed { .. }) => EXIT_PLAN,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common } => cmd_train(&common).map(|_| ()),
        Command::Interp {
            common,
            checkpoint,
            skills,
            grid,
            schedule,
        } => cmd_interp(&common, &checkpoint, skills, grid, schedule).map(|_| ()),
        Command::Plan {
            common,
            checkpoint,
            goals,
        } => cmd_plan(&common, &checkpoint, &goals).map(|_| ()),
        Command::Compose {
            common,
            checkpoint,
            goal,
            mode,
        } => cmd_compose(&common, &checkpoint, goal, mode.as_deref()).map(|_| ()),
        Command::Eval {
            common,
            checkpoint,
            goal,
            skill,
            episodes,
            stochastic,
        } => cmd_eval(&common, &checkpoint, goal, skill, episodes, stochastic).map(|_| ()),
        Command::Inspect { checkpoint } => {
            let text = serde_json::to_string_pretty(&cmd_inspect(&checkpoint)?)?;
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

fn apply_overrides(mut cfg: RunConfig, common: &Common) -> RunConfig {
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    Ok(apply_overrides(cfg, common))
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    Ok(cfg.out_dir.clone())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Checkpoint plus the configuration commands should run under.
fn open_checkpoint(common: &Common, path: &Path) -> Result<(Checkpoint, RunConfig)> {
    let ckpt =
        load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let cfg = match &common.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => ckpt.config.clone(),
    };
    Ok((ckpt, apply_overrides(cfg, common)))
}

fn check_compatible<E: Environment>(env: &E, model: &EmbeddingModel) -> Result<()> {
    let pairs = [
        (
            "checkpoint observation size vs env",
            env.obs_dim(),
            model.obs_dim,
        ),
        (
            "checkpoint action size vs env",
            env.action_dim(),
            model.action_dim,
        ),
        (
            "checkpoint skill count vs env",
            env.skills().len(),
            model.num_skills,
        ),
    ];
    for (what, expected, got) in pairs {
        if expected != got {
            return Err(Error::DimensionMismatch {
                context: what.into(),
                expected,
                got,
            }
            .into());
        }
    }
    Ok(())
}

fn f64s(xs: &[f64]) -> Value {
    json!(xs)
}

macro_rules! with_env {
    ($cfg:expr, |$env:ident| $body:expr) => {
        match $cfg.env {
            EnvKind::Point => {
                let $env = $cfg.point_env()?;
                $body
            }
            EnvKind::Arm => {
                let $env = $cfg.arm_env()?;
                $body
            }
        }
    };
}

pub fn cmd_train(common: &Common) -> Result<Value> {
    let cfg = load_config(common)?;
    let dir = out_dir(&cfg)?;
    with_env!(cfg, |env| train_in(&cfg, env, &dir))
}

fn train_in<E: Environment>(cfg: &RunConfig, env: E, dir: &Path) -> Result<Value> {
    let n = env.skills().len();
    let d = cfg.train.latent_dim;
    let start = Instant::now();
    let result = train_with(env, cfg.train.clone(), |m| {
        let rets: Vec<String> = m
            .skill_returns
            .iter()
            .map(|r| r.map_or_else(|| "-".into(), |v| format!("{v:.2}")))
            .collect();
        eprintln!(
            "iter {:>4}  steps {:>7}  returns [{}]",
            m.iteration,
            m.env_steps,
            rets.join(", ")
        );
    });
    let (outcome, failure) = match result {
        Ok(o) => (o, None),
        Err(f) => match f.last_good {
            Some(o) => (o, Some(f.error)),
            None => return Err(f.error.into()),
        },
    };
    write_metrics_csv(&dir.join("metrics.csv"), &outcome.metrics, n, d)?;
    let ckpt = Checkpoint {
        config: cfg.clone(),
        model: outcome.model,
        composer: None,
        seed: cfg.seed,
        env_steps: outcome.env_steps as u64,
        iteration: outcome.metrics.len() as u64,
    };
    let ckpt_name = if failure.is_some() {
        "model.partial.ckpt"
    } else {
        "model.ckpt"
    };
    save_checkpoint(&dir.join(ckpt_name), &ckpt)?;

    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let last = outcome.metrics.last();
    let summary = json!({
        "env": cfg.env.as_str(),
        "num_skills": n,
        "env_steps": outcome.env_steps,
        "iterations": outcome.metrics.len(),
        "final_skill_returns": last.map(|m| json!(m.skill_returns)),
        "embedding_means": lib.mean_latents(),
        "embedding_stds": lib.embedding_stds(),
        "checkpoint": ckpt_name,
        "diverged": failure.as_ref().map(|e| e.to_string()),
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    write_json(&dir.join("summary.json"), &summary)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(summary),
    }
}

/// Evenly spaced values in `[0, 1]`; a single value is 0.5.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

pub fn cmd_interp(
    common: &Common,
    checkpoint: &Path,
    skills: Option<Vec<usize>>,
    grid: Option<usize>,
    schedule: bool,
) -> Result<Value> {
    let (ckpt, mut cfg) = open_checkpoint(common, checkpoint)?;
    if let Some(s) = skills {
        cfg.interp.skill_a = s[0];
        cfg.interp.skill_b = s[1];
    }
    if let Some(g) = grid {
        cfg.interp.grid = g;
    }
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    with_env!(cfg, |env| interp_in(&cfg, &ckpt, env, &dir, schedule))
}

fn interp_in<E: Environment>(
    cfg: &RunConfig,
    ckpt: &Checkpoint,
    env: E,
    dir: &Path,
    schedule: bool,
) -> Result<Value> {
    check_compatible(&env, &ckpt.model)?;
    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let ic = &cfg.interp;
    let za = lib.mean_latent(ic.skill_a)?.to_vec();
    let zb = lib.mean_latent(ic.skill_b)?.to_vec();
    let ga = env.skills().goal(ic.skill_a)?;
    let gb = env.skills().goal(ic.skill_b)?;
    let mid = [0.5 * (ga[0] + gb[0]), 0.5 * (ga[1] + gb[1])];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = env.reset_state(&mut rng);

    let mut rows: Vec<TraceRow> = Vec::new();
    let mut segments = Vec::new();
    if schedule {
        let s = InterpolationSchedule::new(za, zb, ic.hold_steps, ic.ramp_steps)?;
        let tr = interpolate_execute(
            &lib,
            &env,
            &start,
            std::slice::from_ref(&s),
            gb,
            ActionMode::Mean,
            &mut rng,
        )?;
        segments.push(json!({
            "segment": 0,
            "lambdas": s.lambdas(),
            "final_point": tr.final_point,
            "final_distance_to_b": tr.final_distance,
        }));
        rows = tr.rows;
    } else {
        for (i, lambda) in lambda_grid(ic.grid).into_iter().enumerate() {
            let z = blend(&za, &zb, lambda);
            let (tr, _) = execute_fixed(
                &lib,
                &env,
                &start,
                &z,
                env.horizon(),
                mid,
                ActionMode::Mean,
                false,
                i,
                &mut rng,
            )?;
            let p = tr.final_point;
            segments.push(json!({
                "segment": i,
                "lambda": lambda,
                "latent": z,
                "final_point": p,
                "distance_to_midpoint": tr.final_distance,
                "distance_to_a": latent_skills::env::distance(p, ga),
                "distance_to_b": latent_skills::env::distance(p, gb),
            }));
            rows.extend(tr.rows);
        }
    }
    write_trace_csv(
        &dir.join("interp_trajectory.csv"),
        &rows,
        env.obs_dim(),
        lib.latent_dim(),
    )?;
    let report = json!({
        "skills": [ic.skill_a, ic.skill_b],
        "goals": [ga, gb],
        "segments": segments,
    });
    write_json(&dir.join("interp_report.json"), &report)?;
    Ok(report)
}

pub fn cmd_plan(common: &Common, checkpoint: &Path, goals: &[Goal]) -> Result<Value> {
    let (ckpt, cfg) = open_checkpoint(common, checkpoint)?;
    let dir = out_dir(&cfg)?;
    with_env!(cfg, |env| plan_in(&cfg, &ckpt, env, &dir, goals))
}

fn plan_in<E: Environment>(
    cfg: &RunConfig,
    ckpt: &Checkpoint,
    env: E,
    dir: &Path,
    goals: &[Goal],
) -> Result<Value> {
    check_compatible(&env, &ckpt.model)?;
    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let start = env.reset_state(&mut rng);
    let t0 = Instant::now();
    let legs = match plan_tour(&lib, &env, &start, goals, &cfg.plan) {
        Ok(l) => l,
        Err(e) => {
            if let Error::PlanFailed {
                reason,
                expanded,
                nearest,
                nearest_distance,
            } = &e
            {
                write_json(
                    &dir.join("plan_report.json"),
                    &json!({
                        "found": false,
                        "reason": reason,
                        "expanded": expanded,
                        "nearest_options": nearest,
                        "nearest_distance": nearest_distance,
                    }),
                )?;
            }
            return Err(e.into());
        }
    };
    let elapsed = t0.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut state = start;
    let mut reports = Vec::new();
    for (i, (plan, &goal)) in legs.iter().zip(goals).enumerate() {
        let (tr, next) = execute_plan(&lib, &env, &state, &plan.steps, goal, &cfg.plan)?;
        let offset = rows.len();
        rows.extend(tr.rows.into_iter().map(|mut r| {
            r.segment = i;
            r.t += offset;
            r
        }));
        reports.push(json!({
            "goal": goal,
            "options": plan.skills(),
            "steps": plan.steps.iter().map(|s| json!({"skill": s.skill, "latent": f64s(&s.latent), "duration": s.steps})).collect::<Vec<_>>(),
            "cost": plan.cost,
            "expanded": plan.expanded,
            "planned_distance": plan.terminal_distance,
            "executed_distance": tr.final_distance,
        }));
        state = next;
    }
    let step_lists: Vec<&[_]> = legs.iter().map(|l| l.steps.as_slice()).collect();
    write_plan_csv(&dir.join("plan.csv"), &step_lists, lib.latent_dim())?;
    write_trace_csv(
        &dir.join("plan_trajectory.csv"),
        &rows,
        env.obs_dim(),
        lib.latent_dim(),
    )?;
    let report = json!({
        "found": true,
        "legs": reports,
        "total_expanded": legs.iter().map(|l| l.expanded).sum::<usize>(),
        "elapsed_seconds": elapsed,
    });
    write_json(&dir.join("plan_report.json"), &report)?;
    Ok(report)
}

pub fn cmd_compose(
    common: &Common,
    checkpoint: &Path,
    goal: Goal,
    mode: Option<&str>,
) -> Result<Value> {
    let (ckpt, mut cfg) = open_checkpoint(common, checkpoint)?;
    if let Some(m) = mode {
        cfg.composer.mode = ComposerMode::parse(m).ok_or_else(|| Error::Config {
            field: "composer.mode".into(),
            message: format!("expected continuous or discrete, got `{m}`"),
        })?;
    }
    let dir = out_dir(&cfg)?;
    with_env!(cfg, |env| compose_in(&cfg, &ckpt, env, &dir, goal))
}

fn compose_in<E: Environment>(
    cfg: &RunConfig,
    ckpt: &Checkpoint,
    env: E,
    dir: &Path,
    goal: Goal,
) -> Result<Value> {
    check_compatible(&env, &ckpt.model)?;
    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let before = lib.fingerprint();
    let run = train_composer(&lib, &env, goal, &cfg.composer)?;
    debug_assert_eq!(before, lib.fingerprint());
    write_curve_csv(&dir.join("composer_curve.csv"), &run.curve)?;
    let eval = execute_composed(
        &lib,
        &run.composer,
        &env,
        goal,
        1,
        ActionMode::Mean,
        cfg.seed,
    )?;
    write_trace_csv(
        &dir.join("compose_trajectory.csv"),
        &eval.traces[0].rows,
        env.obs_dim(),
        lib.latent_dim(),
    )?;
    let out = Checkpoint {
        config: cfg.clone(),
        model: ckpt.model.clone(),
        composer: Some(run.composer.clone()),
        seed: cfg.seed,
        env_steps: ckpt.env_steps,
        iteration: ckpt.iteration,
    };
    save_checkpoint(&dir.join("composer.ckpt"), &out)?;
    let report = json!({
        "mode": cfg.composer.mode.as_str(),
        "goal": goal,
        "episodes": run.curve.len(),
        "env_steps": run.env_steps,
        "updates": run.updates,
        "final_20_mean_return": run.final_mean_return(20),
        "greedy_final_distance": eval.episodes[0].final_distance,
        "greedy_success": eval.episodes[0].success,
        "library_fingerprint": format!("{before:016x}"),
    });
    write_json(&dir.join("compose_report.json"), &report)?;
    Ok(report)
}

pub fn cmd_eval(
    common: &Common,
    checkpoint: &Path,
    goal: Option<Goal>,
    skill: Option<usize>,
    episodes: Option<usize>,
    stochastic: bool,
) -> Result<Value> {
    let (ckpt, mut cfg) = open_checkpoint(common, checkpoint)?;
    if let Some(s) = skill {
        cfg.eval.skill = s;
    }
    if let Some(e) = episodes {
        cfg.eval.episodes = e;
    }
    cfg.eval.stochastic |= stochastic;
    cfg.validate()?;
    let dir = out_dir(&cfg)?;
    with_env!(cfg, |env| eval_in(&cfg, &ckpt, env, &dir, goal))
}

fn eval_in<E: Environment>(
    cfg: &RunConfig,
    ckpt: &Checkpoint,
    env: E,
    dir: &Path,
    goal: Option<Goal>,
) -> Result<Value> {
    check_compatible(&env, &ckpt.model)?;
    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let mode = if cfg.eval.stochastic {
        ActionMode::Sample
    } else {
        ActionMode::Mean
    };
    let fixed;
    let (composer, goal, driver): (&dyn LatentComposer, Goal, Value) = match &ckpt.composer {
        Some(c) => {
            let g = goal.ok_or_else(|| Error::Config {
                field: "goal".into(),
                message: "evaluating a composer checkpoint needs --goal".into(),
            })?;
            (c, g, json!({"composer": c.mode.as_str()}))
        }
        None => {
            let s = cfg.eval.skill;
            fixed = FixedLatent(lib.mean_latent(s)?.to_vec());
            let g = match goal {
                Some(g) => g,
                None => env.skills().goal(s)?,
            };
            (&fixed, g, json!({"skill": s, "latent": fixed.0}))
        }
    };
    let report = execute_composed(
        &lib,
        composer,
        &env,
        goal,
        cfg.eval.episodes,
        mode,
        cfg.seed,
    )?;
    let rows: Vec<TraceRow> = report
        .traces
        .iter()
        .flat_map(|t| t.rows.iter().cloned())
        .collect();
    write_trace_csv(
        &dir.join("eval_trajectory.csv"),
        &rows,
        env.obs_dim(),
        lib.latent_dim(),
    )?;
    let v = json!({
        "driver": driver,
        "goal": goal,
        "episodes": report.episodes.len(),
        "final_distances": report.episodes.iter().map(|e| e.final_distance).collect::<Vec<_>>(),
        "successes": report.episodes.iter().map(|e| e.success).collect::<Vec<_>>(),
        "success_rate": report.success_rate(),
        "mean_return": report.mean_return(),
    });
    write_json(&dir.join("eval_report.json"), &v)?;
    Ok(v)
}

pub fn cmd_inspect(checkpoint: &Path) -> Result<Value> {
    let ckpt = load_checkpoint(checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let lib = FrozenSkillLibrary::new(ckpt.model.clone())?;
    let m = &ckpt.model;
    Ok(json!({
        "format_version": FORMAT_VERSION,
        "env": ckpt.config.env.as_str(),
        "num_skills": m.num_skills,
        "obs_dim": m.obs_dim,
        "action_dim": m.action_dim,
        "latent_dim": m.latent_dim,
        "window": m.window,
        "seed": ckpt.seed,
        "env_steps": ckpt.env_steps,
        "iteration": ckpt.iteration,
        "library_fingerprint": format!("{:016x}", lib.fingerprint()),
        "mean_latents": lib.mean_latents(),
        "embedding_stds": lib.embedding_stds(),
        "composer": ckpt.composer.as_ref().map(|c| c.mode.as_str()),
        "blocks": ckpt.blocks().iter().map(|b| json!({"name": b.name, "meta": b.meta, "len": b.values.len()})).collect::<Vec<_>>(),
    }))
}
