//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! [train]
//! alpha2 = 0.1
//! policy_hidden = 64,64
//!
//! point.goals = 2,0; 0,2; -2,0; 0,-2
//! ```
//!
//! A key inside a `[section]` is read as `section.key`; a dotted key outside
//! any section is taken as written. Every key must be known.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::compose::{ComposerConfig, ComposerMode, PlanConfig};
use crate::env::{ArmConfig, ArmEnv, Goal, PointConfig, PointEnv};
use crate::error::{Error, Result};
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    Point,
    Arm,
}

impl EnvKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::Point => "point",
            EnvKind::Arm => "arm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpConfig {
    pub skill_a: usize,
    pub skill_b: usize,
    pub hold_steps: usize,
    pub ramp_steps: usize,
    /// Number of evenly spaced λ values in `[0, 1]` for the grid sweep.
    pub grid: usize,
}

impl Default for InterpConfig {
    fn default() -> Self {
        Self {
            skill_a: 0,
            skill_b: 1,
            hold_steps: 16,
            ramp_steps: 16,
            grid: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub episodes: usize,
    pub skill: usize,
    /// Sample actions from the policy instead of using its mean.
    pub stochastic: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 10,
            skill: 0,
            stochastic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub point: PointConfig,
    pub arm: ArmConfig,
    /// `train.seed` is always equal to `seed`.
    pub train: TrainConfig,
    pub plan: PlanConfig,
    /// `composer.seed` is always equal to `seed`.
    pub composer: ComposerConfig,
    pub interp: InterpConfig,
    pub eval: EvalConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Point,
            point: PointConfig::default(),
            arm: ArmConfig::default(),
            train: TrainConfig::default(),
            plan: PlanConfig::default(),
            composer: ComposerConfig::default(),
            interp: InterpConfig::default(),
            eval: EvalConfig::default(),
            out_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: Display,
{
    v.parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected true or false, got `{v}`"),
        )),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|p| parse(key, p.trim())).collect()
}

fn parse_pair(key: &str, v: &str) -> Result<[f64; 2]> {
    let xs: Vec<f64> = parse_list(key, v)?;
    match xs.as_slice() {
        &[a, b] => Ok([a, b]),
        _ => Err(Error::config(
            key,
            format!("expected two comma-separated numbers, got `{v}`"),
        )),
    }
}

/// `x,y; x,y; ...`
fn parse_goals(key: &str, v: &str) -> Result<Vec<Goal>> {
    v.split(';').map(|g| parse_pair(key, g.trim())).collect()
}

/// Parses `x,y` as a task-space goal.
pub fn parse_goal(v: &str) -> Result<Goal> {
    parse_pair("goal", v)
}

fn list<T: Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn goals(gs: &[Goal]) -> String {
    gs.iter()
        .map(|g| format!("{},{}", g[0], g[1]))
        .collect::<Vec<_>>()
        .join("; ")
}

impl RunConfig {
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        let mut section: Option<String> = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::config(format!("line {}", n + 1), "unterminated section header")
                    })?
                    .trim();
                section = if name.is_empty() {
                    None
                } else {
                    Some(name.to_string())
                };
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", n + 1), "expected `key = value`")
            })?;
            let k = k.trim();
            let key = match &section {
                Some(s) if !k.contains('.') => format!("{s}.{k}"),
                _ => k.to_string(),
            };
            if seen.insert(key.clone(), n + 1).is_some() {
                return Err(Error::config(key, "set more than once"));
            }
            cfg.set(&key, v.trim())?;
        }
        cfg.train.seed = cfg.seed;
        cfg.composer.seed = cfg.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_text(&text)
    }

    /// Overrides the run seed and the seeds derived from it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.composer.seed = seed;
    }

    /// Assigns one dotted key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let k = key;
        let t = &mut self.train;
        match k {
            "run.seed" => self.seed = parse(k, v)?,
            "run.out_dir" => self.out_dir = PathBuf::from(v),
            "env.kind" => {
                self.env = match v {
                    "point" => EnvKind::Point,
                    "arm" => EnvKind::Arm,
                    _ => {
                        return Err(Error::config(
                            k,
                            format!("expected point or arm, got `{v}`"),
                        ))
                    }
                }
            }

            "point.goals" => self.point.goals = parse_goals(k, v)?,
            "point.horizon" => self.point.horizon = parse(k, v)?,
            "point.tolerance" => self.point.tolerance = parse(k, v)?,
            "point.max_speed" => self.point.max_speed = parse(k, v)?,
            "point.workspace" => self.point.workspace = parse(k, v)?,
            "point.reset_noise" => self.point.reset_noise = parse(k, v)?,

            "arm.link_lengths" => self.arm.link_lengths = parse_pair(k, v)?,
            "arm.home" => self.arm.home = parse_pair(k, v)?,
            "arm.joint_min" => self.arm.joint_min = parse_pair(k, v)?,
            "arm.joint_max" => self.arm.joint_max = parse_pair(k, v)?,
            "arm.max_delta" => self.arm.max_delta = parse(k, v)?,
            "arm.goals" => self.arm.goals = parse_goals(k, v)?,
            "arm.horizon" => self.arm.horizon = parse(k, v)?,
            "arm.tolerance" => self.arm.tolerance = parse(k, v)?,
            "arm.reset_noise" => self.arm.reset_noise = parse(k, v)?,

            "train.alpha1" => t.alpha1 = parse(k, v)?,
            "train.alpha2" => t.alpha2 = parse(k, v)?,
            "train.alpha3" => t.alpha3 = parse(k, v)?,
            "train.gamma" => t.gamma = parse(k, v)?,
            "train.gae_lambda" => t.gae_lambda = parse(k, v)?,
            "train.latent_dim" => t.latent_dim = parse(k, v)?,
            "train.window" => t.window = parse(k, v)?,
            "train.ppo_clip" => t.ppo_clip = parse(k, v)?,
            "train.target_kl" => t.target_kl = parse(k, v)?,
            "train.epochs" => t.epochs = parse(k, v)?,
            "train.batch_steps" => t.batch_steps = parse(k, v)?,
            "train.minibatch" => t.minibatch = parse(k, v)?,
            "train.lr" => t.lr = parse(k, v)?,
            "train.embedding_lr" => t.embedding_lr = parse(k, v)?,
            "train.value_lr" => t.value_lr = parse(k, v)?,
            "train.inference_lr" => t.inference_lr = parse(k, v)?,
            "train.max_grad_norm" => t.max_grad_norm = parse(k, v)?,
            "train.total_steps" => t.total_steps = parse(k, v)?,
            "train.policy_hidden" => t.policy_hidden = parse_list(k, v)?,
            "train.embedding_hidden" => t.embedding_hidden = parse_list(k, v)?,
            "train.inference_hidden" => t.inference_hidden = parse_list(k, v)?,
            "train.value_hidden" => t.value_hidden = parse_list(k, v)?,
            "train.log_std_min" => t.log_std_min = parse(k, v)?,
            "train.log_std_max" => t.log_std_max = parse(k, v)?,
            "train.init_policy_log_std" => t.init_policy_log_std = parse(k, v)?,
            "train.init_embedding_log_std" => t.init_embedding_log_std = parse(k, v)?,
            "train.embedding_init_gain" => t.embedding_init_gain = parse(k, v)?,
            "train.pathwise_latent" => t.pathwise_latent = parse_bool(k, v)?,
            "train.freeze_embedding" => t.freeze_embedding = parse_bool(k, v)?,

            "plan.option_duration" => self.plan.option_duration = parse(k, v)?,
            "plan.max_nodes" => self.plan.max_nodes = parse(k, v)?,
            "plan.max_depth" => self.plan.max_depth = parse(k, v)?,
            "plan.resolution" => self.plan.resolution = parse(k, v)?,
            "plan.tolerance" => {
                self.plan.tolerance = if v == "env" { None } else { Some(parse(k, v)?) };
            }

            "composer.mode" => {
                self.composer.mode = ComposerMode::parse(v).ok_or_else(|| {
                    Error::config(k, format!("expected continuous or discrete, got `{v}`"))
                })?
            }
            "composer.total_steps" => self.composer.total_steps = parse(k, v)?,
            "composer.replay_capacity" => self.composer.replay_capacity = parse(k, v)?,
            "composer.batch_size" => self.composer.batch_size = parse(k, v)?,
            "composer.tau" => self.composer.tau = parse(k, v)?,
            "composer.exploration_noise" => self.composer.exploration_noise = parse(k, v)?,
            "composer.warmup_steps" => self.composer.warmup_steps = parse(k, v)?,
            "composer.gamma" => self.composer.gamma = parse(k, v)?,
            "composer.actor_lr" => self.composer.actor_lr = parse(k, v)?,
            "composer.critic_lr" => self.composer.critic_lr = parse(k, v)?,
            "composer.hidden" => self.composer.hidden = parse_list(k, v)?,
            "composer.box_margin" => self.composer.box_margin = parse(k, v)?,
            "composer.discrete_k" => self.composer.discrete_k = parse(k, v)?,
            "composer.max_grad_norm" => self.composer.max_grad_norm = parse(k, v)?,

            "interp.skill_a" => self.interp.skill_a = parse(k, v)?,
            "interp.skill_b" => self.interp.skill_b = parse(k, v)?,
            "interp.hold_steps" => self.interp.hold_steps = parse(k, v)?,
            "interp.ramp_steps" => self.interp.ramp_steps = parse(k, v)?,
            "interp.grid" => self.interp.grid = parse(k, v)?,

            "eval.episodes" => self.eval.episodes = parse(k, v)?,
            "eval.skill" => self.eval.skill = parse(k, v)?,
            "eval.stochastic" => self.eval.stochastic = parse_bool(k, v)?,

            _ => return Err(Error::config(k, "unknown key")),
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        let p = &self.point;
        let a = &self.arm;
        let c = &self.composer;
        vec![
            ("run.seed", self.seed.to_string()),
            ("run.out_dir", self.out_dir.display().to_string()),
            ("env.kind", self.env.as_str().to_string()),
            ("point.goals", goals(&p.goals)),
            ("point.horizon", p.horizon.to_string()),
            ("point.tolerance", p.tolerance.to_string()),
            ("point.max_speed", p.max_speed.to_string()),
            ("point.workspace", p.workspace.to_string()),
            ("point.reset_noise", p.reset_noise.to_string()),
            ("arm.link_lengths", list(&a.link_lengths)),
            ("arm.home", list(&a.home)),
            ("arm.joint_min", list(&a.joint_min)),
            ("arm.joint_max", list(&a.joint_max)),
            ("arm.max_delta", a.max_delta.to_string()),
            ("arm.goals", goals(&a.goals)),
            ("arm.horizon", a.horizon.to_string()),
            ("arm.tolerance", a.tolerance.to_string()),
            ("arm.reset_noise", a.reset_noise.to_string()),
            ("train.alpha1", t.alpha1.to_string()),
            ("train.alpha2", t.alpha2.to_string()),
            ("train.alpha3", t.alpha3.to_string()),
            ("train.gamma", t.gamma.to_string()),
            ("train.gae_lambda", t.gae_lambda.to_string()),
            ("train.latent_dim", t.latent_dim.to_string()),
            ("train.window", t.window.to_string()),
            ("train.ppo_clip", t.ppo_clip.to_string()),
            ("train.target_kl", t.target_kl.to_string()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_steps", t.batch_steps.to_string()),
            ("train.minibatch", t.minibatch.to_string()),
            ("train.lr", t.lr.to_string()),
            ("train.embedding_lr", t.embedding_lr.to_string()),
            ("train.value_lr", t.value_lr.to_string()),
            ("train.inference_lr", t.inference_lr.to_string()),
            ("train.max_grad_norm", t.max_grad_norm.to_string()),
            ("train.total_steps", t.total_steps.to_string()),
            ("train.policy_hidden", list(&t.policy_hidden)),
            ("train.embedding_hidden", list(&t.embedding_hidden)),
            ("train.inference_hidden", list(&t.inference_hidden)),
            ("train.value_hidden", list(&t.value_hidden)),
            ("train.log_std_min", t.log_std_min.to_string()),
            ("train.log_std_max", t.log_std_max.to_string()),
            (
                "train.init_policy_log_std",
                t.init_policy_log_std.to_string(),
            ),
            (
                "train.init_embedding_log_std",
                t.init_embedding_log_std.to_string(),
            ),
            (
                "train.embedding_init_gain",
                t.embedding_init_gain.to_string(),
            ),
            ("train.pathwise_latent", t.pathwise_latent.to_string()),
            ("train.freeze_embedding", t.freeze_embedding.to_string()),
            (
                "plan.option_duration",
                self.plan.option_duration.to_string(),
            ),
            ("plan.max_nodes", self.plan.max_nodes.to_string()),
            ("plan.max_depth", self.plan.max_depth.to_string()),
            ("plan.resolution", self.plan.resolution.to_string()),
            (
                "plan.tolerance",
                self.plan
                    .tolerance
                    .map_or_else(|| "env".to_string(), |v| v.to_string()),
            ),
            ("composer.mode", c.mode.as_str().to_string()),
            ("composer.total_steps", c.total_steps.to_string()),
            ("composer.replay_capacity", c.replay_capacity.to_string()),
            ("composer.batch_size", c.batch_size.to_string()),
            ("composer.tau", c.tau.to_string()),
            (
                "composer.exploration_noise",
                c.exploration_noise.to_string(),
            ),
            ("composer.warmup_steps", c.warmup_steps.to_string()),
            ("composer.gamma", c.gamma.to_string()),
            ("composer.actor_lr", c.actor_lr.to_string()),
            ("composer.critic_lr", c.critic_lr.to_string()),
            ("composer.hidden", list(&c.hidden)),
            ("composer.box_margin", c.box_margin.to_string()),
            ("composer.discrete_k", c.discrete_k.to_string()),
            ("composer.max_grad_norm", c.max_grad_norm.to_string()),
            ("interp.skill_a", self.interp.skill_a.to_string()),
            ("interp.skill_b", self.interp.skill_b.to_string()),
            ("interp.hold_steps", self.interp.hold_steps.to_string()),
            ("interp.ramp_steps", self.interp.ramp_steps.to_string()),
            ("interp.grid", self.interp.grid.to_string()),
            ("eval.episodes", self.eval.episodes.to_string()),
            ("eval.skill", self.eval.skill.to_string()),
            ("eval.stochastic", self.eval.stochastic.to_string()),
        ]
    }

    /// Full snapshot grouped by section; parses back to an equal value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (key, value) in self.entries() {
            let (section, name) = key.split_once('.').expect("dotted key");
            if section != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section;
            }
            out.push_str(&format!("{name} = {value}\n"));
        }
        out
    }

    pub fn point_env(&self) -> Result<PointEnv> {
        PointEnv::new(self.point.clone())
    }

    pub fn arm_env(&self) -> Result<ArmEnv> {
        ArmEnv::new(self.arm.clone())
    }

    pub fn num_skills(&self) -> usize {
        match self.env {
            EnvKind::Point => self.point.goals.len(),
            EnvKind::Arm => self.arm.goals.len(),
        }
    }

    /// Checks every section, so a bad field fails before any work starts.
    pub fn validate(&self) -> Result<()> {
        match self.env {
            EnvKind::Point => {
                self.point_env()?;
            }
            EnvKind::Arm => {
                self.arm_env()?;
            }
        }
        self.train.validate()?;
        self.plan.validate()?;
        self.composer.validate()?;
        let n = self.num_skills();
        for (name, s) in [
            ("interp.skill_a", self.interp.skill_a),
            ("interp.skill_b", self.interp.skill_b),
            ("eval.skill", self.eval.skill),
        ] {
            if s >= n {
                return Err(Error::config(
                    name,
                    format!("skill {s} out of range for {n} skills"),
                ));
            }
        }
        if self.eval.episodes == 0 {
            return Err(Error::config("eval.episodes", "must be >= 1"));
        }
        Ok(())
    }
}
