use crate::error::{Error, Result};

/// A point in the 2D task space.
pub type Goal = [f64; 2];

pub fn distance(a: Goal, b: Goal) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// The pre-defined skills of a multi-task environment: one goal per skill.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillSet {
    goals: Vec<Goal>,
    names: Vec<String>,
}

impl SkillSet {
    /// At least two skills with pairwise distinct goals.
    pub fn new(goals: Vec<Goal>) -> Result<Self> {
        if goals.len() < 2 {
            return Err(Error::config("env.goals", "need at least two skills"));
        }
        Self::build(goals)
    }

    /// A degenerate one-skill set, used for single-task baselines.
    pub fn single(goal: Goal) -> Result<Self> {
        Self::build(vec![goal])
    }

    fn build(goals: Vec<Goal>) -> Result<Self> {
        for (i, g) in goals.iter().enumerate() {
            if !(g[0].is_finite() && g[1].is_finite()) {
                return Err(Error::config(
                    format!("env.goals[{i}]"),
                    "non-finite coordinate",
                ));
            }
            if let Some(j) = goals[..i].iter().position(|h| h == g) {
                return Err(Error::config(
                    format!("env.goals[{i}]"),
                    format!("duplicates goal {j}"),
                ));
            }
        }
        let names = (0..goals.len()).map(|i| format!("skill{i}")).collect();
        Ok(Self { goals, names })
    }

    pub fn len(&self) -> usize {
        self.goals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
    }

    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn check(&self, task: usize) -> Result<()> {
        if task < self.goals.len() {
            Ok(())
        } else {
            Err(Error::InvalidTask {
                task,
                count: self.goals.len(),
            })
        }
    }

    pub fn goal(&self, task: usize) -> Result<Goal> {
        self.check(task)?;
        Ok(self.goals[task])
    }

    pub fn one_hot(&self, task: usize) -> Result<Vec<f64>> {
        self.check(task)?;
        let mut v = vec![0.0; self.goals.len()];
        v[task] = 1.0;
        Ok(v)
    }
}
