use serde::{Deserialize, Serialize};

use crate::classes::{FiniteTableClass, HPrimeClass, MarginThresholdClass};
use crate::data::{parse_rational, rational_from_f64, BinaryLabel, MulticlassLabel, Rational, RealLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    RealizablePartial,
    AgnosticPartial,
    MulticlassRealizable,
    MulticlassAgnostic,
    RegRealizable,
    RegAgnostic,
    WeakTransductive,
    Audit,
}

/// A number written as an integer, a float or a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    pub fn rational(&self) -> Result<Rational> {
        match self {
            Num::Int(i) => Ok(Rational::from_integer(*i)),
            Num::Float(f) => rational_from_f64(*f),
            Num::Text(s) => parse_rational(s),
        }
    }

    pub fn integer(&self) -> Result<i64> {
        let r = self.rational()?;
        if !r.is_integer() {
            return Err(Error::Config(format!("expected an integer, got {r}")));
        }
        Ok(r.to_integer())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    /// Rows over `0`, `1`, `*`.
    FiniteTable { table: Vec<String> },
    /// `grid = [start, step, count]`.
    MarginThreshold { grid: [Num; 3], margin: Num },
    Hprime { bound: u64 },
    FiniteMulticlass { classes: u32, table: Vec<Vec<u32>> },
    FiniteReal { table: Vec<Vec<Num>> },
}

impl ClassSpec {
    pub fn finite_table(&self) -> Result<FiniteTableClass<BinaryLabel>> {
        match self {
            ClassSpec::FiniteTable { table } => {
                let rows: Vec<&str> = table.iter().map(String::as_str).collect();
                FiniteTableClass::from_rows("finite_table", &rows)
            }
            _ => Err(mismatch("finite_table")),
        }
    }

    pub fn margin_threshold(&self) -> Result<MarginThresholdClass> {
        match self {
            ClassSpec::MarginThreshold { grid, margin } => {
                let count = grid[2].integer()?;
                if count <= 0 {
                    return Err(Error::Config("grid count must be positive".into()));
                }
                MarginThresholdClass::grid(grid[0].rational()?, grid[1].rational()?, count as usize, margin.rational()?)
            }
            _ => Err(mismatch("margin_threshold")),
        }
    }

    pub fn hprime(&self) -> Result<HPrimeClass> {
        match self {
            ClassSpec::Hprime { bound } => HPrimeClass::new(*bound),
            _ => Err(mismatch("hprime")),
        }
    }

    pub fn finite_multiclass(&self) -> Result<FiniteTableClass<MulticlassLabel>> {
        match self {
            ClassSpec::FiniteMulticlass { classes, table } => {
                let table = table
                    .iter()
                    .map(|row| row.iter().map(|&v| MulticlassLabel::new(v, *classes)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                FiniteTableClass::new("finite_multiclass", table)
            }
            _ => Err(mismatch("finite_multiclass")),
        }
    }

    pub fn finite_real(&self) -> Result<FiniteTableClass<RealLabel>> {
        match self {
            ClassSpec::FiniteReal { table } => {
                let table = table
                    .iter()
                    .map(|row| row.iter().map(|v| RealLabel::new(v.rational()?)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()?;
                FiniteTableClass::new("finite_real", table)
            }
            _ => Err(mismatch("finite_real")),
        }
    }
}

fn mismatch(expected: &str) -> Error {
    Error::Config(format!("pipeline requires a `{expected}` class"))
}

/// Support points with either explicit labels or a labeling hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub points: Vec<Num>,
    #[serde(default)]
    pub labels: Option<Vec<Num>>,
    /// Index of the hypothesis that labels `points`.
    #[serde(default)]
    pub target: Option<usize>,
    #[serde(default)]
    pub weights: Option<Vec<Num>>,
    /// Probability of replacing a label (binary: flip; multiclass: uniform other label).
    #[serde(default)]
    pub noise: Option<Num>,
}

fn default_seed() -> u64 {
    1
}
fn default_trials() -> usize {
    1
}
fn default_c1() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.1
}
fn default_reps() -> usize {
    10
}
fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Training sample size.
    pub n: usize,
    /// Weak-learner sample size.
    pub m: usize,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Regression grid cells `G`, so `gamma = 1/G`.
    #[serde(default)]
    pub grid: Option<u32>,
    /// Regression margin; defaults to `gamma` (realizable) or `2 gamma` (agnostic).
    #[serde(default)]
    pub beta: Option<Num>,
    /// Repetitions for transductive estimates.
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    /// Overrides the rollout count of the weak learner.
    #[serde(default)]
    pub rollouts: Option<usize>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub class: ClassSpec,
    pub distribution: DistributionSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.m < 2 {
            return bad("m must be at least 2");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if self.reps == 0 {
            return bad("reps must be positive");
        }
        let d = &self.distribution;
        if d.points.is_empty() {
            return bad("distribution needs at least one point");
        }
        match (&d.labels, d.target) {
            (Some(_), Some(_)) => return bad("give either labels or target, not both"),
            (None, None) => return bad("distribution needs labels or a target hypothesis"),
            (Some(l), None) if l.len() != d.points.len() => return bad("labels and points differ in length"),
            _ => {}
        }
        if let Some(w) = &d.weights {
            if w.len() != d.points.len() {
                return bad("weights and points differ in length");
            }
        }
        if matches!(self.pipeline, Pipeline::RegRealizable | Pipeline::RegAgnostic) && self.grid.is_none() {
            return bad("regression pipelines need `grid`");
        }
        Ok(())
    }

    /// Environment variable `OIG_SEED` replaces the configured seed.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(value) = std::env::var("OIG_SEED") {
            self.seed = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("OIG_SEED is not an integer: `{value}`")))?;
        }
        Ok(())
    }
}
