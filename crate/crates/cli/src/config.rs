//! Run configuration: one TOML document per run.

use std::path::{Path, PathBuf};

use hranneal::annealing::PlanOverrides;
use hranneal::problems::{registry_1d, ObjectiveSpec, Target1d};
use hranneal::{BodySpec, DecayModel, SamplerParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub sample1d: Option<Sample1dConfig>,
    #[serde(default)]
    pub walk: Option<WalkConfig>,
    #[serde(default)]
    pub anneal: Option<AnnealConfig>,
    #[serde(default)]
    pub staged: Option<StagedSection>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub body: BodySpec,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub oracle: OracleSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OracleSpec {
    #[default]
    Exact,
    Stochastic {
        sigma: f64,
        #[serde(default = "default_delta")]
        delta: f64,
        /// ℓ∞-Lipschitz constant of f on the box.
        lipschitz: f64,
        /// Half-width of the enclosing box; defaults to the body's outer radius.
        #[serde(default)]
        box_radius: Option<f64>,
        /// Accuracy (τ, α) are solved for; defaults to the anneal ε.
        #[serde(default)]
        epsilon: Option<f64>,
    },
}

fn default_delta() -> f64 {
    0.1
}

/// A registered target by name, or an inline one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetRef {
    Named(String),
    Inline(Target1d),
}

impl TargetRef {
    pub fn resolve(&self) -> Result<Target1d, CliError> {
        let t = match self {
            TargetRef::Named(name) => registry_1d()
                .into_iter()
                .find(|t| &t.name == name)
                .ok_or_else(|| {
                    let known: Vec<String> = registry_1d().into_iter().map(|t| t.name).collect();
                    CliError::Config(format!(
                        "unknown target '{name}'; registered: {}",
                        known.join(", ")
                    ))
                })?,
            TargetRef::Inline(t) => t.clone(),
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample1dConfig {
    pub target: TargetRef,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_eps_tilde")]
    pub eps_tilde: f64,
    /// Compare against a quadrature density with this many bins (0 = off).
    #[serde(default = "default_bins")]
    pub tv_bins: usize,
}

fn default_samples() -> usize {
    100_000
}
fn default_eps_tilde() -> f64 {
    1e-3
}
fn default_bins() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub steps: u64,
    #[serde(default = "one")]
    pub replicas: u64,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// Target `exp(-F/T)` for the problem's objective; uniform when absent.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "default_eps_tilde")]
    pub eps_tilde: f64,
    /// Declared β of the target; defaults to `2ρ/T` from the objective.
    #[serde(default)]
    pub beta: Option<f64>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealConfig {
    pub epsilon: f64,
    /// Declared `|F - f|∞`; defaults to the objective's perturbation bound, or `ε/n`.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub steps: Option<u64>,
    #[serde(default)]
    pub theory_mode: bool,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub strands: Option<usize>,
    #[serde(default)]
    pub c_strand: Option<f64>,
    #[serde(default)]
    pub c_mix: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub burn_in_base: Option<u64>,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

fn default_budget() -> u64 {
    1_000_000_000
}

impl AnnealConfig {
    pub fn overrides(&self) -> PlanOverrides {
        let d = PlanOverrides::default();
        PlanOverrides {
            c_strand: self.c_strand.unwrap_or(d.c_strand),
            c_mix: self.c_mix.unwrap_or(d.c_mix),
            gamma: self.gamma.unwrap_or(d.gamma),
            steps: self.steps,
            theory_mode: self.theory_mode,
            burn_in_base: self.burn_in_base.unwrap_or(d.burn_in_base),
            epochs: self.epochs,
            strands: self.strands,
            rho_cap: d.rho_cap,
            step_budget: Some(self.step_budget),
            sampler: SamplerParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagedSection {
    pub model: DecaySpec,
    pub x0: Vec<f64>,
    pub r0: f64,
    #[serde(default = "one_f")]
    pub eps_rel: f64,
    pub inner_epsilon: f64,
    #[serde(default)]
    pub steps: Option<u64>,
    #[serde(default)]
    pub max_stages: Option<usize>,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DecaySpec {
    Polynomial {
        c: f64,
        p: f64,
        alpha: f64,
        #[serde(default = "default_constant")]
        constant: f64,
    },
    Logarithmic {
        c: f64,
        d: f64,
        alpha: f64,
        #[serde(default = "default_constant")]
        constant: f64,
    },
}

fn default_constant() -> f64 {
    hranneal::staged::DEFAULT_STAGE_CONSTANT
}

impl DecaySpec {
    pub fn build(&self) -> Result<DecayModel, CliError> {
        Ok(match *self {
            DecaySpec::Polynomial {
                c,
                p,
                alpha,
                constant,
            } => DecayModel::polynomial(c, p, alpha, constant)?,
            DecaySpec::Logarithmic {
                c,
                d,
                alpha,
                constant,
            } => DecayModel::logarithmic(c, d, alpha, constant)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Temperatures for the Gibbs-gap check.
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    /// Accuracy defining the warm-start schedule's last temperature `ε/n`.
    #[serde(default = "default_verify_eps")]
    pub epsilon: f64,
    /// Dimension whose ratio `1 - 1/√n` drives the warm-start schedule.
    #[serde(default = "default_schedule_dim")]
    pub schedule_dim: usize,
    #[serde(default = "default_lattice")]
    pub lattice_points: usize,
    /// 1-D targets to certify; all registered targets when empty.
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default = "default_trials")]
    pub certify_trials: usize,
}

fn default_temperatures() -> Vec<f64> {
    vec![1.0, 0.3, 0.1, 0.03]
}
fn default_verify_eps() -> f64 {
    0.05
}
fn default_schedule_dim() -> usize {
    9
}
fn default_lattice() -> usize {
    401
}
fn default_trials() -> usize {
    20_000
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            temperatures: default_temperatures(),
            epsilon: default_verify_eps(),
            schedule_dim: default_schedule_dim(),
            lattice_points: default_lattice(),
            targets: Vec::new(),
            certify_trials: default_trials(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = &self.problem {
            p.objective.validate()?;
            if p.body.dim() != p.objective.dim {
                return Err(CliError::Config(format!(
                    "body dimension {} differs from objective dimension {}",
                    p.body.dim(),
                    p.objective.dim
                )));
            }
            if let (Some(a), Some(rho)) = (&self.anneal, p.objective.non_convexity()) {
                if rho * p.objective.dim as f64 > a.epsilon {
                    log::warn!(
                        "amplitude * n = {} exceeds epsilon = {}: outside the approximately convex regime",
                        rho * p.objective.dim as f64,
                        a.epsilon
                    );
                }
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<&ProblemConfig, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [problem] section".into()))
    }

    pub fn section<'a, T>(&self, s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        s.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}
