//! Experiment configuration, defaults, and resolution into runnable parameters.

use std::path::PathBuf;

use log::warn;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::{AbruptConfig, RewardModel, SlowConfig, DEFAULT_MEAN_SET};
use crate::policy::{
    lmdsee_configure_abrupt, lmdsee_configure_slow, GammaRule, LmDseeParams, SwUcbSharpParams,
};
use crate::regret::BoundOrder;

pub const DEFAULT_ARMS: usize = 10;
pub const DEFAULT_HORIZON: usize = 100_000;
pub const MAX_HORIZON: usize = 10_000_000;
pub const DEFAULT_REPLICATIONS: usize = 20;
pub const DEFAULT_KAPPA_MAX: f64 = 1.0;
pub const DEFAULT_DSEE_W: f64 = 1.0;

fn default_arms() -> usize {
    DEFAULT_ARMS
}
fn default_horizon() -> usize {
    DEFAULT_HORIZON
}
fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}
fn default_mean_set() -> Vec<f64> {
    DEFAULT_MEAN_SET.to_vec()
}
fn default_init_low() -> f64 {
    0.1
}
fn default_init_high() -> f64 {
    0.9
}
fn default_w() -> f64 {
    DEFAULT_DSEE_W
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentConfig,
    #[serde(default = "default_arms")]
    pub arms: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub reward: RewardConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default, skip_serializing_if = "OutputConfig::is_empty")]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Abrupt {
        nu: f64,
        #[serde(default = "default_mean_set")]
        mean_set: Vec<f64>,
    },
    Slow {
        kappa: f64,
        #[serde(default = "default_init_low")]
        init_low: f64,
        #[serde(default = "default_init_high")]
        init_high: f64,
    },
}

impl EnvironmentConfig {
    pub fn class(&self) -> EnvClass {
        match self {
            EnvironmentConfig::Abrupt { .. } => EnvClass::Abrupt,
            EnvironmentConfig::Slow { .. } => EnvClass::Slow,
        }
    }

    /// The tuning a policy receives when none is configured.
    pub fn matching_tuning(&self) -> Tuning {
        match *self {
            EnvironmentConfig::Abrupt { nu, .. } => Tuning::Abrupt { nu },
            EnvironmentConfig::Slow { kappa, .. } => Tuning::Slow { kappa },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvClass {
    Abrupt,
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    pub concentration: f64,
    pub mean_clamp: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        let m = RewardModel::default();
        Self { concentration: m.concentration, mean_clamp: m.mean_clamp }
    }
}

impl From<RewardConfig> for RewardModel {
    fn from(c: RewardConfig) -> Self {
        RewardModel { concentration: c.concentration, mean_clamp: c.mean_clamp }
    }
}

/// Environment knowledge a policy is tuned with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum Tuning {
    Abrupt { nu: f64 },
    Slow { kappa: f64 },
}

impl Tuning {
    pub fn class(&self) -> EnvClass {
        match self {
            Tuning::Abrupt { .. } => EnvClass::Abrupt,
            Tuning::Slow { .. } => EnvClass::Slow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    #[serde(rename = "lmdsee")]
    LmDsee {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tuning: Option<Tuning>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa_max: Option<f64>,
    },
    #[serde(rename = "swucbsharp")]
    SwUcbSharp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tuning: Option<Tuning>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        /// Accepted for completeness; the selection rule does not use it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_min: Option<f64>,
    },
    Ucb,
    Dsee {
        #[serde(default = "default_w")]
        w: f64,
    },
    Random,
}

impl PolicyConfig {
    /// Default configuration for a policy name as used on the command line.
    pub fn from_name(name: &str) -> Result<Self, HarnessError> {
        Ok(match name {
            "lmdsee" => PolicyConfig::LmDsee { tuning: None, a: None, b: None, delta_min: None, kappa_max: None },
            "swucbsharp" => PolicyConfig::SwUcbSharp { tuning: None, lambda: None, delta_min: None },
            "ucb" => PolicyConfig::Ucb,
            "dsee" => PolicyConfig::Dsee { w: DEFAULT_DSEE_W },
            "random" => PolicyConfig::Random,
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown policy '{other}' (expected lmdsee, swucbsharp, ucb, dsee, random)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyConfig::LmDsee { .. } => "lmdsee",
            PolicyConfig::SwUcbSharp { .. } => "swucbsharp",
            PolicyConfig::Ucb => "ucb",
            PolicyConfig::Dsee { .. } => "dsee",
            PolicyConfig::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

impl OutputConfig {
    fn is_empty(&self) -> bool {
        self.csv.is_none() && self.json.is_none()
    }
}

/// Runnable policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyPlan {
    LmDsee(LmDseeParams),
    SwUcbSharp(SwUcbSharpParams),
    Ucb,
    Dsee { w: f64 },
    Random,
}

/// Environment generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvPlan {
    Abrupt(AbruptConfig),
    Slow(SlowConfig),
}

/// Quantities computed from the configuration, recorded with every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_bound: Option<f64>,
    pub bound: BoundOrder,
    pub bound_exponent: f64,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub env: EnvPlan,
    pub reward: RewardModel,
    pub policy: PolicyPlan,
    pub derived: Derived,
}

fn cfg_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validates the configuration and derives all policy parameters.
    pub fn resolve(&self) -> Result<Resolved, HarnessError> {
        let arms = self.arms;
        if arms == 0 {
            return Err(cfg_err("arm count must be positive"));
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(cfg_err(format!("horizon {} outside 1..={MAX_HORIZON}", self.horizon)));
        }
        if self.replications == 0 {
            return Err(cfg_err("replication count must be positive"));
        }
        let reward = RewardModel::from(self.reward);
        reward.validate().map_err(cfg_err)?;

        let env = match &self.environment {
            EnvironmentConfig::Abrupt { nu, mean_set } => {
                let c = AbruptConfig { nu: *nu, mean_set: mean_set.clone(), horizon: self.horizon, arms };
                c.validate().map_err(cfg_err)?;
                EnvPlan::Abrupt(c)
            }
            EnvironmentConfig::Slow { kappa, init_low, init_high } => {
                let c = SlowConfig {
                    kappa: *kappa,
                    horizon: self.horizon,
                    arms,
                    init_low: *init_low,
                    init_high: *init_high,
                };
                c.validate().map_err(cfg_err)?;
                EnvPlan::Slow(c)
            }
        };

        let mut config = self.clone();
        let mut derived = Derived {
            rho: None,
            gamma_rule: None,
            gamma: None,
            l: None,
            kappa_tilde: None,
            alpha: None,
            lambda: None,
            delta_min: None,
            drift_bound: match &env {
                EnvPlan::Slow(c) => Some(c.drift_bound()),
                EnvPlan::Abrupt(_) => None,
            },
            bound: BoundOrder::Abrupt { nu: 0.0 },
            bound_exponent: 0.0,
        };

        let env_bound = match self.environment {
            EnvironmentConfig::Abrupt { nu, .. } => BoundOrder::Abrupt { nu },
            EnvironmentConfig::Slow { kappa, .. } => BoundOrder::SlowSwUcb { alpha: (0.75 * kappa).min(1.0) },
        };

        let (policy, bound) = match &self.policy {
            PolicyConfig::LmDsee { tuning, a, b, delta_min, kappa_max } => {
                let tuning = self.tuning_or_default(*tuning);
                let (a, b) = match tuning {
                    Tuning::Abrupt { .. } => (a.unwrap_or(1.0), b.unwrap_or(0.25)),
                    Tuning::Slow { .. } => (a.unwrap_or(20.0), b.unwrap_or(1.0)),
                };
                let kappa_max = kappa_max.unwrap_or(DEFAULT_KAPPA_MAX);
                let (params, dmin, bound) = match tuning {
                    Tuning::Abrupt { nu } => {
                        let dmin = match delta_min {
                            Some(d) => *d,
                            None => self.true_delta_min()?,
                        };
                        let p = lmdsee_configure_abrupt(arms, nu, dmin, a, b).map_err(cfg_err)?;
                        (p, Some(dmin), BoundOrder::Abrupt { nu })
                    }
                    Tuning::Slow { kappa } => {
                        let p = lmdsee_configure_slow(arms, kappa, kappa_max, a, b).map_err(cfg_err)?;
                        derived.kappa_tilde = Some(kappa.min(kappa_max));
                        let rho = p.rho;
                        (p, *delta_min, BoundOrder::SlowLmDsee { rho })
                    }
                };
                derived.rho = Some(params.rho);
                derived.l = Some(params.l);
                derived.delta_min = dmin;
                match params.gamma {
                    GammaRule::Fixed(g) => {
                        derived.gamma_rule = Some("fixed".into());
                        derived.gamma = Some(g);
                    }
                    GammaRule::Slow => derived.gamma_rule = Some("slow_rule".into()),
                }
                config.policy = PolicyConfig::LmDsee {
                    tuning: Some(tuning),
                    a: Some(a),
                    b: Some(b),
                    delta_min: dmin,
                    kappa_max: Some(kappa_max),
                };
                (PolicyPlan::LmDsee(params), bound)
            }
            PolicyConfig::SwUcbSharp { tuning, lambda, delta_min } => {
                let tuning = self.tuning_or_default(*tuning);
                let (params, bound) = match tuning {
                    Tuning::Abrupt { nu } => {
                        let p = SwUcbSharpParams::abrupt(arms, nu, lambda.unwrap_or(12.3)).map_err(cfg_err)?;
                        (p, BoundOrder::Abrupt { nu })
                    }
                    Tuning::Slow { kappa } => {
                        let p = SwUcbSharpParams::slow(arms, kappa, lambda.unwrap_or(4.3)).map_err(cfg_err)?;
                        let alpha = p.alpha;
                        (p, BoundOrder::SlowSwUcb { alpha })
                    }
                };
                derived.alpha = Some(params.alpha);
                derived.lambda = Some(params.lambda);
                derived.delta_min = *delta_min;
                config.policy = PolicyConfig::SwUcbSharp {
                    tuning: Some(tuning),
                    lambda: Some(params.lambda),
                    delta_min: *delta_min,
                };
                (PolicyPlan::SwUcbSharp(params), bound)
            }
            PolicyConfig::Ucb => (PolicyPlan::Ucb, env_bound),
            PolicyConfig::Dsee { w } => {
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(cfg_err(format!("dsee w = {w} must be > 0")));
                }
                (PolicyPlan::Dsee { w: *w }, env_bound)
            }
            PolicyConfig::Random => (PolicyPlan::Random, env_bound),
        };
        derived.bound = bound;
        derived.bound_exponent = bound.exponent();

        Ok(Resolved { config, env, reward, policy, derived })
    }

    fn tuning_or_default(&self, tuning: Option<Tuning>) -> Tuning {
        let t = tuning.unwrap_or_else(|| self.environment.matching_tuning());
        if t.class() != self.environment.class() {
            warn!(
                "policy tuned for {:?} environment but running in {:?} environment",
                t.class(),
                self.environment.class()
            );
        }
        t
    }

    /// Gap every realization of the configured environment is guaranteed to have.
    fn true_delta_min(&self) -> Result<f64, HarnessError> {
        match &self.environment {
            EnvironmentConfig::Abrupt { nu, mean_set } => AbruptConfig {
                nu: *nu,
                mean_set: mean_set.clone(),
                horizon: self.horizon,
                arms: self.arms,
            }
            .guaranteed_delta_min()
            .filter(|d| *d > 0.0)
            .ok_or_else(|| cfg_err("delta_min cannot be derived from the environment; set it explicitly")),
            EnvironmentConfig::Slow { .. } => Err(cfg_err(
                "delta_min must be given explicitly for abrupt tuning in a slowly-varying environment",
            )),
        }
    }
}
