//! Monte-Carlo experiment runner.
//!
//! Each replication owns a ChaCha12 stream derived from the master seed and its index,
//! so results do not depend on thread count or scheduling order.

mod config;
mod output;
pub mod overrides;

use std::path::PathBuf;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{
    Derived, EnvClass, EnvPlan, EnvironmentConfig, ExperimentConfig, OutputConfig, PolicyConfig,
    PolicyPlan, Resolved, RewardConfig, Tuning, DEFAULT_ARMS, DEFAULT_DSEE_W, DEFAULT_HORIZON,
    DEFAULT_KAPPA_MAX, DEFAULT_REPLICATIONS, MAX_HORIZON,
};
pub use output::{
    emit_csv, emit_json, format_sig, read_csv, render_csv, render_trajectory_csv, write_trajectory_csv,
    CsvRow, RunDocument, Summary,
};

use crate::env::{gen_abrupt_means, gen_slow_means, MeanMatrix};
use crate::policy::{Dsee, LmDsee, Policy, PolicyError, StepFeedback, SwUcbSharp, Ucb, UniformRandom};
use crate::regret::{aggregate, bound_ratio, AggregateTrace, BoundCurve, RegretTrace};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "NSB_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("replication {index} failed: {message}")]
    Replication { index: usize, message: String },
    #[error("all {0} replications failed")]
    AllFailed(usize),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for bad input, 2 for faults while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Parse { .. } => 1,
            _ => 2,
        }
    }
}

/// How replications are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Worker pool of the given size, or rayon's default when `None`.
    Parallel { threads: Option<usize> },
}

impl Execution {
    /// Parallel when the `parallel` feature is enabled, sized by `NSB_THREADS` if set.
    pub fn from_env() -> Result<Self, HarnessError> {
        let threads = match std::env::var(THREADS_ENV) {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => return Err(HarnessError::Config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
            },
            Err(_) => None,
        };
        if cfg!(feature = "parallel") {
            Ok(Execution::Parallel { threads })
        } else {
            Ok(Execution::Sequential)
        }
    }
}

/// Per-replication summary written to the JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replication: usize,
    pub master_seed: u64,
    /// ChaCha12 stream the replication drew from.
    pub stream: u64,
    /// SHA-256 over the little-endian `u32` arm indices.
    pub digest: String,
    pub final_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub trace: RegretTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub resolved: Resolved,
    /// Successful replications in index order.
    pub runs: Vec<RunOutput>,
    pub failures: Vec<ReplicationFailure>,
    pub aggregate: AggregateTrace,
    pub bound: BoundCurve,
}

impl ExperimentOutput {
    pub fn records(&self) -> Vec<RunRecord> {
        self.runs.iter().map(|r| r.record.clone()).collect()
    }
}

/// Random source of replication `index`.
pub fn replication_rng(master_seed: u64, index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// The mean trajectory replication `index` runs against.
pub fn replication_means(resolved: &Resolved, index: usize) -> Result<MeanMatrix, HarnessError> {
    let mut rng = replication_rng(resolved.config.master_seed, index);
    generate_means(resolved, &mut rng)
}

fn generate_means(resolved: &Resolved, rng: &mut ChaCha12Rng) -> Result<MeanMatrix, HarnessError> {
    match &resolved.env {
        EnvPlan::Abrupt(c) => gen_abrupt_means(c, rng),
        EnvPlan::Slow(c) => gen_slow_means(c, rng),
    }
    .map_err(|e| HarnessError::Config(e.to_string()))
}

pub fn build_policy(plan: &PolicyPlan, arms: usize, seed: u64) -> Result<Box<dyn Policy + Send>, PolicyError> {
    Ok(match plan {
        PolicyPlan::LmDsee(p) => Box::new(LmDsee::new(p.clone())?),
        PolicyPlan::SwUcbSharp(p) => Box::new(SwUcbSharp::new(p.clone())?),
        PolicyPlan::Ucb => Box::new(Ucb::new(arms)?),
        PolicyPlan::Dsee { w } => Box::new(Dsee::new(arms, *w)?),
        PolicyPlan::Random => Box::new(UniformRandom::new(arms, seed)?),
    })
}

/// Runs one replication: means first, then the policy seed, then rewards, all from the
/// replication's own stream.
pub fn run_replication(resolved: &Resolved, index: usize) -> Result<RunOutput, HarnessError> {
    let fail = |message: String| HarnessError::Replication { index, message };
    let cfg = &resolved.config;
    let mut rng = replication_rng(cfg.master_seed, index);
    let mm = generate_means(resolved, &mut rng)?;
    let policy_seed = rng.next_u64();
    let mut policy = build_policy(&resolved.policy, cfg.arms, policy_seed).map_err(|e| fail(e.to_string()))?;

    let mut hasher = Sha256::new();
    let mut pulls = Vec::with_capacity(cfg.horizon);
    let mut feedback = None;
    for t in 1..=cfg.horizon {
        let arm = policy.step(feedback).map_err(|e| fail(format!("t = {t}: {e}")))?;
        let mu = mm.mean(arm, t).map_err(|e| fail(format!("t = {t}: {e}")))?;
        let reward = resolved.reward.sample(mu, &mut rng);
        hasher.update((arm as u32).to_le_bytes());
        pulls.push(arm);
        feedback = Some(StepFeedback { arm, reward });
    }
    if let Some(fb) = feedback {
        policy.observe(fb).map_err(|e| fail(e.to_string()))?;
    }
    let trace = RegretTrace::from_pulls(&mm, &pulls).map_err(|e| fail(e.to_string()))?;
    let record = RunRecord {
        replication: index,
        master_seed: cfg.master_seed,
        stream: index as u64,
        digest: hex::encode(hasher.finalize()),
        final_regret: trace.total(),
    };
    Ok(RunOutput { record, trace })
}

fn run_all(resolved: &Resolved, exec: Execution) -> Result<Vec<Result<RunOutput, HarnessError>>, HarnessError> {
    let reps = resolved.config.replications;
    match exec {
        Execution::Sequential => Ok((0..reps).map(|m| run_replication(resolved, m)).collect()),
        #[cfg(feature = "parallel")]
        Execution::Parallel { threads } => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| HarnessError::Runtime(e.to_string()))?;
            Ok(pool.install(|| (0..reps).into_par_iter().map(|m| run_replication(resolved, m)).collect()))
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel { .. } => Ok((0..reps).map(|m| run_replication(resolved, m)).collect()),
    }
}

/// Runs all replications with the execution mode taken from the environment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    run_experiment_with(cfg, Execution::from_env()?)
}

/// Failed replications are reported in `failures`; it is an error only if none succeed.
pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentOutput, HarnessError> {
    let resolved = cfg.resolve()?;
    // Environment parameters are checked once up front so they surface as configuration errors.
    replication_means(&resolved, 0)?;
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (m, result) in run_all(&resolved, exec)?.into_iter().enumerate() {
        match result {
            Ok(run) => runs.push(run),
            Err(e) => {
                log::error!("{e}");
                failures.push(ReplicationFailure { replication: m, message: e.to_string() });
            }
        }
    }
    if runs.is_empty() {
        return Err(HarnessError::AllFailed(failures.len()));
    }
    let traces: Vec<RegretTrace> = runs.iter().map(|r| r.trace.clone()).collect();
    let aggregate = aggregate(&traces).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let bound = bound_ratio(&aggregate, resolved.derived.bound);
    Ok(ExperimentOutput { resolved, runs, failures, aggregate, bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(policy: &str) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::from_json(&format!(
            r#"{{"environment": {{"kind": "abrupt", "nu": 0.3}}, "policy": {{"kind": "{policy}"}},
                "horizon": 2000, "replications": 3, "master_seed": 11}}"#
        ))
        .unwrap();
        cfg.arms = 10;
        cfg
    }

    #[test]
    fn sequential_and_parallel_agree() {
        for p in ["lmdsee", "swucbsharp", "ucb", "dsee", "random"] {
            let cfg = small(p);
            let a = run_experiment_with(&cfg, Execution::Sequential).unwrap();
            let b = run_experiment_with(&cfg, Execution::Parallel { threads: Some(3) }).unwrap();
            assert_eq!(a.records(), b.records(), "{p}");
            assert_eq!(a.aggregate, b.aggregate, "{p}");
        }
    }

    #[test]
    fn records_match_traces() {
        let out = run_experiment_with(&small("swucbsharp"), Execution::Sequential).unwrap();
        assert_eq!(out.runs.len(), 3);
        for (m, run) in out.runs.iter().enumerate() {
            assert_eq!(run.record.replication, m);
            assert_eq!(run.record.digest.len(), 64);
            assert_eq!(run.record.final_regret, run.trace.total());
        }
        assert_eq!(out.bound.values.len(), 1999);
    }

    #[test]
    fn seeds_change_results() {
        let mut cfg = small("ucb");
        let a = run_experiment_with(&cfg, Execution::Sequential).unwrap();
        cfg.master_seed = 12;
        let b = run_experiment_with(&cfg, Execution::Sequential).unwrap();
        assert_ne!(a.records()[0].digest, b.records()[0].digest);
    }

    #[test]
    fn config_errors_map_to_exit_one() {
        let mut cfg = small("ucb");
        cfg.horizon = 0;
        let e = run_experiment_with(&cfg, Execution::Sequential).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert_eq!(HarnessError::AllFailed(2).exit_code(), 2);
    }
}
