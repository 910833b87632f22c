use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use nsbandit::harness::overrides::{apply_param, parse_env_spec, set_environment, set_policy, suffixed_path};
use nsbandit::harness::{
    emit_csv, emit_json, run_experiment, write_trajectory_csv, ExperimentConfig, HarnessError, PolicyPlan,
};
use nsbandit::policy::lmdsee_trajectory;

/// Non-stationary bandit simulations.
#[derive(Parser)]
#[command(name = "nsb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Simulate(SimulateArgs),
    /// Run one experiment per value of a parameter.
    Sweep(SweepArgs),
    /// Write the LM-DSEE explore/exploit schedule.
    Trajectory(TrajectoryArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// lmdsee, swucbsharp, ucb, dsee or random.
    #[arg(long)]
    policy: Option<String>,
    /// abrupt[:NU] or slow[:KAPPA].
    #[arg(long)]
    env: Option<String>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct TrajectoryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let path = &common.config;
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
    let mut cfg =
        ExperimentConfig::from_json(&text).map_err(|source| HarnessError::Parse { path: path.clone(), source })?;
    if let Some(spec) = &common.env {
        let env = parse_env_spec(spec, &cfg.environment)?;
        set_environment(&mut cfg, env);
    }
    if let Some(p) = &common.policy {
        set_policy(&mut cfg, p)?;
    }
    if let Some(t) = &common.horizon {
        apply_param(&mut cfg, "T", t)?;
    }
    if let Some(r) = &common.reps {
        apply_param(&mut cfg, "reps", r)?;
    }
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

/// Runs and writes outputs; partial failures are reported after the files are written.
fn simulate(cfg: &ExperimentConfig, csv: Option<&Path>, json: Option<&Path>) -> Result<(), HarnessError> {
    let out = run_experiment(cfg)?;
    let agg = &out.aggregate;
    println!(
        "{} T={} reps={} final mean regret {:.3} (sd {:.3}), bound ratio {}",
        cfg.policy.name(),
        agg.horizon(),
        agg.replications,
        agg.final_mean().unwrap_or(0.0),
        agg.final_std().unwrap_or(0.0),
        out.bound.at(agg.horizon()).map_or("-".into(), |r| format!("{r:.4}")),
    );
    if let Some(p) = csv.or(cfg.output.csv.as_deref()) {
        emit_csv(agg, Some(&out.bound), p)?;
        info!("wrote {}", p.display());
    }
    if let Some(p) = json.or(cfg.output.json.as_deref()) {
        emit_json(&out, p)?;
        info!("wrote {}", p.display());
    }
    match out.failures.first() {
        Some(f) => Err(HarnessError::Replication { index: f.replication, message: f.message.clone() }),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = load(&a.common)?;
            simulate(&cfg, a.out_csv.as_deref(), a.out_json.as_deref())
        }
        Command::Sweep(a) => {
            let base = load(&a.common)?;
            let csv = a.out_csv.or_else(|| base.output.csv.clone());
            let json = a.out_json.or_else(|| base.output.json.clone());
            // Validate every point before running any of them.
            let mut points = Vec::new();
            for v in &a.values {
                let mut cfg = base.clone();
                apply_param(&mut cfg, &a.param, v)?;
                cfg.resolve()?;
                points.push((v, cfg));
            }
            for (v, cfg) in points {
                let c = csv.as_deref().map(|p| suffixed_path(p, &a.param, v));
                let j = json.as_deref().map(|p| suffixed_path(p, &a.param, v));
                print!("{}={v}: ", a.param);
                simulate(&cfg, c.as_deref(), j.as_deref())?;
            }
            Ok(())
        }
        Command::Trajectory(a) => {
            let cfg = load(&a.common)?;
            let resolved = cfg.resolve()?;
            let PolicyPlan::LmDsee(params) = &resolved.policy else {
                return Err(HarnessError::Config(format!(
                    "trajectory needs the lmdsee policy, configuration uses {}",
                    cfg.policy.name()
                )));
            };
            let spans = lmdsee_trajectory(params, cfg.horizon as u64)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            write_trajectory_csv(&spans, &a.out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nsb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
