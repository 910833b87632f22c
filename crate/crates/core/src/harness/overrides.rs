//! Command-line style edits to an [`ExperimentConfig`].

use std::path::{Path, PathBuf};

use super::{EnvironmentConfig, ExperimentConfig, HarnessError, PolicyConfig, Tuning};
use crate::env::DEFAULT_MEAN_SET;

fn err(msg: String) -> HarnessError {
    HarnessError::Config(msg)
}

fn parse_f64(name: &str, value: &str) -> Result<f64, HarnessError> {
    value.trim().parse().map_err(|_| err(format!("{name}: '{value}' is not a number")))
}

fn parse_usize(name: &str, value: &str) -> Result<usize, HarnessError> {
    let v = value.trim();
    v.parse::<usize>()
        .ok()
        .or_else(|| v.parse::<f64>().ok().filter(|x| x.fract() == 0.0 && *x >= 0.0 && *x <= 1e15).map(|x| x as usize))
        .ok_or_else(|| err(format!("{name}: '{value}' is not a non-negative integer")))
}

/// `abrupt`, `abrupt:NU`, `slow` or `slow:KAPPA`. A bare kind keeps the configured
/// parameter when the kind is unchanged.
pub fn parse_env_spec(spec: &str, current: &EnvironmentConfig) -> Result<EnvironmentConfig, HarnessError> {
    let (kind, param) = match spec.split_once(':') {
        Some((k, p)) => (k, Some(parse_f64(k, p)?)),
        None => (spec, None),
    };
    Ok(match (kind, current) {
        ("abrupt", EnvironmentConfig::Abrupt { nu, mean_set }) => {
            EnvironmentConfig::Abrupt { nu: param.unwrap_or(*nu), mean_set: mean_set.clone() }
        }
        ("abrupt", _) => EnvironmentConfig::Abrupt {
            nu: param.ok_or_else(|| err("abrupt environment needs a value, e.g. abrupt:0.2".into()))?,
            mean_set: DEFAULT_MEAN_SET.to_vec(),
        },
        ("slow", EnvironmentConfig::Slow { kappa, init_low, init_high }) => EnvironmentConfig::Slow {
            kappa: param.unwrap_or(*kappa),
            init_low: *init_low,
            init_high: *init_high,
        },
        ("slow", _) => EnvironmentConfig::Slow {
            kappa: param.ok_or_else(|| err("slow environment needs a value, e.g. slow:1.0".into()))?,
            init_low: 0.1,
            init_high: 0.9,
        },
        (other, _) => return Err(err(format!("unknown environment '{other}' (expected abrupt or slow)"))),
    })
}

/// Replaces the environment and drops any explicit policy tuning, so the policy is
/// re-tuned to the new environment.
pub fn set_environment(cfg: &mut ExperimentConfig, env: EnvironmentConfig) {
    cfg.environment = env;
    if let PolicyConfig::LmDsee { tuning, .. } | PolicyConfig::SwUcbSharp { tuning, .. } = &mut cfg.policy {
        *tuning = None;
    }
}

/// Switches policy kind; settings are kept when the kind is unchanged.
pub fn set_policy(cfg: &mut ExperimentConfig, name: &str) -> Result<(), HarnessError> {
    let fresh = PolicyConfig::from_name(name)?;
    if fresh.name() != cfg.policy.name() {
        cfg.policy = fresh;
    }
    Ok(())
}

/// Names accepted by [`apply_param`].
pub const SWEEP_PARAMS: &[&str] = &[
    "nu", "kappa", "lambda", "a", "b", "w", "delta_min", "kappa_max", "T", "horizon", "reps",
    "replications", "seed", "arms", "concentration",
];

/// Sets one named parameter from its textual value.
pub fn apply_param(cfg: &mut ExperimentConfig, name: &str, value: &str) -> Result<(), HarnessError> {
    match name {
        "nu" => {
            let v = parse_f64(name, value)?;
            match &mut cfg.environment {
                EnvironmentConfig::Abrupt { nu, .. } => *nu = v,
                EnvironmentConfig::Slow { .. } => return Err(err("nu applies only to the abrupt environment".into())),
            }
            retune(cfg, |t| if let Tuning::Abrupt { nu } = t { *nu = v });
        }
        "kappa" => {
            let v = parse_f64(name, value)?;
            match &mut cfg.environment {
                EnvironmentConfig::Slow { kappa, .. } => *kappa = v,
                EnvironmentConfig::Abrupt { .. } => return Err(err("kappa applies only to the slow environment".into())),
            }
            retune(cfg, |t| if let Tuning::Slow { kappa } = t { *kappa = v });
        }
        "lambda" => match &mut cfg.policy {
            PolicyConfig::SwUcbSharp { lambda, .. } => *lambda = Some(parse_f64(name, value)?),
            _ => return Err(err("lambda applies only to swucbsharp".into())),
        },
        "a" | "b" | "kappa_max" => {
            let v = parse_f64(name, value)?;
            match &mut cfg.policy {
                PolicyConfig::LmDsee { a, b, kappa_max, .. } => {
                    *match name {
                        "a" => a,
                        "b" => b,
                        _ => kappa_max,
                    } = Some(v)
                }
                _ => return Err(err(format!("{name} applies only to lmdsee"))),
            }
        }
        "delta_min" => {
            let v = Some(parse_f64(name, value)?);
            match &mut cfg.policy {
                PolicyConfig::LmDsee { delta_min, .. } | PolicyConfig::SwUcbSharp { delta_min, .. } => *delta_min = v,
                _ => return Err(err("delta_min applies only to lmdsee and swucbsharp".into())),
            }
        }
        "w" => match &mut cfg.policy {
            PolicyConfig::Dsee { w } => *w = parse_f64(name, value)?,
            _ => return Err(err("w applies only to dsee".into())),
        },
        "T" | "horizon" => cfg.horizon = parse_usize(name, value)?,
        "reps" | "replications" => cfg.replications = parse_usize(name, value)?,
        "seed" => cfg.master_seed = value.trim().parse().map_err(|_| err(format!("seed: '{value}' is not a u64")))?,
        "arms" => cfg.arms = parse_usize(name, value)?,
        "concentration" => cfg.reward.concentration = parse_f64(name, value)?,
        other => {
            return Err(err(format!("unknown sweep parameter '{other}' (expected one of {})", SWEEP_PARAMS.join(", "))))
        }
    }
    Ok(())
}

fn retune(cfg: &mut ExperimentConfig, f: impl Fn(&mut Tuning)) {
    if let PolicyConfig::LmDsee { tuning: Some(t), .. } | PolicyConfig::SwUcbSharp { tuning: Some(t), .. } =
        &mut cfg.policy
    {
        f(t)
    }
}

/// `dir/stem.ext` becomes `dir/stem_param_value.ext`.
pub fn suffixed_path(path: &Path, param: &str, value: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut name = format!("{stem}_{param}_{}", value.trim());
    if let Some(ext) = path.extension() {
        name.push('.');
        name.push_str(&ext.to_string_lossy());
    }
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_json(
            r#"{"environment": {"kind": "abrupt", "nu": 0.2},
                "policy": {"kind": "lmdsee", "tuning": {"class": "abrupt", "nu": 0.2}}}"#,
        )
        .unwrap()
    }

    #[test]
    fn env_specs() {
        let cur = base().environment;
        assert_eq!(
            parse_env_spec("abrupt:0.5", &cur).unwrap(),
            EnvironmentConfig::Abrupt { nu: 0.5, mean_set: DEFAULT_MEAN_SET.to_vec() }
        );
        assert_eq!(parse_env_spec("abrupt", &cur).unwrap(), cur);
        assert!(matches!(parse_env_spec("slow:1.5", &cur).unwrap(), EnvironmentConfig::Slow { kappa, .. } if kappa == 1.5));
        assert!(parse_env_spec("slow", &cur).is_err());
        assert!(parse_env_spec("abrupt:x", &cur).is_err());
        assert!(parse_env_spec("walk", &cur).is_err());
    }

    #[test]
    fn nu_moves_environment_and_tuning() {
        let mut cfg = base();
        apply_param(&mut cfg, "nu", "0.4").unwrap();
        assert!(matches!(cfg.environment, EnvironmentConfig::Abrupt { nu, .. } if nu == 0.4));
        assert!(matches!(cfg.policy, PolicyConfig::LmDsee { tuning: Some(Tuning::Abrupt { nu }), .. } if nu == 0.4));
        assert!(apply_param(&mut cfg, "kappa", "1").is_err());
        assert!(apply_param(&mut cfg, "lambda", "1").is_err());
        assert!(apply_param(&mut cfg, "zeta", "1").is_err());
    }

    #[test]
    fn integer_params_accept_scientific_notation() {
        let mut cfg = base();
        apply_param(&mut cfg, "T", "1e4").unwrap();
        assert_eq!(cfg.horizon, 10_000);
        assert!(apply_param(&mut cfg, "reps", "2.5").is_err());
    }

    #[test]
    fn switching_environment_drops_stale_tuning() {
        let mut cfg = base();
        set_environment(&mut cfg, EnvironmentConfig::Slow { kappa: 1.0, init_low: 0.1, init_high: 0.9 });
        assert!(matches!(cfg.policy, PolicyConfig::LmDsee { tuning: None, .. }));
    }

    #[test]
    fn path_suffix() {
        assert_eq!(suffixed_path(Path::new("out/run.csv"), "nu", "0.3"), PathBuf::from("out/run_nu_0.3.csv"));
        assert_eq!(suffixed_path(Path::new("run"), "T", "10"), PathBuf::from("run_T_10"));
    }
}
