//! CSV and JSON result files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Derived, ExperimentConfig, ExperimentOutput, HarnessError, ReplicationFailure, RunRecord};
use crate::policy::PhaseSpan;
use crate::regret::{AggregateTrace, BoundCurve};

pub const CSV_HEADER: &str = "t,mean_regret,std_regret,bound_ratio";
const SIG_DIGITS: usize = 9;

/// Decimal rendering rounded to `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().expect("valid float");
    format!("{rounded}")
}

pub fn render_csv(agg: &AggregateTrace, bound: Option<&BoundCurve>) -> String {
    let mut s = String::with_capacity(agg.horizon() * 40);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for (i, (m, sd)) in agg.mean.iter().zip(&agg.std).enumerate() {
        let t = i + 1;
        let ratio = bound.and_then(|b| b.at(t)).map(|r| format_sig(r, SIG_DIGITS)).unwrap_or_default();
        writeln!(s, "{t},{},{},{ratio}", format_sig(*m, SIG_DIGITS), format_sig(*sd, SIG_DIGITS)).unwrap();
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.into(), source })?;
    }
    fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.into(), source })
}

/// Writes the per-time aggregate; the ratio column is empty where no bound value exists.
pub fn emit_csv(agg: &AggregateTrace, bound: Option<&BoundCurve>, path: &Path) -> Result<(), HarnessError> {
    write_file(path, &render_csv(agg, bound))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub bound_ratio: Option<f64>,
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let bad = |line: usize, what: &str| HarnessError::Runtime(format!("{}:{line}: {what}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(bad(1, "unexpected header")),
    }
    lines
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(i + 1, "expected 4 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            Ok(CsvRow {
                t: f[0].parse().map_err(|_| bad(i + 1, "bad t"))?,
                mean_regret: num(f[1])?,
                std_regret: num(f[2])?,
                bound_ratio: if f[3].is_empty() { None } else { Some(num(f[3])?) },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub horizon: usize,
    pub replications_completed: usize,
    pub replications_failed: usize,
    pub final_mean_regret: f64,
    pub final_std_regret: f64,
    pub final_bound_ratio: Option<f64>,
    pub bound_exponent: f64,
}

/// Everything needed to reproduce and audit an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub config: ExperimentConfig,
    pub derived: Derived,
    pub replications: Vec<RunRecord>,
    pub failures: Vec<ReplicationFailure>,
    pub summary: Summary,
}

impl RunDocument {
    pub fn from_output(out: &ExperimentOutput) -> Self {
        let agg = &out.aggregate;
        let mut config = out.resolved.config.clone();
        config.output = Default::default();
        RunDocument {
            config,
            derived: out.resolved.derived.clone(),
            replications: out.records(),
            failures: out.failures.clone(),
            summary: Summary {
                horizon: agg.horizon(),
                replications_completed: agg.replications,
                replications_failed: out.failures.len(),
                final_mean_regret: agg.final_mean().unwrap_or(0.0),
                final_std_regret: agg.final_std().unwrap_or(0.0),
                final_bound_ratio: out.bound.at(agg.horizon()),
                bound_exponent: out.bound.exponent,
            },
        }
    }
}

pub fn emit_json(out: &ExperimentOutput, path: &Path) -> Result<(), HarnessError> {
    let doc = RunDocument::from_output(out);
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    text.push('\n');
    write_file(path, &text)
}

pub fn render_trajectory_csv(spans: &[PhaseSpan]) -> String {
    let mut s = String::from("epoch,phase,t_start,t_end\n");
    for p in spans {
        writeln!(s, "{},{},{},{}", p.epoch, p.phase.as_str(), p.t_start, p.t_end).unwrap();
    }
    s
}

pub fn write_trajectory_csv(spans: &[PhaseSpan], path: &Path) -> Result<(), HarnessError> {
    write_file(path, &render_trajectory_csv(spans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Phase;
    use crate::regret::{aggregate, bound_ratio, BoundOrder, RegretTrace};

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(-0.0, 9), "0");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(123456.789012, 9), "123456.789");
        assert_eq!(format_sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(format_sig(2.0 / 3.0, 3), "0.667");
    }

    #[test]
    fn csv_layout() {
        let agg = aggregate(&[RegretTrace::from_instantaneous(vec![0.5, 0.25, 0.0])]).unwrap();
        let b = bound_ratio(&agg, BoundOrder::Abrupt { nu: 1.0 });
        let text = render_csv(&agg, Some(&b));
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,0.5,0,");
        // 0.75 / (2 ln 2)
        assert_eq!(lines[2], format!("2,0.75,0,{}", format_sig(0.75 / (2.0 * 2f64.ln()), 9)));
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "");
        assert!(!text.contains('\r'));
        let none = render_csv(&agg, None);
        assert!(none.lines().skip(1).all(|l| l.ends_with(',')));
    }

    #[test]
    fn trajectory_layout() {
        let spans = [
            PhaseSpan { epoch: 1, phase: Phase::Explore, t_start: 1, t_end: 10 },
            PhaseSpan { epoch: 1, phase: Phase::Exploit, t_start: 11, t_end: 12 },
        ];
        assert_eq!(render_trajectory_csv(&spans), "epoch,phase,t_start,t_end\n1,explore,1,10\n1,exploit,11,12\n");
    }
}
