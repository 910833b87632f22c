//! Regret against the mean-reward oracle, Monte-Carlo aggregation, and bound ratios.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, MeanMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegretError {
    #[error(transparent)]
    Index(#[from] EnvError),
    #[error("pull sequence has {pulls} steps but the environment horizon is {horizon}")]
    LengthMismatch { pulls: usize, horizon: usize },
    #[error("trace {index} has horizon {found}, expected {expected}")]
    HorizonMismatch { index: usize, expected: usize, found: usize },
    #[error("cannot aggregate zero traces")]
    Empty,
}

/// `mu_{j*_t}(t) - mu_arm(t)` from true means.
pub fn instantaneous_regret(mm: &MeanMatrix, t: usize, arm: usize) -> Result<f64, RegretError> {
    let (_, best) = mm.oracle_best(t)?;
    Ok(best - mm.mean(arm, t)?)
}

/// Left-to-right prefix sums.
pub fn cumulative(instantaneous: &[f64]) -> Vec<f64> {
    instantaneous
        .iter()
        .scan(0.0, |acc, &r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// Regret of a single run; index `i` holds time `t = i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn from_instantaneous(instantaneous: Vec<f64>) -> Self {
        let cumulative = cumulative(&instantaneous);
        Self { instantaneous, cumulative }
    }

    /// Regret of the arm sequence `pulls[t - 1]` over the whole matrix horizon.
    pub fn from_pulls(mm: &MeanMatrix, pulls: &[usize]) -> Result<Self, RegretError> {
        if pulls.len() != mm.horizon() {
            return Err(RegretError::LengthMismatch { pulls: pulls.len(), horizon: mm.horizon() });
        }
        let best = mm.best_means();
        let inst = pulls
            .iter()
            .enumerate()
            .map(|(i, &arm)| Ok(best[i] - mm.mean(arm, i + 1)?))
            .collect::<Result<Vec<_>, RegretError>>()?;
        Ok(Self::from_instantaneous(inst))
    }

    pub fn horizon(&self) -> usize {
        self.instantaneous.len()
    }

    /// `R(T)`, zero for an empty trace.
    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Pointwise mean and sample standard deviation of `R(t)` over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTrace {
    pub replications: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Mean instantaneous regret per step.
    pub mean_instantaneous: Vec<f64>,
}

impl AggregateTrace {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    pub fn final_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }

    pub fn final_std(&self) -> Option<f64> {
        self.std.last().copied()
    }
}

// Sum after sorting so the result does not depend on replication order.
fn order_free_mean_std(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    dev.sort_by(f64::total_cmp);
    let var = dev.iter().sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn aggregate(traces: &[RegretTrace]) -> Result<AggregateTrace, RegretError> {
    let first = traces.first().ok_or(RegretError::Empty)?;
    let horizon = first.horizon();
    if let Some((index, tr)) = traces.iter().enumerate().find(|(_, tr)| tr.horizon() != horizon) {
        return Err(RegretError::HorizonMismatch { index, expected: horizon, found: tr.horizon() });
    }
    let mut mean = Vec::with_capacity(horizon);
    let mut std = Vec::with_capacity(horizon);
    let mut mean_instantaneous = Vec::with_capacity(horizon);
    let mut column = vec![0.0; traces.len()];
    for i in 0..horizon {
        for (c, tr) in column.iter_mut().zip(traces) {
            *c = tr.cumulative[i];
        }
        let (m, s) = order_free_mean_std(&mut column);
        mean.push(m);
        std.push(s);
        for (c, tr) in column.iter_mut().zip(traces) {
            *c = tr.instantaneous[i];
        }
        mean_instantaneous.push(order_free_mean_std(&mut column).0);
    }
    Ok(AggregateTrace { replications: traces.len(), mean, std, mean_instantaneous })
}

/// The regret order `t^e ln t` a configuration is expected to stay below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum BoundOrder {
    /// `e = (1 + nu) / 2`; piecewise-constant environments, either policy.
    Abrupt { nu: f64 },
    /// `e = (3 + 2 rho) / (3 + 3 rho)`; LM-DSEE under drift.
    SlowLmDsee { rho: f64 },
    /// `e = 1 - alpha / 3`; SW-UCB# under drift.
    SlowSwUcb { alpha: f64 },
}

impl BoundOrder {
    pub fn exponent(&self) -> f64 {
        match *self {
            BoundOrder::Abrupt { nu } => (1.0 + nu) / 2.0,
            BoundOrder::SlowLmDsee { rho } => (3.0 + 2.0 * rho) / (3.0 + 3.0 * rho),
            BoundOrder::SlowSwUcb { alpha } => 1.0 - alpha / 3.0,
        }
    }

    /// `t^e ln t`.
    pub fn scale(&self, t: usize) -> f64 {
        let t = t as f64;
        t.powf(self.exponent()) * t.ln()
    }
}

impl fmt::Display for BoundOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^{:.6} ln t", self.exponent())
    }
}

/// `R(t) / (t^e ln t)` for `t = 2..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub order: BoundOrder,
    pub exponent: f64,
    /// `values[i]` is the ratio at `t = i + 2`.
    pub values: Vec<f64>,
}

impl BoundCurve {
    pub const FIRST_T: usize = 2;

    pub fn at(&self, t: usize) -> Option<f64> {
        t.checked_sub(Self::FIRST_T).and_then(|i| self.values.get(i).copied())
    }
}

pub fn bound_ratio(agg: &AggregateTrace, order: BoundOrder) -> BoundCurve {
    bound_ratio_of(&agg.mean, order)
}

/// Bound ratio of any cumulative curve indexed from `t = 1`.
pub fn bound_ratio_of(cumulative: &[f64], order: BoundOrder) -> BoundCurve {
    let values = cumulative
        .iter()
        .enumerate()
        .skip(BoundCurve::FIRST_T - 1)
        .map(|(i, &r)| r / order.scale(i + 1))
        .collect();
    BoundCurve { order, exponent: order.exponent(), values }
}

/// Ordinary least-squares slope and intercept of `ys` against `xs`.
pub fn linear_trend(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
