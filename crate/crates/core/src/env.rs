//! Ground-truth mean-reward trajectories and reward sampling.
//!
//! Trajectories are materialized up front as an `arms x horizon` table so that the
//! regret oracle is exact and can be shared read-only between replications.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::argmax_lowest;

/// Mean-reward levels drawn at every breakpoint of the abruptly-changing environment.
pub const DEFAULT_MEAN_SET: [f64; 10] = [0.05, 0.12, 0.19, 0.26, 0.33, 0.39, 0.46, 0.53, 0.6, 0.9];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("mean set has {available} values but {arms} arms need distinct means")]
    MeanSetTooSmall { available: usize, arms: usize },
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(String),
    #[error("time index {t} outside 1..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("arm index {arm} outside 0..{arms}")]
    ArmOutOfRange { arm: usize, arms: usize },
}

/// Dense table of `mu_j(t)` for every arm `j` and time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMatrix {
    arms: usize,
    horizon: usize,
    // time-major: the column for time t starts at (t - 1) * arms
    means: Vec<f64>,
}

impl MeanMatrix {
    /// Builds a matrix from `f(arm, t)`, `arm` zero-based and `t` one-based.
    pub fn from_fn(
        arms: usize,
        horizon: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, EnvError> {
        let mut means = Vec::with_capacity(arms * horizon);
        for t in 1..=horizon {
            for j in 0..arms {
                means.push(f(j, t));
            }
        }
        Self::from_time_major(arms, horizon, means)
    }

    /// Wraps a time-major table (`means[(t - 1) * arms + j]`).
    pub fn from_time_major(arms: usize, horizon: usize, means: Vec<f64>) -> Result<Self, EnvError> {
        if arms == 0 || horizon == 0 {
            return Err(EnvError::InvalidConfig(format!(
                "mean matrix needs at least one arm and one step, got {arms} x {horizon}"
            )));
        }
        if means.len() != arms * horizon {
            return Err(EnvError::InvalidConfig(format!(
                "expected {} entries for {arms} x {horizon}, got {}",
                arms * horizon,
                means.len()
            )));
        }
        if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(EnvError::InvalidConfig(format!("mean {bad} outside [0, 1]")));
        }
        Ok(Self { arms, horizon, means })
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// All arm means at time `t`.
    pub fn column(&self, t: usize) -> Result<&[f64], EnvError> {
        if t == 0 || t > self.horizon {
            return Err(EnvError::TimeOutOfRange { t, horizon: self.horizon });
        }
        let start = (t - 1) * self.arms;
        Ok(&self.means[start..start + self.arms])
    }

    pub fn mean(&self, arm: usize, t: usize) -> Result<f64, EnvError> {
        if arm >= self.arms {
            return Err(EnvError::ArmOutOfRange { arm, arms: self.arms });
        }
        Ok(self.column(t)?[arm])
    }

    /// The best arm at time `t` (lowest index on ties) and its mean.
    pub fn oracle_best(&self, t: usize) -> Result<(usize, f64), EnvError> {
        let col = self.column(t)?;
        let j = argmax_lowest(col.iter().copied()).expect("matrix has at least one arm");
        Ok((j, col[j]))
    }

    /// Best mean at every time step, `result[t - 1] = mu_{j*_t}(t)`.
    pub fn best_means(&self) -> Vec<f64> {
        self.means
            .chunks_exact(self.arms)
            .map(|col| col.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    pub fn gap_summary(&self) -> Result<GapSummary, EnvError> {
        if self.arms < 2 {
            return Err(EnvError::InvalidConfig(
                "gap summary needs at least two arms".to_string(),
            ));
        }
        let mut delta_j = vec![0.0_f64; self.arms];
        let mut delta_min = f64::INFINITY;
        for col in self.means.chunks_exact(self.arms) {
            let best = argmax_lowest(col.iter().copied()).expect("non-empty column");
            for (j, &mu) in col.iter().enumerate() {
                let gap = col[best] - mu;
                delta_j[j] = delta_j[j].max(gap);
                if j != best {
                    delta_min = delta_min.min(gap);
                }
            }
        }
        let delta_max = delta_j.iter().copied().fold(0.0, f64::max);
        Ok(GapSummary { delta_j, delta_max, delta_min })
    }
}

/// Per-arm maximal gaps and their extremes over the whole horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    pub delta_j: Vec<f64>,
    pub delta_max: f64,
    pub delta_min: f64,
}

/// `floor(t^nu)`, snapping to the nearest integer when `powf` lands within rounding
/// distance of one (perfect powers such as `100_000^0.2`).
fn floor_pow(t: usize, nu: f64) -> u64 {
    let x = (t as f64).powf(nu);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Times `t` in `2..=horizon` where `floor(t^nu)` differs from `floor((t-1)^nu)`.
pub fn breakpoints(nu: f64, horizon: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if horizon < 2 {
        return out;
    }
    let mut prev = floor_pow(1, nu);
    for t in 2..=horizon {
        let cur = floor_pow(t, nu);
        if cur != prev {
            out.push(t);
        }
        prev = cur;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbruptConfig {
    pub nu: f64,
    pub mean_set: Vec<f64>,
    pub horizon: usize,
    pub arms: usize,
}

impl AbruptConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..1.0).contains(&self.nu) {
            return Err(EnvError::InvalidConfig(format!("nu = {} outside [0, 1)", self.nu)));
        }
        if self.horizon == 0 || self.arms == 0 {
            return Err(EnvError::InvalidConfig("horizon and arm count must be positive".into()));
        }
        if self.mean_set.len() < self.arms {
            return Err(EnvError::MeanSetTooSmall {
                available: self.mean_set.len(),
                arms: self.arms,
            });
        }
        if let Some(bad) = self.mean_set.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return Err(EnvError::InvalidConfig(format!("mean set value {bad} outside (0, 1)")));
        }
        let mut sorted = self.mean_set.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(EnvError::InvalidConfig("mean set values must be distinct".into()));
        }
        Ok(())
    }

    /// Smallest best-vs-other gap that any draw of `arms` values from the mean set can
    /// produce.
    pub fn guaranteed_delta_min(&self) -> Option<f64> {
        if self.arms < 2 || self.mean_set.len() < 2 {
            return None;
        }
        let mut sorted = self.mean_set.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() == self.arms {
            Some(sorted[0] - sorted[1])
        } else {
            sorted.windows(2).map(|w| w[0] - w[1]).reduce(f64::min)
        }
    }
}

/// Piecewise-constant means. At `t = 1` and at every breakpoint the arms receive a
/// uniformly random ordered draw without replacement from the mean set.
pub fn gen_abrupt_means<R: Rng + ?Sized>(
    cfg: &AbruptConfig,
    rng: &mut R,
) -> Result<MeanMatrix, EnvError> {
    cfg.validate()?;
    let arms = cfg.arms;
    let mut pool = cfg.mean_set.clone();
    let mut means = Vec::with_capacity(arms * cfg.horizon);
    let mut change_at = breakpoints(cfg.nu, cfg.horizon).into_iter().peekable();
    let mut current = vec![0.0; arms];
    for t in 1..=cfg.horizon {
        if t == 1 || change_at.next_if_eq(&t).is_some() {
            let (chosen, _) = pool.partial_shuffle(rng, arms);
            current.copy_from_slice(chosen);
        }
        means.extend_from_slice(&current);
    }
    MeanMatrix::from_time_major(arms, cfg.horizon, means)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlowConfig {
    pub kappa: f64,
    pub horizon: usize,
    pub arms: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl SlowConfig {
    /// Per-step drift bound `2 * T^-kappa`.
    pub fn drift_bound(&self) -> f64 {
        2.0 * (self.horizon as f64).powf(-self.kappa)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(EnvError::InvalidConfig(format!("kappa = {} must be positive", self.kappa)));
        }
        if self.horizon == 0 || self.arms == 0 {
            return Err(EnvError::InvalidConfig("horizon and arm count must be positive".into()));
        }
        if !(0.0 <= self.init_low && self.init_low < self.init_high && self.init_high <= 1.0) {
            return Err(EnvError::InvalidConfig(format!(
                "initial range [{}, {}] must satisfy 0 <= low < high <= 1",
                self.init_low, self.init_high
            )));
        }
        let eps = self.drift_bound();
        if !eps.is_finite() {
            return Err(EnvError::InvalidConfig(format!("drift bound {eps} is not finite")));
        }
        Ok(())
    }
}

/// Means start uniform on `[init_low, init_high]` and take an independent
/// `Uniform[-eps, eps]` step per arm per time, clipped to `[0, 1]`.
pub fn gen_slow_means<R: Rng + ?Sized>(
    cfg: &SlowConfig,
    rng: &mut R,
) -> Result<MeanMatrix, EnvError> {
    cfg.validate()?;
    let arms = cfg.arms;
    let eps = cfg.drift_bound();
    let mut current: Vec<f64> = (0..arms)
        .map(|_| rng.random_range(cfg.init_low..=cfg.init_high))
        .collect();
    let mut means = Vec::with_capacity(arms * cfg.horizon);
    means.extend_from_slice(&current);
    for _ in 2..=cfg.horizon {
        for mu in current.iter_mut() {
            let step = rng.random_range(-eps..=eps);
            *mu = (*mu + step).clamp(0.0, 1.0);
        }
        means.extend_from_slice(&current);
    }
    MeanMatrix::from_time_major(arms, cfg.horizon, means)
}

/// Beta rewards parameterized by mean and concentration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardModel {
    /// Sum of the two Beta shape parameters.
    pub concentration: f64,
    /// Means are clamped to `[mean_clamp, 1 - mean_clamp]` before shaping.
    pub mean_clamp: f64,
}

impl Default for RewardModel {
    fn default() -> Self {
        Self { concentration: 4.0, mean_clamp: 0.01 }
    }
}

impl RewardModel {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(EnvError::InvalidConfig(format!(
                "concentration {} must be positive",
                self.concentration
            )));
        }
        if !(self.mean_clamp > 0.0 && self.mean_clamp < 0.5) {
            return Err(EnvError::InvalidConfig(format!(
                "mean clamp {} outside (0, 0.5)",
                self.mean_clamp
            )));
        }
        Ok(())
    }

    /// The mean actually realized by [`RewardModel::sample`] for a nominal `mu`.
    pub fn shaped_mean(&self, mu: f64) -> f64 {
        mu.clamp(self.mean_clamp, 1.0 - self.mean_clamp)
    }

    pub fn sample<R: Rng + ?Sized>(&self, mu: f64, rng: &mut R) -> f64 {
        let m = self.shaped_mean(mu);
        let c = self.concentration;
        let beta = Beta::new(c * m, c * (1.0 - m)).expect("shape parameters are positive");
        beta.sample(rng).clamp(0.0, 1.0)
    }
}

/// Convenience wrapper matching [`RewardModel::sample`].
pub fn sample_reward<R: Rng + ?Sized>(mu: f64, model: &RewardModel, rng: &mut R) -> f64 {
    model.sample(mu, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    // Enumerate floor(sqrt(t)) with integer arithmetic only.
    fn isqrt_breakpoints(horizon: usize) -> Vec<usize> {
        let isqrt = |t: usize| (0..=t).take_while(|r| r * r <= t).last().unwrap();
        (2..=horizon).filter(|&t| isqrt(t) != isqrt(t - 1)).collect()
    }

    #[test]
    fn breakpoints_constant_sequence() {
        assert!(breakpoints(0.0, 1000).is_empty());
        assert!(breakpoints(0.7, 1).is_empty());
    }

    #[test]
    fn breakpoints_square_root() {
        assert_eq!(isqrt_breakpoints(10), vec![4, 9]);
        assert_eq!(breakpoints(0.5, 10), vec![4, 9]);
        assert_eq!(breakpoints(0.5, 100), isqrt_breakpoints(100));
        assert_eq!(breakpoints(0.5, 100).len(), 9);
    }

    #[test]
    fn breakpoints_hit_exact_fifth_powers() {
        // floor(t^0.2) steps at m^5.
        let bp = breakpoints(0.2, 100_000);
        let expected: Vec<usize> = (2..=10usize).map(|m| m.pow(5)).collect();
        assert_eq!(bp, expected);
    }

    fn paper_abrupt(nu: f64, horizon: usize) -> AbruptConfig {
        AbruptConfig { nu, mean_set: DEFAULT_MEAN_SET.to_vec(), horizon, arms: 10 }
    }

    #[test]
    fn abrupt_stationary_when_nu_zero() {
        let mm = gen_abrupt_means(&paper_abrupt(0.0, 500), &mut rng(3)).unwrap();
        let first = mm.column(1).unwrap().to_vec();
        for t in 1..=500 {
            assert_eq!(mm.column(t).unwrap(), first.as_slice());
        }
    }

    #[test]
    fn abrupt_segments_use_full_set() {
        let mm = gen_abrupt_means(&paper_abrupt(0.5, 100), &mut rng(11)).unwrap();
        let mut sorted_set = DEFAULT_MEAN_SET.to_vec();
        sorted_set.sort_by(f64::total_cmp);
        let mut segments = 1;
        for t in 1..=100 {
            let mut col = mm.column(t).unwrap().to_vec();
            col.sort_by(f64::total_cmp);
            assert_eq!(col, sorted_set);
            assert_eq!(mm.oracle_best(t).unwrap().1, 0.9);
            if t > 1 && mm.column(t).unwrap() != mm.column(t - 1).unwrap() {
                assert!(breakpoints(0.5, 100).contains(&t));
            }
            if t > 1 && breakpoints(0.5, 100).contains(&t) {
                segments += 1;
            }
        }
        assert_eq!(segments, 10);
    }

    #[test]
    fn abrupt_rejects_small_mean_set() {
        let cfg = AbruptConfig { nu: 0.2, mean_set: vec![0.1, 0.5], horizon: 10, arms: 3 };
        assert_eq!(
            gen_abrupt_means(&cfg, &mut rng(0)),
            Err(EnvError::MeanSetTooSmall { available: 2, arms: 3 })
        );
        let dup = AbruptConfig { nu: 0.2, mean_set: vec![0.1, 0.1], horizon: 10, arms: 2 };
        assert!(dup.validate().is_err());
        let bad_nu = AbruptConfig { nu: 1.0, ..paper_abrupt(0.0, 10) };
        assert!(bad_nu.validate().is_err());
    }

    #[test]
    fn guaranteed_gap_of_default_set() {
        let cfg = paper_abrupt(0.2, 10);
        assert!((cfg.guaranteed_delta_min().unwrap() - 0.3).abs() < 1e-12);
        let fewer_arms = AbruptConfig { arms: 5, ..cfg };
        assert!((fewer_arms.guaranteed_delta_min().unwrap() - 0.06).abs() < 1e-12);
    }

    #[test]
    fn slow_vanishing_drift_is_constant() {
        let cfg = SlowConfig { kappa: 50.0, horizon: 100, arms: 4, init_low: 0.1, init_high: 0.9 };
        let mm = gen_slow_means(&cfg, &mut rng(5)).unwrap();
        let first = mm.column(1).unwrap().to_vec();
        for t in 2..=100 {
            for (a, b) in mm.column(t).unwrap().iter().zip(&first) {
                assert!((a - b).abs() < 1e-90);
            }
        }
    }

    #[test]
    fn slow_drift_respects_bound() {
        let cfg = SlowConfig { kappa: 1.0, horizon: 1000, arms: 10, init_low: 0.1, init_high: 0.9 };
        assert!((cfg.drift_bound() - 0.002).abs() < 1e-15);
        let mm = gen_slow_means(&cfg, &mut rng(8)).unwrap();
        for t in 1..1000 {
            for j in 0..10 {
                let d = (mm.mean(j, t + 1).unwrap() - mm.mean(j, t).unwrap()).abs();
                assert!(d <= 0.002 + 1e-15);
            }
        }
        for j in 0..10 {
            let m = mm.mean(j, 1).unwrap();
            assert!((0.1..=0.9).contains(&m));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SlowConfig { kappa: 0.5, horizon: 300, arms: 3, init_low: 0.1, init_high: 0.9 };
        assert_eq!(gen_slow_means(&cfg, &mut rng(1)), gen_slow_means(&cfg, &mut rng(1)));
        let ab = paper_abrupt(0.4, 300);
        assert_eq!(gen_abrupt_means(&ab, &mut rng(1)), gen_abrupt_means(&ab, &mut rng(1)));
    }

    #[test]
    fn slow_config_validation() {
        let ok = SlowConfig { kappa: 1.0, horizon: 10, arms: 2, init_low: 0.1, init_high: 0.9 };
        assert!(ok.validate().is_ok());
        assert!(SlowConfig { kappa: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SlowConfig { init_low: 0.9, init_high: 0.1, ..ok }.validate().is_err());
    }

    #[test]
    fn beta_mean_converges() {
        let model = RewardModel::default();
        let mut r = rng(42);
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| model.sample(0.5, &mut r)).sum();
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn beta_clamped_mean_stays_in_unit_interval() {
        let model = RewardModel { concentration: 4.0, mean_clamp: 0.01 };
        assert_eq!(model.shaped_mean(0.0), 0.01);
        assert_eq!(model.shaped_mean(1.0), 0.99);
        let mut r = rng(7);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let x = sample_reward(0.0, &model, &mut r);
            assert!((0.0..=1.0).contains(&x));
            sum += x;
        }
        assert!((sum / n as f64 - 0.01).abs() < 0.002);
    }

    #[test]
    fn beta_variance_matches_formula() {
        let model = RewardModel { concentration: 4.0, mean_clamp: 0.01 };
        let mut r = rng(9);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| model.sample(0.9, &mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expected = 0.9 * 0.1 / 5.0;
        assert!((var - expected).abs() < 0.1 * expected, "var {var} vs {expected}");
    }

    #[test]
    fn reward_model_validation() {
        assert!(RewardModel { concentration: 0.0, mean_clamp: 0.01 }.validate().is_err());
        assert!(RewardModel { concentration: 4.0, mean_clamp: 0.5 }.validate().is_err());
        assert!(RewardModel::default().validate().is_ok());
    }

    #[test]
    fn oracle_ties_go_to_lowest_arm() {
        let mm = MeanMatrix::from_fn(3, 2, |_, _| 0.4).unwrap();
        assert_eq!(mm.oracle_best(1).unwrap(), (0, 0.4));
        assert!(matches!(mm.oracle_best(0), Err(EnvError::TimeOutOfRange { .. })));
        assert!(matches!(mm.oracle_best(3), Err(EnvError::TimeOutOfRange { .. })));
    }

    #[test]
    fn oracle_matches_column_scan_on_slow_env() {
        let cfg = SlowConfig { kappa: 0.3, horizon: 2000, arms: 6, init_low: 0.1, init_high: 0.9 };
        let mm = gen_slow_means(&cfg, &mut rng(21)).unwrap();
        for t in 1..=2000 {
            let col: Vec<f64> = (0..6).map(|j| mm.mean(j, t).unwrap()).collect();
            let mut best = 0;
            for j in 1..6 {
                if col[j] > col[best] {
                    best = j;
                }
            }
            assert_eq!(mm.oracle_best(t).unwrap(), (best, col[best]));
        }
    }

    #[test]
    fn matrix_rejects_out_of_range_entries() {
        assert!(MeanMatrix::from_fn(2, 2, |j, _| j as f64 * 1.5).is_err());
        assert!(MeanMatrix::from_time_major(2, 2, vec![0.5; 3]).is_err());
        assert!(MeanMatrix::from_time_major(0, 2, vec![]).is_err());
    }

    #[test]
    fn gap_summary_two_constant_arms() {
        let mm = MeanMatrix::from_fn(2, 50, |j, _| if j == 0 { 0.9 } else { 0.6 }).unwrap();
        let g = mm.gap_summary().unwrap();
        assert!((g.delta_min - 0.3).abs() < 1e-12);
        assert!((g.delta_max - 0.3).abs() < 1e-12);
        assert_eq!(g.delta_j[0], 0.0);
    }

    #[test]
    fn gap_summary_of_default_abrupt_env() {
        let mm = gen_abrupt_means(&paper_abrupt(0.5, 400), &mut rng(2)).unwrap();
        let g = mm.gap_summary().unwrap();
        assert!((g.delta_min - 0.3).abs() < 1e-12);
        assert!((g.delta_max - 0.85).abs() < 1e-12);
    }

    #[test]
    fn gap_summary_needs_two_arms() {
        let mm = MeanMatrix::from_fn(1, 5, |_, _| 0.5).unwrap();
        assert!(mm.gap_summary().is_err());
    }
}
