//! UCB over a sliding window whose width grows with time.

use std::collections::VecDeque;

use super::{check_arms, Handshake, Policy, PolicyError, StepFeedback};
use crate::argmax_lowest;

// Window sums are rebuilt from the buffer this often to bound cancellation drift.
const REFRESH_EVERY: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SwUcbSharpParams {
    pub arms: usize,
    pub alpha: f64,
    pub lambda: f64,
}

impl SwUcbSharpParams {
    /// `alpha = (1 - nu) / 2` for `O(T^nu)` breakpoints.
    pub fn abrupt(arms: usize, nu: f64, lambda: f64) -> Result<Self, PolicyError> {
        if !(0.0..1.0).contains(&nu) {
            return Err(PolicyError::InvalidConfig(format!("nu = {nu} outside [0, 1)")));
        }
        let p = Self { arms, alpha: (1.0 - nu) / 2.0, lambda };
        p.validate()?;
        Ok(p)
    }

    /// `alpha = min(1, 3 * kappa / 4)` for per-step drift `O(T^-kappa)`.
    pub fn slow(arms: usize, kappa: f64, lambda: f64) -> Result<Self, PolicyError> {
        if !(kappa > 0.0) {
            return Err(PolicyError::InvalidConfig(format!("kappa = {kappa} must be > 0")));
        }
        let p = Self { arms, alpha: (0.75 * kappa).min(1.0), lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        check_arms(self.arms)?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(PolicyError::InvalidConfig(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.lambda > 0.0) {
            return Err(PolicyError::InvalidConfig(format!("lambda = {} must be > 0", self.lambda)));
        }
        Ok(())
    }
}

/// Window width `min(ceil(lambda * t^alpha), t)` at time `t >= 1`.
pub fn swucb_window(t: u64, alpha: f64, lambda: f64) -> u64 {
    let w = (lambda * (t as f64).powf(alpha)).ceil();
    if w >= t as f64 {
        t
    } else {
        w as u64
    }
}

/// `sqrt((1 + alpha) * ln t / n)`; `n` must be positive.
pub fn confidence_radius(t: u64, alpha: f64, n: u64) -> f64 {
    debug_assert!(n > 0, "unobserved arms have no finite radius");
    ((1.0 + alpha) * (t as f64).ln() / n as f64).sqrt()
}

pub fn swucb_index(mean: f64, t: u64, alpha: f64, n: u64) -> f64 {
    mean + confidence_radius(t, alpha, n)
}

/// Pull count and mean reward of one arm inside the current window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStat {
    pub count: u64,
    /// `None` when the arm was not pulled inside the window.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SwUcbSharp {
    params: SwUcbSharpParams,
    /// Number of completed steps.
    t: u64,
    window: VecDeque<(usize, f64)>,
    counts: Vec<u64>,
    sums: Vec<f64>,
    since_refresh: u64,
    handshake: Handshake,
}

impl SwUcbSharp {
    pub fn new(params: SwUcbSharpParams) -> Result<Self, PolicyError> {
        params.validate()?;
        let arms = params.arms;
        Ok(Self {
            params,
            t: 0,
            window: VecDeque::new(),
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            since_refresh: 0,
            handshake: Handshake::default(),
        })
    }

    pub fn params(&self) -> &SwUcbSharpParams {
        &self.params
    }

    /// Number of completed steps.
    pub fn time(&self) -> u64 {
        self.t
    }

    /// Observations currently inside the window, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &(usize, f64)> {
        self.window.iter()
    }

    /// Per-arm statistics over the window `{t - tau(t) + 1, ..., t}` at the current time.
    pub fn window_stats(&self) -> Vec<WindowStat> {
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&count, &sum)| WindowStat {
                count,
                mean: (count > 0).then(|| sum / count as f64),
            })
            .collect()
    }

    fn refresh_sums(&mut self) {
        self.sums.fill(0.0);
        for &(arm, r) in &self.window {
            self.sums[arm] += r;
        }
        self.since_refresh = 0;
    }
}

impl Policy for SwUcbSharp {
    fn arms(&self) -> usize {
        self.params.arms
    }

    fn select(&mut self) -> Result<usize, PolicyError> {
        let next = self.t + 1;
        let arms = self.params.arms as u64;
        let arm = if next <= arms {
            (next - 1) as usize
        } else if let Some(unseen) = self.counts.iter().position(|&n| n == 0) {
            // The window slid past every pull of this arm: treat its index as infinite.
            unseen
        } else {
            let (alpha, t) = (self.params.alpha, self.t);
            argmax_lowest(
                self.counts
                    .iter()
                    .zip(&self.sums)
                    .map(|(&n, &s)| swucb_index(s / n as f64, t, alpha, n)),
            )
            .expect("at least one arm")
        };
        self.handshake.emit(arm)
    }

    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError> {
        self.handshake.accept(&feedback)?;
        self.t += 1;
        self.window.push_back((feedback.arm, feedback.reward));
        self.counts[feedback.arm] += 1;
        self.sums[feedback.arm] += feedback.reward;

        let tau = swucb_window(self.t, self.params.alpha, self.params.lambda) as usize;
        if tau > self.window.len() {
            return Err(PolicyError::Internal(format!(
                "window of {tau} steps at t = {} exceeds the {} retained observations",
                self.t,
                self.window.len()
            )));
        }
        while self.window.len() > tau {
            let (arm, r) = self.window.pop_front().expect("non-empty window");
            self.counts[arm] -= 1;
            self.sums[arm] -= r;
            if self.counts[arm] == 0 {
                self.sums[arm] = 0.0;
            }
        }
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh_sums();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(pol: &mut SwUcbSharp, history: &[(usize, f64)]) {
        for &(arm, reward) in history {
            // bypass selection: drive the handshake with the recorded arm
            pol.handshake.emit(arm).unwrap();
            pol.observe(StepFeedback { arm, reward }).unwrap();
        }
    }

    #[test]
    fn window_formula() {
        assert_eq!(swucb_window(100, 0.5, 12.3), 100);
        assert_eq!(swucb_window(100, 0.5, 1.0), 10);
        assert_eq!(swucb_window(1, 0.3, 0.01), 1);
        assert_eq!(swucb_window(1, 0.3, 50.0), 1);
        assert_eq!(swucb_window(50, 1.0, f64::INFINITY), 50);
    }

    #[test]
    fn window_is_monotone_and_grows_by_at_most_one() {
        for &(alpha, lambda) in &[(0.4, 12.3), (0.5, 1.0), (0.9, 1.5), (1.0, 0.5), (0.1, 4.3)] {
            let mut prev = 0;
            for t in 1..20_000u64 {
                let w = swucb_window(t, alpha, lambda);
                assert!(w >= prev && w <= prev + 1, "alpha {alpha} lambda {lambda} t {t}");
                assert!(w >= 1 && w <= t);
                prev = w;
            }
        }
    }

    #[test]
    fn radius_formula() {
        let e = std::f64::consts::E;
        assert!(((1.0 + 0.0) * e.ln() / 1.0f64).sqrt() - 1.0 < 1e-15);
        assert_eq!(confidence_radius(1, 0.5, 3), 0.0);
        let r = confidence_radius(100, 0.5, 10);
        assert!((r - (1.5 * 100f64.ln() / 10.0).sqrt()).abs() < 1e-15);
        assert!((r - 0.8311).abs() < 1e-4);
        let quarter = confidence_radius(100, 0.5, 40);
        assert!((quarter * 2.0 - r).abs() < 1e-12);
    }

    #[test]
    fn index_strictly_decreases_in_count() {
        for n in 1..500 {
            assert!(swucb_index(0.4, 1000, 0.3, n) > swucb_index(0.4, 1000, 0.3, n + 1));
        }
    }

    #[test]
    fn window_stats_hand_example() {
        // lambda chosen so that tau(3) = ceil(lambda * 3^alpha) = 2.
        let p = SwUcbSharpParams { arms: 2, alpha: 1.0, lambda: 0.6 };
        assert_eq!(swucb_window(3, 1.0, 0.6), 2);
        let mut pol = SwUcbSharp::new(p).unwrap();
        feed(&mut pol, &[(0, 0.2), (1, 0.8), (0, 0.4)]);
        let s = pol.window_stats();
        assert_eq!(s[0].count, 1);
        assert!((s[0].mean.unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(s[1].count, 1);
        assert!((s[1].mean.unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn full_window_single_arm() {
        let p = SwUcbSharpParams { arms: 1, alpha: 1.0, lambda: 2.0 };
        let mut pol = SwUcbSharp::new(p).unwrap();
        let history: Vec<(usize, f64)> = (0..50).map(|i| (0, (i % 7) as f64 / 7.0)).collect();
        feed(&mut pol, &history);
        let mean = history.iter().map(|h| h.1).sum::<f64>() / 50.0;
        let s = pol.window_stats();
        assert_eq!(s[0].count, 50);
        assert!((s[0].mean.unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn initialization_pulls_arms_in_order() {
        let p = SwUcbSharpParams::abrupt(10, 0.2, 12.3).unwrap();
        let mut pol = SwUcbSharp::new(p).unwrap();
        let mut fb = None;
        for t in 1..=10 {
            let arm = pol.step(fb).unwrap();
            assert_eq!(arm, t - 1);
            fb = Some(StepFeedback { arm, reward: 0.5 });
        }
    }

    #[test]
    fn equal_means_prefer_fewer_pulls() {
        let p = SwUcbSharpParams { arms: 2, alpha: 0.5, lambda: 100.0 };
        let mut pol = SwUcbSharp::new(p).unwrap();
        feed(&mut pol, &[(0, 0.5), (1, 0.5), (1, 0.5), (1, 0.5)]);
        assert_eq!(pol.select().unwrap(), 0);
    }

    #[test]
    fn forced_pull_for_arm_outside_window() {
        // tau(t) = ceil(0.5 t) for t >= 2; arm 2 falls out of the window quickly.
        let p = SwUcbSharpParams { arms: 3, alpha: 1.0, lambda: 0.5 };
        let mut pol = SwUcbSharp::new(p).unwrap();
        feed(&mut pol, &[(2, 0.9), (0, 0.5), (1, 0.5), (0, 0.5), (1, 0.5), (0, 0.5)]);
        let s = pol.window_stats();
        assert_eq!(s[2].count, 0);
        assert_eq!(s[2].mean, None);
        assert_eq!(pol.select().unwrap(), 2);
    }

    #[test]
    fn params_from_environment() {
        let p = SwUcbSharpParams::abrupt(10, 0.0, 12.3).unwrap();
        assert_eq!(p.alpha, 0.5);
        let p = SwUcbSharpParams::slow(10, 2.0, 4.3).unwrap();
        assert_eq!(p.alpha, 1.0);
        let p = SwUcbSharpParams::slow(10, 0.5, 4.3).unwrap();
        assert!((p.alpha - 0.375).abs() < 1e-15);
        assert!(SwUcbSharpParams::abrupt(10, 1.0, 12.3).is_err());
        assert!(SwUcbSharpParams { arms: 2, alpha: 0.5, lambda: 0.0 }.validate().is_err());
    }
}
