//! Limited-memory deterministic sequencing of exploration and exploitation.
//!
//! Epoch `k` lasts `ceil(a * k^rho * l)` steps. It opens with a round-robin exploration
//! block in which every arm is pulled `L(k) = ceil(gamma_k * ln(k^rho * l * b))` times
//! in a row, then exploits the arm with the best sample mean *of that block only* for
//! the rest of the epoch. The schedule does not depend on rewards.

use log::warn;

use super::{check_arms, sample_means, Handshake, Phase, Policy, PolicyError, StepFeedback};
use crate::argmax_lowest;

/// Upper bound for the linear search in [`choose_l`].
pub const L_SEARCH_CAP: u64 = 1_000_000_000;

/// How the exploration constant is chosen per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    /// Constant `gamma`, used for piecewise-constant environments.
    Fixed(f64),
    /// `gamma_k = 2 * (k^rho * l)^(2/3)`, used for drifting environments.
    Slow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmDseeParams {
    pub arms: usize,
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    pub l: u64,
    pub gamma: GammaRule,
}

fn gamma_value(rule: GammaRule, scale: f64) -> f64 {
    match rule {
        GammaRule::Fixed(g) => g,
        GammaRule::Slow => 2.0 * scale.powf(2.0 / 3.0),
    }
}

fn exploration_len_raw(rule: GammaRule, scale: f64, b: f64) -> f64 {
    (gamma_value(rule, scale) * (scale * b).ln()).ceil()
}

impl LmDseeParams {
    /// `k^rho * l`.
    fn scale(&self, k: u64) -> f64 {
        (k as f64).powf(self.rho) * self.l as f64
    }

    pub fn gamma_at(&self, k: u64) -> f64 {
        gamma_value(self.gamma, self.scale(k))
    }

    /// Pulls per arm in the exploration block of epoch `k`.
    pub fn exploration_length(&self, k: u64) -> Result<u64, PolicyError> {
        if k == 0 {
            return Err(PolicyError::InvalidConfig("epochs are numbered from 1".into()));
        }
        let raw = exploration_len_raw(self.gamma, self.scale(k), self.b);
        if !(raw >= 1.0) {
            return Err(PolicyError::InvalidConfig(format!(
                "exploration length {raw} < 1 in epoch {k} (l * b = {} must exceed 1)",
                self.l as f64 * self.b
            )));
        }
        Ok(raw as u64)
    }

    /// Nominal epoch length `ceil(a * k^rho * l)`.
    pub fn epoch_length(&self, k: u64) -> u64 {
        (self.a * self.scale(k)).ceil() as u64
    }

    /// Exploitation steps in epoch `k`, clamped at zero.
    pub fn exploitation_length(&self, k: u64) -> Result<u64, PolicyError> {
        let explore = self.arms as u64 * self.exploration_length(k)?;
        let total = self.epoch_length(k);
        if explore > total {
            warn!(
                "epoch {k}: exploration block ({explore}) exceeds epoch length ({total}); \
                 exploitation skipped"
            );
        }
        Ok(total.saturating_sub(explore))
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        check_arms(self.arms)?;
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(PolicyError::InvalidConfig(format!("rho = {} must be >= 0", self.rho)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(PolicyError::InvalidConfig(format!("a = {} must be > 0", self.a)));
        }
        if !(self.b > 0.0 && self.b <= 1.0) {
            return Err(PolicyError::InvalidConfig(format!("b = {} outside (0, 1]", self.b)));
        }
        if let GammaRule::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(PolicyError::InvalidConfig(format!("gamma = {g} must be > 0")));
            }
        }
        self.exploration_length(1)?;
        Ok(())
    }
}

fn check_ab(a: f64, b: f64) -> Result<(), PolicyError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(PolicyError::InvalidConfig(format!("a = {a} must be > 0")));
    }
    if !(b > 0.0 && b <= 1.0) {
        return Err(PolicyError::InvalidConfig(format!("b = {b} outside (0, 1]")));
    }
    Ok(())
}

fn l_is_admissible(arms: usize, a: f64, b: f64, gamma: GammaRule, l: u64) -> bool {
    let lf = l as f64;
    let explore = exploration_len_raw(gamma, lf, b);
    explore >= 1.0 && (a * lf).ceil() - arms as f64 * explore >= arms as f64
}

/// Smallest `l >= 2` whose first epoch has a non-degenerate exploration block and at
/// least `arms` exploitation steps.
pub fn choose_l(arms: usize, a: f64, b: f64, gamma: GammaRule) -> Result<u64, PolicyError> {
    choose_l_capped(arms, a, b, gamma, L_SEARCH_CAP)
}

pub(crate) fn choose_l_capped(
    arms: usize,
    a: f64,
    b: f64,
    gamma: GammaRule,
    cap: u64,
) -> Result<u64, PolicyError> {
    check_arms(arms)?;
    check_ab(a, b)?;
    (2..=cap)
        .find(|&l| l_is_admissible(arms, a, b, gamma, l))
        .ok_or_else(|| {
            PolicyError::InvalidConfig(format!("no admissible epoch scale l up to {cap}"))
        })
}

/// Parameters for a piecewise-constant environment with `O(T^nu)` breakpoints.
/// `gamma` is set to the smallest admissible value `2 / delta_min^2`.
pub fn lmdsee_configure_abrupt(
    arms: usize,
    nu: f64,
    delta_min: f64,
    a: f64,
    b: f64,
) -> Result<LmDseeParams, PolicyError> {
    if !(0.0..1.0).contains(&nu) {
        return Err(PolicyError::InvalidConfig(format!("nu = {nu} outside [0, 1)")));
    }
    if !(delta_min > 0.0 && delta_min < 1.0) {
        return Err(PolicyError::InvalidConfig(format!("delta_min = {delta_min} outside (0, 1)")));
    }
    let gamma = GammaRule::Fixed(2.0 / (delta_min * delta_min));
    let l = choose_l(arms, a, b, gamma)?;
    let params = LmDseeParams { arms, rho: (1.0 - nu) / (1.0 + nu), a, b, l, gamma };
    params.validate()?;
    Ok(params)
}

/// Parameters for a drifting environment with per-step change `O(T^-kappa)`.
/// `kappa` saturates at `kappa_max` before `rho` is derived.
pub fn lmdsee_configure_slow(
    arms: usize,
    kappa: f64,
    kappa_max: f64,
    a: f64,
    b: f64,
) -> Result<LmDseeParams, PolicyError> {
    if !(kappa > 0.0) {
        return Err(PolicyError::InvalidConfig(format!("kappa = {kappa} must be > 0")));
    }
    if !(kappa_max > 0.0 && kappa_max < 4.0 / 3.0) {
        return Err(PolicyError::InvalidConfig(format!("kappa_max = {kappa_max} outside (0, 4/3)")));
    }
    let kt = kappa.min(kappa_max);
    let rho = 3.0 * kt / (4.0 - 3.0 * kt);
    let l = choose_l(arms, a, b, GammaRule::Slow)?;
    let params = LmDseeParams { arms, rho, a, b, l, gamma: GammaRule::Slow };
    params.validate()?;
    Ok(params)
}

/// One contiguous phase of the schedule, `t_start..=t_end` (one-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSpan {
    pub epoch: u64,
    pub phase: Phase,
    pub t_start: u64,
    pub t_end: u64,
}

/// Phase boundaries the policy realizes up to `horizon`; the last span is truncated.
pub fn lmdsee_trajectory(params: &LmDseeParams, horizon: u64) -> Result<Vec<PhaseSpan>, PolicyError> {
    params.validate()?;
    let mut spans = Vec::new();
    let mut t = 1u64;
    let mut k = 1u64;
    while t <= horizon {
        let explore = params.arms as u64 * params.exploration_length(k)?;
        let exploit = params.exploitation_length(k)?;
        for (phase, len) in [(Phase::Explore, explore), (Phase::Exploit, exploit)] {
            if len == 0 || t > horizon {
                continue;
            }
            let t_end = (t + len - 1).min(horizon);
            spans.push(PhaseSpan { epoch: k, phase, t_start: t, t_end });
            t = t_end + 1;
        }
        k += 1;
    }
    Ok(spans)
}

#[derive(Debug, Clone)]
pub struct LmDsee {
    params: LmDseeParams,
    epoch: u64,
    /// Steps already completed in the current epoch.
    pos: u64,
    explore_per_arm: u64,
    exploit_len: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
    exploit_arm: Option<usize>,
    handshake: Handshake,
}

impl LmDsee {
    pub fn new(params: LmDseeParams) -> Result<Self, PolicyError> {
        params.validate()?;
        let arms = params.arms;
        let mut policy = Self {
            params,
            epoch: 0,
            pos: 0,
            explore_per_arm: 0,
            exploit_len: 0,
            sums: vec![0.0; arms],
            counts: vec![0; arms],
            exploit_arm: None,
            handshake: Handshake::default(),
        };
        policy.start_epoch(1)?;
        Ok(policy)
    }

    pub fn params(&self) -> &LmDseeParams {
        &self.params
    }

    /// Epoch of the next step.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Phase of the next step.
    pub fn phase(&self) -> Phase {
        if self.pos < self.explore_total() {
            Phase::Explore
        } else {
            Phase::Exploit
        }
    }

    /// Arm exploited in the current epoch, once the exploration block is complete.
    pub fn exploit_arm(&self) -> Option<usize> {
        if self.phase() == Phase::Exploit {
            self.exploit_arm.or_else(|| self.best_explored())
        } else {
            None
        }
    }

    fn explore_total(&self) -> u64 {
        self.params.arms as u64 * self.explore_per_arm
    }

    fn best_explored(&self) -> Option<usize> {
        argmax_lowest(sample_means(&self.sums, &self.counts).map(|m| m.unwrap_or(f64::NEG_INFINITY)))
    }

    fn start_epoch(&mut self, k: u64) -> Result<(), PolicyError> {
        self.epoch = k;
        self.pos = 0;
        self.explore_per_arm = self.params.exploration_length(k)?;
        self.exploit_len = self.params.exploitation_length(k)?;
        self.sums.fill(0.0);
        self.counts.fill(0);
        self.exploit_arm = None;
        Ok(())
    }
}

impl Policy for LmDsee {
    fn arms(&self) -> usize {
        self.params.arms
    }

    fn select(&mut self) -> Result<usize, PolicyError> {
        let arm = if self.pos < self.explore_total() {
            (self.pos / self.explore_per_arm) as usize
        } else {
            match self.exploit_arm {
                Some(j) => j,
                None => {
                    let j = self.best_explored().expect("at least one arm");
                    self.exploit_arm = Some(j);
                    j
                }
            }
        };
        self.handshake.emit(arm)
    }

    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError> {
        self.handshake.accept(&feedback)?;
        if self.pos < self.explore_total() {
            self.sums[feedback.arm] += feedback.reward;
            self.counts[feedback.arm] += 1;
        }
        self.pos += 1;
        if self.pos >= self.explore_total() + self.exploit_len {
            self.start_epoch(self.epoch + 1)?;
        }
        Ok(())
    }
}
