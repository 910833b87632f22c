//! Stationary reference policies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{check_arms, sample_means, Handshake, Policy, PolicyError, StepFeedback};
use crate::argmax_lowest;

/// Full-history UCB with radius `sqrt(2 ln(t-1) / n_j)`.
#[derive(Debug, Clone)]
pub struct Ucb {
    t: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    handshake: Handshake,
}

impl Ucb {
    pub fn new(arms: usize) -> Result<Self, PolicyError> {
        check_arms(arms)?;
        Ok(Self { t: 0, counts: vec![0; arms], sums: vec![0.0; arms], handshake: Handshake::default() })
    }

    pub fn index(mean: f64, t_prev: u64, n: u64) -> f64 {
        mean + (2.0 * (t_prev as f64).ln() / n as f64).sqrt()
    }
}

impl Policy for Ucb {
    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self) -> Result<usize, PolicyError> {
        let arm = match self.counts.iter().position(|&n| n == 0) {
            Some(j) => j,
            None => {
                let t = self.t;
                argmax_lowest(
                    self.counts
                        .iter()
                        .zip(&self.sums)
                        .map(|(&n, &s)| Self::index(s / n as f64, t, n)),
                )
                .expect("at least one arm")
            }
        };
        self.handshake.emit(arm)
    }

    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError> {
        self.handshake.accept(&feedback)?;
        self.t += 1;
        self.counts[feedback.arm] += 1;
        self.sums[feedback.arm] += feedback.reward;
        Ok(())
    }
}

/// Deterministic sequencing of exploration and exploitation with a logarithmic
/// exploration budget: at time `t` a new round-robin block starts whenever fewer than
/// `N * ceil(w ln t)` exploration steps have been taken; otherwise the arm with the best
/// mean over all exploration rewards is played.
#[derive(Debug, Clone)]
pub struct Dsee {
    w: f64,
    t: u64,
    explore_steps: u64,
    /// Next arm of an exploration block in progress.
    block_pos: Option<usize>,
    exploring: bool,
    counts: Vec<u64>,
    sums: Vec<f64>,
    handshake: Handshake,
}

impl Dsee {
    pub fn new(arms: usize, w: f64) -> Result<Self, PolicyError> {
        check_arms(arms)?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(PolicyError::InvalidConfig(format!("w = {w} must be > 0")));
        }
        Ok(Self {
            w,
            t: 0,
            explore_steps: 0,
            block_pos: None,
            exploring: false,
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            handshake: Handshake::default(),
        })
    }

    /// Exploration budget `N * ceil(w ln t)` at time `t`.
    pub fn threshold(&self, t: u64) -> u64 {
        self.counts.len() as u64 * (self.w * (t as f64).ln()).ceil().max(0.0) as u64
    }

    pub fn exploration_steps(&self) -> u64 {
        self.explore_steps
    }
}

impl Policy for Dsee {
    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self) -> Result<usize, PolicyError> {
        let t = self.t + 1;
        // The first block always runs so that exploitation has an estimate for every arm.
        let need_block = self.explore_steps == 0 || self.explore_steps < self.threshold(t);
        let arm = match self.block_pos {
            Some(j) => j,
            None if need_block => {
                self.block_pos = Some(0);
                0
            }
            None => argmax_lowest(
                sample_means(&self.sums, &self.counts).map(|m| m.unwrap_or(f64::NEG_INFINITY)),
            )
            .expect("at least one arm"),
        };
        self.exploring = self.block_pos.is_some();
        self.handshake.emit(arm)
    }

    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError> {
        self.handshake.accept(&feedback)?;
        self.t += 1;
        if self.exploring {
            self.explore_steps += 1;
            self.counts[feedback.arm] += 1;
            self.sums[feedback.arm] += feedback.reward;
            let next = feedback.arm + 1;
            self.block_pos = (next < self.counts.len()).then_some(next);
        }
        Ok(())
    }
}

/// Uniformly random arm each step.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    arms: usize,
    rng: ChaCha12Rng,
    handshake: Handshake,
}

impl UniformRandom {
    pub fn new(arms: usize, seed: u64) -> Result<Self, PolicyError> {
        check_arms(arms)?;
        Ok(Self { arms, rng: ChaCha12Rng::seed_from_u64(seed), handshake: Handshake::default() })
    }
}

impl Policy for UniformRandom {
    fn arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self) -> Result<usize, PolicyError> {
        let arm = self.rng.random_range(0..self.arms);
        self.handshake.emit(arm)
    }

    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError> {
        self.handshake.accept(&feedback)
    }
}
