//! Arm-selection policies behind a common select/observe step interface.
//!
//! A driver alternates `select` and `observe`: every emitted arm must be answered by
//! exactly one [`StepFeedback`] for that same arm before the next selection.

mod baseline;
mod lmdsee;
mod swucb;

use thiserror::Error;

pub use baseline::{Dsee, Ucb, UniformRandom};
pub use lmdsee::{
    choose_l, lmdsee_configure_abrupt, lmdsee_configure_slow, lmdsee_trajectory, GammaRule,
    LmDsee, LmDseeParams, PhaseSpan, L_SEARCH_CAP,
};
pub use swucb::{confidence_radius, swucb_index, swucb_window, SwUcbSharp, SwUcbSharpParams, WindowStat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
    #[error("step protocol violated: {0}")]
    Protocol(String),
    #[error("internal policy error: {0}")]
    Internal(String),
}

/// Reward observed for the previously emitted arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFeedback {
    pub arm: usize,
    pub reward: f64,
}

/// Exploration or exploitation, for schedule-driven policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

pub trait Policy {
    fn arms(&self) -> usize;

    /// Arm to pull at the next time step.
    fn select(&mut self) -> Result<usize, PolicyError>;

    /// Records the reward of the arm returned by the last `select`.
    fn observe(&mut self, feedback: StepFeedback) -> Result<(), PolicyError>;

    /// One combined step: apply the feedback for the previous pull, if any, then select.
    /// The first call passes `None`.
    fn step(&mut self, feedback: Option<StepFeedback>) -> Result<usize, PolicyError> {
        if let Some(fb) = feedback {
            self.observe(fb)?;
        }
        self.select()
    }
}

/// Tracks the arm awaiting feedback.
#[derive(Debug, Clone, Default)]
pub(crate) struct Handshake {
    pending: Option<usize>,
}

impl Handshake {
    pub(crate) fn emit(&mut self, arm: usize) -> Result<usize, PolicyError> {
        if let Some(prev) = self.pending {
            return Err(PolicyError::Protocol(format!(
                "arm {prev} was selected but never received feedback"
            )));
        }
        self.pending = Some(arm);
        Ok(arm)
    }

    pub(crate) fn accept(&mut self, fb: &StepFeedback) -> Result<(), PolicyError> {
        match self.pending {
            None => Err(PolicyError::Protocol(format!(
                "feedback for arm {} without a preceding selection",
                fb.arm
            ))),
            Some(expected) if expected != fb.arm => Err(PolicyError::Protocol(format!(
                "feedback for arm {} but arm {expected} was selected",
                fb.arm
            ))),
            Some(_) if !(0.0..=1.0).contains(&fb.reward) => Err(PolicyError::Protocol(format!(
                "reward {} outside [0, 1]",
                fb.reward
            ))),
            Some(_) => {
                self.pending = None;
                Ok(())
            }
        }
    }
}

pub(crate) fn check_arms(arms: usize) -> Result<(), PolicyError> {
    if arms == 0 {
        Err(PolicyError::InvalidConfig("need at least one arm".into()))
    } else {
        Ok(())
    }
}

/// Sample means with `None` for arms that have no observations.
pub(crate) fn sample_means<'a>(sums: &'a [f64], counts: &'a [u64]) -> impl Iterator<Item = Option<f64>> + 'a {
    sums.iter()
        .zip(counts)
        .map(|(&s, &n)| if n == 0 { None } else { Some(s / n as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handshake_rejects_mismatched_feedback() {
        let mut h = Handshake::default();
        assert!(h.accept(&StepFeedback { arm: 0, reward: 0.5 }).is_err());
        h.emit(2).unwrap();
        assert!(h.emit(1).is_err());
        assert!(h.accept(&StepFeedback { arm: 1, reward: 0.5 }).is_err());
        assert!(h.accept(&StepFeedback { arm: 2, reward: 1.5 }).is_err());
        h.accept(&StepFeedback { arm: 2, reward: 1.0 }).unwrap();
        h.emit(1).unwrap();
    }
}
