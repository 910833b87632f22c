//! Non-stationary stochastic multi-armed bandits.
//!
//! Two environment families drive the crate: piecewise-constant means that jump at
//! breakpoints (`env::gen_abrupt_means`) and means that drift by a bounded amount each
//! step (`env::gen_slow_means`). Against them it runs
//!
//! - [`policy::LmDsee`]: deterministic exploration/exploitation epochs whose lengths grow
//!   as a power of the epoch index, with estimates that only use the current epoch,
//! - [`policy::SwUcbSharp`]: a UCB index over a sliding window whose width grows as
//!   `min(ceil(lambda * t^alpha), t)`,
//! - stationary baselines ([`policy::Ucb`], [`policy::Dsee`], [`policy::UniformRandom`]).
//!
//! [`harness`] executes seeded Monte-Carlo replications (in parallel with the default
//! `parallel` feature), and [`regret`] aggregates cumulative regret and compares it
//! against the sublinear orders the algorithms are known to achieve.
//!
//! Arm indices are zero-based. Time indices are one-based (`t = 1..=T`) so that the
//! window and confidence formulas read the way they are usually written.

pub mod env;
pub mod harness;
pub mod policy;
pub mod regret;

pub use env::{GapSummary, MeanMatrix, RewardModel};
pub use harness::{ExperimentConfig, ExperimentOutput};
pub use policy::{Policy, StepFeedback};
pub use regret::{AggregateTrace, BoundCurve, BoundOrder, RegretTrace};

/// Index of the maximum value, lowest index on ties. `None` for an empty slice.
pub fn argmax_lowest(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::argmax_lowest;

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax_lowest([0.5, 0.5, 0.5]), Some(0));
        assert_eq!(argmax_lowest([0.1, 0.7, 0.7]), Some(1));
        assert_eq!(argmax_lowest([f64::NEG_INFINITY, 0.0]), Some(1));
        assert_eq!(argmax_lowest(std::iter::empty()), None);
    }
}
