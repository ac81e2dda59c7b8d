//! Per-block retargeting: pick the next mining target from the size of
//! the block just mined, so that the expected fork rate stays at a
//! configured budget.
//!
//! The rule is: size -> pairwise hop time -> informed curve -> uninformed
//! integral `W` -> smallest interval `I` whose fork rate meets the budget
//! -> clamp `I` into the configured bounds -> difficulty `I * R` ->
//! target. When the interval is not clamped the target is computed in
//! one step from the budget (the two routes are algebraically identical
//! and cross-checked in tests); when it is clamped the target follows
//! the clamped interval and the decision says so.

use crate::numerics::{
    self, Difficulty, ForkRate, HashRate, Interval, NumericsError, Target,
};
use crate::propagation::{
    informed_curve, uninformed_integral, NetworkParams, PropagationError, UninformedIntegral,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DmiError {
    #[error("fork limit must be strictly positive")]
    ZeroForkLimit,
    #[error("minimum interval must be at least 2 seconds, got {0}")]
    MinIntervalTooShort(f64),
    #[error("interval bounds are inverted: min {min} > max {max}")]
    InvertedBounds { min: f64, max: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
}

/// Configuration of the retargeting rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmiConfig {
    fork_limit: ForkRate,
    hash_rate: HashRate,
    network: NetworkParams,
    min_interval: Interval,
    max_interval: Interval,
}

impl DmiConfig {
    /// `min_interval` must be at least 2 s: the fork-rate model treats
    /// mining as a per-second success trial, so implied intervals need
    /// headroom above one second.
    pub fn new(
        fork_limit: ForkRate,
        hash_rate: HashRate,
        network: NetworkParams,
        min_interval: Interval,
        max_interval: Interval,
    ) -> Result<Self, DmiError> {
        if fork_limit.probability() == 0.0 {
            return Err(DmiError::ZeroForkLimit);
        }
        if min_interval.seconds() < 2.0 {
            return Err(DmiError::MinIntervalTooShort(min_interval.seconds()));
        }
        if min_interval.seconds() > max_interval.seconds() {
            return Err(DmiError::InvertedBounds {
                min: min_interval.seconds(),
                max: max_interval.seconds(),
            });
        }
        Ok(DmiConfig {
            fork_limit,
            hash_rate,
            network,
            min_interval,
            max_interval,
        })
    }

    pub fn fork_limit(&self) -> ForkRate {
        self.fork_limit
    }

    pub fn hash_rate(&self) -> HashRate {
        self.hash_rate
    }

    pub fn network(&self) -> &NetworkParams {
        &self.network
    }

    pub fn min_interval(&self) -> Interval {
        self.min_interval
    }

    pub fn max_interval(&self) -> Interval {
        self.max_interval
    }
}

/// Which interval bound a retargeting decision ran into, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalClamp {
    Min,
    Max,
}

/// Full outcome of one retargeting step. Clamps are reported, not
/// silently folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct RetargetDecision {
    pub target: Target,
    /// Expected interval implied by the target, after clamping.
    pub interval: Interval,
    pub uninformed_integral: UninformedIntegral,
    pub interval_clamp: Option<IntervalClamp>,
    pub target_clamped: bool,
}

/// One retargeting step from the size of the block just mined.
pub fn evaluate(last_block_size: u64, cfg: &DmiConfig) -> Result<RetargetDecision, DmiError> {
    let curve = informed_curve(last_block_size, cfg.network());
    let w = uninformed_integral(&curve);

    let (interval, interval_clamp) = if w.seconds() == 0.0 {
        // Instant propagation: no interval is too fast for the budget,
        // so the floor is the binding constraint.
        (cfg.min_interval, Some(IntervalClamp::Min))
    } else {
        let raw = numerics::interval_for_fork_limit(cfg.fork_limit, w)?;
        if raw.seconds() < cfg.min_interval.seconds() {
            (cfg.min_interval, Some(IntervalClamp::Min))
        } else if raw.seconds() > cfg.max_interval.seconds() {
            (cfg.max_interval, Some(IntervalClamp::Max))
        } else {
            (raw, None)
        }
    };

    let outcome = if interval_clamp.is_none() {
        numerics::target_for_fork_limit(cfg.fork_limit, w, cfg.hash_rate)?
    } else {
        let difficulty =
            Difficulty::new(interval.seconds() * cfg.hash_rate.hashes_per_second())?;
        numerics::target_from_difficulty(difficulty)?
    };

    Ok(RetargetDecision {
        target: outcome.target,
        interval,
        uninformed_integral: w,
        interval_clamp,
        target_clamped: outcome.clamped,
    })
}

/// Mining target for the block after one of the given size.
pub fn next_target(last_block_size: u64, cfg: &DmiConfig) -> Result<Target, DmiError> {
    evaluate(last_block_size, cfg).map(|d| d.target)
}

/// Expected interval (after clamping) for the block after one of the
/// given size.
pub fn implied_interval(last_block_size: u64, cfg: &DmiConfig) -> Result<Interval, DmiError> {
    evaluate(last_block_size, cfg).map(|d| d.interval)
}
