//! Expected-value model of block propagation through a gossip network.
//!
//! A freshly mined block spreads in waves: every node that first heard of
//! the block during wave `k-1` pushes it to `m` randomly chosen nodes
//! (with replacement) during wave `k`, and each push lands on a
//! still-uninformed node with probability equal to the uninformed share
//! of the network at the start of the wave. Each wave takes one pairwise
//! propagation interval `TP_avg = block_size / bandwidth + delay`.
//!
//! The informed-node counts per wave depend only on `(node_count,
//! neighbor_degree)`; block size enters purely as the linear time scale
//! `TP_avg`. The per-wave counts are therefore memoized on `(N, m)` and
//! every curve is assembled with the exact interval for its block size.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Relative remainder of the network below which the wave iteration
/// snaps the informed count to `N` and stops.
const WAVE_STOP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagationError {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(u32),
    #[error("neighbor degree must be in [1, node_count), got {degree} for {nodes} nodes")]
    BadNeighborDegree { degree: u32, nodes: u32 },
    #[error("bandwidth must be positive and finite, got {0}")]
    BadBandwidth(f64),
    #[error("delay must be non-negative and finite, got {0}")]
    BadDelay(f64),
    #[error("uninformed integral must be non-negative and finite, got {0}")]
    BadIntegral(f64),
}

/// Gossip-network shape and link characteristics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NetworkParams {
    node_count: u32,
    neighbor_degree: u32,
    bandwidth_bytes_per_sec: f64,
    delay_seconds: f64,
}

impl NetworkParams {
    pub fn new(
        node_count: u32,
        neighbor_degree: u32,
        bandwidth_bytes_per_sec: f64,
        delay_seconds: f64,
    ) -> Result<Self, PropagationError> {
        if node_count < 2 {
            return Err(PropagationError::TooFewNodes(node_count));
        }
        if neighbor_degree < 1 || neighbor_degree >= node_count {
            return Err(PropagationError::BadNeighborDegree {
                degree: neighbor_degree,
                nodes: node_count,
            });
        }
        if !bandwidth_bytes_per_sec.is_finite() || bandwidth_bytes_per_sec <= 0.0 {
            return Err(PropagationError::BadBandwidth(bandwidth_bytes_per_sec));
        }
        if !delay_seconds.is_finite() || delay_seconds < 0.0 {
            return Err(PropagationError::BadDelay(delay_seconds));
        }
        Ok(NetworkParams {
            node_count,
            neighbor_degree,
            bandwidth_bytes_per_sec,
            delay_seconds,
        })
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn neighbor_degree(&self) -> u32 {
        self.neighbor_degree
    }

    pub fn bandwidth_bytes_per_sec(&self) -> f64 {
        self.bandwidth_bytes_per_sec
    }

    pub fn delay_seconds(&self) -> f64 {
        self.delay_seconds
    }

    /// Same network with a different propagation delay; used by the
    /// calibration search.
    pub fn with_delay(&self, delay_seconds: f64) -> Result<Self, PropagationError> {
        NetworkParams::new(
            self.node_count,
            self.neighbor_degree,
            self.bandwidth_bytes_per_sec,
            delay_seconds,
        )
    }
}

/// Seconds one node-to-node hop takes for a block of the given size.
pub fn pairwise_propagation_interval(block_size_bytes: u64, params: &NetworkParams) -> f64 {
    block_size_bytes as f64 / params.bandwidth_bytes_per_sec + params.delay_seconds
}

/// Step function `f(t)`: expected fraction of nodes informed `t` seconds
/// after a block of a fixed size was mined. Starts at `1/N` (the miner)
/// and reaches exactly 1 at the final wave.
#[derive(Debug, Clone)]
pub struct InformedCurve {
    wave_interval_seconds: f64,
    /// `informed[k]` = expected informed nodes after wave `k`;
    /// `informed[0] = 1`, non-decreasing, last entry = `N`.
    informed: Arc<[f64]>,
    node_count: u32,
}

impl InformedCurve {
    pub fn wave_interval_seconds(&self) -> f64 {
        self.wave_interval_seconds
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn informed_counts(&self) -> &[f64] {
        &self.informed
    }

    /// `f(t)` for `t` seconds after the block was mined.
    pub fn informed_fraction_at(&self, elapsed_seconds: f64) -> f64 {
        debug_assert!(elapsed_seconds >= 0.0);
        if self.wave_interval_seconds == 0.0 {
            return 1.0;
        }
        let wave = (elapsed_seconds / self.wave_interval_seconds).floor();
        if wave >= (self.informed.len() - 1) as f64 {
            return 1.0;
        }
        self.informed[wave as usize] / f64::from(self.node_count)
    }

    /// Time after which the whole network is informed: `f(t) = 1` for all
    /// `t >= window_seconds()`.
    pub fn window_seconds(&self) -> f64 {
        (self.informed.len() - 1) as f64 * self.wave_interval_seconds
    }
}

/// Expected informed-node counts per wave for an `(N, m)` gossip network.
///
/// Recurrence: `new_k = senders_{k-1} * m * P_k` with `P_1 = 1` and
/// `P_{k+1} = (N - informed_k) / N`, informed counts capped at `N`.
/// Stops when the remainder drops below `1e-9 * N`, snapping to `N`.
/// A wave whose contribution itself falls below `1e-9 * N` also snaps to
/// `N`: for degenerate degrees (`m <= 2` on large networks) the
/// expected-value recurrence otherwise stalls strictly below `N` even
/// though the underlying random process always finishes.
fn wave_counts(node_count: u32, neighbor_degree: u32) -> Vec<f64> {
    let n = f64::from(node_count);
    let m = f64::from(neighbor_degree);
    let mut informed = vec![1.0];
    let mut senders = 1.0;
    let mut reach_probability = 1.0;
    loop {
        let new = senders * m * reach_probability;
        if new < WAVE_STOP_EPSILON * n {
            // Stall guard: the expected-value tail would creep below N
            // forever even though the underlying random process always
            // finishes; close the curve with a terminal wave at N.
            informed.push(n);
            return informed;
        }
        let next = (informed.last().expect("non-empty") + new).min(n);
        informed.push(next);
        if n - next < WAVE_STOP_EPSILON * n {
            *informed.last_mut().expect("non-empty") = n;
            return informed;
        }
        senders = new;
        reach_probability = (n - next) / n;
    }
}

fn cached_wave_counts(node_count: u32, neighbor_degree: u32) -> Arc<[f64]> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), Arc<[f64]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("wave-count cache poisoned");
    guard
        .entry((node_count, neighbor_degree))
        .or_insert_with(|| wave_counts(node_count, neighbor_degree).into())
        .clone()
}

/// Expected informed-fraction curve for one block of the given size.
pub fn informed_curve(block_size_bytes: u64, params: &NetworkParams) -> InformedCurve {
    InformedCurve {
        wave_interval_seconds: pairwise_propagation_interval(block_size_bytes, params),
        informed: cached_wave_counts(params.node_count, params.neighbor_degree),
        node_count: params.node_count,
    }
}

/// Total expected uninformed time `W = integral of (1 - f(t)) dt` over
/// the life of one block, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UninformedIntegral(f64);

impl UninformedIntegral {
    pub fn new(seconds: f64) -> Result<Self, PropagationError> {
        if !seconds.is_finite() || seconds < 0.0 {
            return Err(PropagationError::BadIntegral(seconds));
        }
        Ok(UninformedIntegral(seconds))
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

/// `W = sum_k (1 - informed_k / N) * TP_avg` over the curve's waves; the
/// step integral is exact because `f` is piecewise constant.
pub fn uninformed_integral(curve: &InformedCurve) -> UninformedIntegral {
    let n = f64::from(curve.node_count);
    let uninformed_waves: f64 = curve
        .informed
        .iter()
        .map(|count| 1.0 - count / n)
        .sum::<f64>();
    UninformedIntegral(uninformed_waves * curve.wave_interval_seconds)
}
