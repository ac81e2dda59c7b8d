//! Discrete-event chain simulator.
//!
//! The network is aggregated into a single miner population with one
//! Poisson block clock: while a given tip is canonical, discoveries
//! arrive at exponential gaps with mean equal to the tip's implied
//! interval. Each discovery is then attributed: with probability equal
//! to the still-uninformed fraction of the network (from the tip's
//! propagation curve, evaluated at the discovery lag) the finder had
//! not heard the tip and its block forks off the tip's parent at the
//! tip's height. Such a competitor never overtakes the canonical
//! branch here; it is recorded as stale and its transactions return to
//! the front of the mempool when the race resolves.
//!
//! Transactions are conserved exactly: at any stop point,
//! `confirmed + pending == generated` as integers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;

use crate::dmi::{self, DmiConfig, DmiError};
use crate::dts::{assemble_dts_block, assemble_standard_block, BlockAssembly, DtsConfig};
use crate::numerics::{
    difficulty_from_target, expected_interval, fork_rate_from_interval, target_from_difficulty,
    Difficulty, ForkRate, HashRate, Interval, NumericsError, Target,
};
use crate::propagation::{
    informed_curve, uninformed_integral, InformedCurve, NetworkParams, PropagationError,
};
use crate::workload::{
    FeeSource, HourlyProfile, Mempool, Transaction, TransactionSource, WorkloadError,
};

/// RNG stream id for the block clock and fork attribution draws.
/// Streams 1 and 2 belong to the workload.
const ENGINE_STREAM: u64 = 3;

/// Hard ceiling on block discoveries per run, so a misconfigured
/// scenario fails loudly instead of spinning forever.
const EVENT_CAP: u64 = 20_000_000;

/// Absolute tolerance on the analytic fork rate when calibrating
/// network delay.
const CALIBRATION_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Dmi(#[from] DmiError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("scenario invalid: {0}")]
    BadScenario(String),
    #[error("simulation exceeded {cap} block events without finishing")]
    EventCap { cap: u64 },
    #[error("network calibration failed: {0}")]
    Calibration(String),
}

/// How the mining target is chosen after each canonical block.
#[derive(Debug, Clone, PartialEq)]
pub enum MiningPolicy {
    /// One fixed target for the whole run, derived from the expected
    /// interval at the scenario hash rate.
    FixedInterval { interval_seconds: f64 },
    /// Per-block retargeting from the size of the block just mined,
    /// holding the expected fork rate at `fork_limit`.
    DynamicInterval {
        fork_limit: f64,
        min_interval_seconds: f64,
        max_interval_seconds: f64,
    },
}

/// How transactions are selected from the mempool.
#[derive(Debug, Clone, PartialEq)]
pub enum AssemblyPolicy {
    /// Arrival order up to the byte cap.
    Standard,
    /// Arrival order, fee-priced leaf space.
    FeeWeighted(DtsConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunUntil {
    /// Mine until the clock passes `duration_seconds`.
    Duration,
    /// Arrivals stop at `duration_seconds`; mine on until every
    /// generated transaction is confirmed.
    WorkloadDrained,
}

/// A fully resolved simulation input. Construct directly or resolve
/// from a config file.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub network: NetworkParams,
    pub hash_rate_hashes_per_sec: f64,
    pub mining: MiningPolicy,
    pub assembly: AssemblyPolicy,
    pub max_block_bytes: u64,
    pub tx_size_bytes: u32,
    pub initial_backlog: u32,
    pub profile: HourlyProfile,
    pub fees: FeeSource,
    pub duration_seconds: f64,
    pub run_until: RunUntil,
}

/// One observed block, canonical or stale, in discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: u64,
    pub parent_id: u64,
    pub height: u64,
    pub time_seconds: f64,
    /// Gap to the parent block's discovery time.
    pub interval_seconds: f64,
    pub size_bytes: u64,
    pub tx_count: u32,
    pub total_fees: f64,
    /// Target this block was mined against.
    pub target: Target,
    pub stale: bool,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    /// All blocks except genesis, in discovery order.
    pub blocks: Vec<Block>,
    pub generated_tx: u64,
    pub confirmed_tx: u64,
    pub pending_tx: u64,
    /// Denominator for throughput: the requested duration, or the
    /// makespan for drained runs.
    pub elapsed_seconds: f64,
    /// Time the last canonical block was found (drained runs only).
    pub makespan_seconds: Option<f64>,
    pub fees_cycled: bool,
    pub seed: u64,
}

/// Target selection state shared by both mining policies.
enum Retarget {
    Fixed(Target),
    Dynamic(DmiConfig),
}

impl Retarget {
    /// Target and implied interval for the block after one of
    /// `last_block_size` bytes.
    fn next(
        &self,
        last_block_size: u64,
        hash_rate: HashRate,
    ) -> Result<(Target, Interval), EngineError> {
        match self {
            Retarget::Fixed(target) => {
                let interval = expected_interval(difficulty_from_target(target), hash_rate);
                Ok((target.clone(), interval))
            }
            Retarget::Dynamic(cfg) => {
                let decision = dmi::evaluate(last_block_size, cfg)?;
                Ok((decision.target, decision.interval))
            }
        }
    }
}

/// Canonical head of the chain.
struct Tip {
    id: u64,
    parent_id: u64,
    parent_time: f64,
    height: u64,
    found_time: f64,
    /// Propagation of this block, sized by its actual bytes.
    curve: InformedCurve,
    /// Target this block satisfied; a competitor mined in ignorance of
    /// it satisfies the same one.
    mined_target: Target,
    next_target: Target,
    next_interval: Interval,
}

/// An unresolved competitor at the tip's height. It holds its selected
/// transactions out of the mempool until the race resolves.
struct Rival {
    txs: Vec<Transaction>,
}

fn assemble(
    pool: &Mempool,
    assembly: &AssemblyPolicy,
    tx_size_bytes: u32,
    max_block_bytes: u64,
) -> BlockAssembly {
    match assembly {
        AssemblyPolicy::Standard => {
            assemble_standard_block(pool.iter(), max_block_bytes, tx_size_bytes)
        }
        AssemblyPolicy::FeeWeighted(cfg) => {
            assemble_dts_block(pool.iter(), cfg, tx_size_bytes, max_block_bytes)
        }
    }
}

fn validate(scenario: &Scenario) -> Result<(), EngineError> {
    if !scenario.duration_seconds.is_finite() || scenario.duration_seconds <= 0.0 {
        return Err(EngineError::BadScenario(format!(
            "duration must be positive and finite, got {}",
            scenario.duration_seconds
        )));
    }
    if scenario.tx_size_bytes == 0 {
        return Err(EngineError::BadScenario(
            "transaction size must be positive".to_owned(),
        ));
    }
    if scenario.max_block_bytes < u64::from(scenario.tx_size_bytes) {
        return Err(EngineError::BadScenario(format!(
            "max block bytes {} cannot hold a single {}-byte transaction",
            scenario.max_block_bytes, scenario.tx_size_bytes
        )));
    }
    Ok(())
}

pub fn run(scenario: &Scenario) -> Result<SimResult, EngineError> {
    validate(scenario)?;
    let hash_rate = HashRate::new(scenario.hash_rate_hashes_per_sec)?;
    let retarget = match &scenario.mining {
        MiningPolicy::FixedInterval { interval_seconds } => {
            let interval = Interval::new(*interval_seconds)?;
            let difficulty =
                Difficulty::new(interval.seconds() * hash_rate.hashes_per_second())?;
            Retarget::Fixed(target_from_difficulty(difficulty)?.target)
        }
        MiningPolicy::DynamicInterval {
            fork_limit,
            min_interval_seconds,
            max_interval_seconds,
        } => Retarget::Dynamic(DmiConfig::new(
            ForkRate::new(*fork_limit)?,
            hash_rate,
            scenario.network.clone(),
            Interval::new(*min_interval_seconds)?,
            Interval::new(*max_interval_seconds)?,
        )?),
    };

    let mut rng = ChaCha12Rng::seed_from_u64(scenario.seed);
    rng.set_stream(ENGINE_STREAM);

    let mut source = TransactionSource::new(
        scenario.profile.clone(),
        scenario.duration_seconds,
        &scenario.fees,
        scenario.seed,
        scenario.tx_size_bytes,
    )?;
    let mut pool = Mempool::new();
    for tx in source.initial_backlog(scenario.initial_backlog) {
        pool.push_arrival(tx);
    }

    // Genesis bootstraps the chain: found at time zero, assumed full
    // size so the first retarget starts from the safe end.
    let genesis_size = scenario.max_block_bytes;
    let (genesis_next_target, genesis_next_interval) = retarget.next(genesis_size, hash_rate)?;
    let mut tip = Tip {
        id: 0,
        parent_id: 0,
        parent_time: 0.0,
        height: 0,
        found_time: 0.0,
        curve: informed_curve(genesis_size, &scenario.network),
        mined_target: genesis_next_target.clone(),
        next_target: genesis_next_target,
        next_interval: genesis_next_interval,
    };

    let mut blocks: Vec<Block> = Vec::new();
    let mut rival: Option<Rival> = None;
    let mut confirmed: u64 = 0;
    let mut next_id: u64 = 1;
    let mut now = 0.0_f64;
    let mut events: u64 = 0;

    loop {
        if scenario.run_until == RunUntil::WorkloadDrained
            && source.exhausted()
            && pool.is_empty()
            && rival.as_ref().is_none_or(|r| r.txs.is_empty())
        {
            break;
        }
        let gap: f64 = rng.sample::<f64, _>(Exp1) * tip.next_interval.seconds();
        let found = now + gap;
        if scenario.run_until == RunUntil::Duration && found > scenario.duration_seconds {
            break;
        }
        events += 1;
        if events > EVENT_CAP {
            return Err(EngineError::EventCap { cap: EVENT_CAP });
        }
        now = found;
        source.ingest_until(now, &mut pool);

        // Fork attribution. Genesis is known to every node from the
        // start, so only mined tips can be raced.
        let informed = tip.curve.informed_fraction_at(now - tip.found_time);
        let draw: f64 = rng.random();
        let forked = tip.height > 0 && draw < 1.0 - informed;

        // Either way the old race is over: this discovery is evidence
        // the network mines the canonical branch, so a pending
        // competitor loses and its transactions go back first.
        if let Some(r) = rival.take() {
            pool.reinsert_returned(r.txs);
        }

        let chosen = assemble(&pool, &scenario.assembly, scenario.tx_size_bytes, scenario.max_block_bytes);
        let txs = pool.pop_front(chosen.tx_count);

        if forked {
            // Mined on the tip's parent without having seen the tip:
            // same height, same satisfied target, doomed.
            blocks.push(Block {
                id: next_id,
                parent_id: tip.parent_id,
                height: tip.height,
                time_seconds: now,
                interval_seconds: now - tip.parent_time,
                size_bytes: chosen.block_size_bytes,
                tx_count: chosen.tx_count,
                total_fees: chosen.total_fees,
                target: tip.mined_target.clone(),
                stale: true,
            });
            rival = Some(Rival { txs });
        } else {
            confirmed += u64::from(chosen.tx_count);
            let (next_target, next_interval) =
                retarget.next(chosen.block_size_bytes, hash_rate)?;
            blocks.push(Block {
                id: next_id,
                parent_id: tip.id,
                height: tip.height + 1,
                time_seconds: now,
                interval_seconds: now - tip.found_time,
                size_bytes: chosen.block_size_bytes,
                tx_count: chosen.tx_count,
                total_fees: chosen.total_fees,
                target: tip.next_target.clone(),
                stale: false,
            });
            tip = Tip {
                id: next_id,
                parent_id: tip.id,
                parent_time: tip.found_time,
                height: tip.height + 1,
                found_time: now,
                curve: informed_curve(chosen.block_size_bytes, &scenario.network),
                mined_target: tip.next_target.clone(),
                next_target,
                next_interval,
            };
            drop(txs); // canonical transactions are confirmed, not returned
        }
        next_id += 1;
    }

    // Arrivals between the last block and the horizon still happened;
    // they count as pending so conservation stays exact.
    source.ingest_until(scenario.duration_seconds, &mut pool);
    if let Some(r) = rival.take() {
        pool.reinsert_returned(r.txs);
    }

    let makespan = match scenario.run_until {
        RunUntil::Duration => None,
        RunUntil::WorkloadDrained => Some(tip.found_time),
    };
    Ok(SimResult {
        blocks,
        generated_tx: source.generated(),
        confirmed_tx: confirmed,
        pending_tx: pool.len() as u64,
        elapsed_seconds: makespan.unwrap_or(scenario.duration_seconds),
        makespan_seconds: makespan,
        fees_cycled: source.fees_cycled(),
        seed: scenario.seed,
    })
}

/// Analytic fork rate of `network` for blocks of the given size mined
/// at the given interval.
fn analytic_fork_rate(
    network: &NetworkParams,
    block_size_bytes: u64,
    interval: Interval,
) -> Result<f64, EngineError> {
    let w = uninformed_integral(&informed_curve(block_size_bytes, network));
    if w.seconds() == 0.0 {
        return Ok(0.0);
    }
    Ok(fork_rate_from_interval(interval, w)?.probability())
}

/// Adjust the network's per-hop delay so that the analytic fork rate
/// for `block_size_bytes` blocks at `interval_seconds` matches
/// `target_fork_rate` within an absolute 1e-4. A network already
/// within tolerance is returned unchanged; otherwise the delay is
/// found by bisection (the fork rate is strictly increasing in delay).
pub fn calibrate_network(
    network: &NetworkParams,
    target_fork_rate: f64,
    block_size_bytes: u64,
    interval_seconds: f64,
) -> Result<NetworkParams, EngineError> {
    let target = ForkRate::new(target_fork_rate)?.probability();
    if target == 0.0 {
        return Err(EngineError::Calibration(
            "cannot calibrate to a zero fork rate".to_owned(),
        ));
    }
    let interval = Interval::new(interval_seconds)?;
    let fork_at = |delay: f64| -> Result<f64, EngineError> {
        analytic_fork_rate(&network.with_delay(delay)?, block_size_bytes, interval)
    };

    let current = fork_at(network.delay_seconds())?;
    if (current - target).abs() <= CALIBRATION_TOLERANCE {
        return Ok(network.clone());
    }

    let mut lo = 0.0_f64;
    if fork_at(lo)? > target {
        return Err(EngineError::Calibration(format!(
            "bandwidth alone already forces the fork rate above {target}; \
             no delay can lower it"
        )));
    }
    let mut hi = network.delay_seconds().max(1.0);
    while fork_at(hi)? < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(EngineError::Calibration(format!(
                "no delay below 1e6 seconds reaches a fork rate of {target}"
            )));
        }
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if fork_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delay = 0.5 * (lo + hi);
    let achieved = fork_at(delay)?;
    if (achieved - target).abs() > CALIBRATION_TOLERANCE {
        return Err(EngineError::Calibration(format!(
            "bisection stalled at fork rate {achieved}, wanted {target}"
        )));
    }
    Ok(network.with_delay(delay)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_scenario() -> Scenario {
        Scenario {
            seed: 42,
            network: NetworkParams::new(10_000, 8, 800_000.0, 0.05).unwrap(),
            hash_rate_hashes_per_sec: 4.0e7,
            mining: MiningPolicy::FixedInterval {
                interval_seconds: 600.0,
            },
            assembly: AssemblyPolicy::Standard,
            max_block_bytes: 1_000_000,
            tx_size_bytes: 500,
            initial_backlog: 0,
            profile: HourlyProfile::constant(0),
            fees: FeeSource::Constant(1.0),
            duration_seconds: 600_000.0,
            run_until: RunUntil::Duration,
        }
    }

    fn canonical(result: &SimResult) -> Vec<&Block> {
        result.blocks.iter().filter(|b| !b.stale).collect()
    }

    #[test]
    fn same_seed_reproduces_the_run_exactly() {
        let mut scenario = quiet_scenario();
        scenario.profile = HourlyProfile::constant(4000);
        scenario.initial_backlog = 3000;
        scenario.duration_seconds = 50_000.0;
        let a = run(&scenario).unwrap();
        let b = run(&scenario).unwrap();
        assert_eq!(a.blocks, b.blocks);
        assert_eq!(a.confirmed_tx, b.confirmed_tx);
        assert_eq!(a.generated_tx, b.generated_tx);

        let mut reseeded = scenario.clone();
        reseeded.seed = 43;
        let c = run(&reseeded).unwrap();
        assert_ne!(a.blocks, c.blocks);
    }

    #[test]
    fn block_count_is_poisson_at_the_fixed_interval() {
        // 600,000 s at one block per 600 s: 1000 expected, sd ~31.6.
        let result = run(&quiet_scenario()).unwrap();
        let n = canonical(&result).len() as f64;
        assert!((n - 1000.0).abs() < 150.0, "canonical blocks {n}");
        // Empty mempool still mines blocks, just empty ones.
        assert!(result.blocks.iter().all(|b| b.tx_count == 0));
        assert_eq!(result.confirmed_tx, 0);
    }

    #[test]
    fn transactions_are_conserved_exactly_across_forks() {
        let mut scenario = quiet_scenario();
        // ~50 s of uninformed window per block: forks every ~12 blocks.
        scenario.network = NetworkParams::new(10_000, 8, 800_000.0, 10.0).unwrap();
        scenario.profile = HourlyProfile::constant(6000);
        scenario.initial_backlog = 16_000;
        scenario.duration_seconds = 50_000.0;
        let result = run(&scenario).unwrap();
        let stale = result.blocks.iter().filter(|b| b.stale).count();
        assert!(stale > 0, "scenario was built to fork at least once");
        assert_eq!(
            result.confirmed_tx + result.pending_tx,
            result.generated_tx,
            "conservation must be exact"
        );
        // Stale blocks confirm nothing.
        let canonical_txs: u64 = canonical(&result).iter().map(|b| u64::from(b.tx_count)).sum();
        assert_eq!(canonical_txs, result.confirmed_tx);
    }

    #[test]
    fn stale_blocks_sit_beside_the_height_they_raced() {
        let mut scenario = quiet_scenario();
        scenario.network = NetworkParams::new(10_000, 8, 800_000.0, 10.0).unwrap();
        scenario.profile = HourlyProfile::constant(6000);
        scenario.duration_seconds = 100_000.0;
        let result = run(&scenario).unwrap();
        let heights: Vec<u64> = canonical(&result).iter().map(|b| b.height).collect();
        assert!(heights.iter().enumerate().all(|(i, h)| *h == i as u64 + 1));
        for stale in result.blocks.iter().filter(|b| b.stale) {
            let sibling = result
                .blocks
                .iter()
                .find(|b| !b.stale && b.height == stale.height)
                .expect("every competitor raced a canonical block");
            assert_eq!(sibling.parent_id, stale.parent_id);
            assert_eq!(sibling.target, stale.target);
            assert!(stale.time_seconds > sibling.time_seconds);
        }
    }

    #[test]
    fn fixed_mining_keeps_one_target_for_the_whole_run() {
        let mut scenario = quiet_scenario();
        scenario.profile = HourlyProfile::constant(2000);
        let result = run(&scenario).unwrap();
        let first = &result.blocks[0].target;
        assert!(result.blocks.iter().all(|b| b.target == *first));
        // Mean canonical interval tracks the 600 s clock.
        let blocks = canonical(&result);
        let mean = blocks.last().unwrap().time_seconds / blocks.len() as f64;
        assert!((mean - 600.0).abs() < 60.0, "mean interval {mean}");
    }

    #[test]
    fn dynamic_mining_retargets_from_block_size_until_drained() {
        let scenario = Scenario {
            mining: MiningPolicy::DynamicInterval {
                fork_limit: 0.0095,
                min_interval_seconds: 2.0,
                max_interval_seconds: 3600.0,
            },
            run_until: RunUntil::WorkloadDrained,
            initial_backlog: 4000,
            duration_seconds: 3600.0,
            ..quiet_scenario()
        };
        let result = run(&scenario).unwrap();
        let blocks = canonical(&result);
        // 4000 transactions at 2000 per full block: two full blocks.
        assert_eq!(blocks.len(), 2);
        assert!(blocks.iter().all(|b| b.tx_count == 2000));
        assert_eq!(result.confirmed_tx, 4000);
        assert_eq!(result.pending_tx, 0);
        assert_eq!(result.generated_tx, 4000);
        assert_eq!(
            result.makespan_seconds.unwrap(),
            blocks.last().unwrap().time_seconds
        );
        assert_eq!(result.elapsed_seconds, result.makespan_seconds.unwrap());
        // Genesis bootstraps at 1,000,000 bytes, the mined blocks are
        // 1,001,000: the retargets differ accordingly.
        assert_ne!(blocks[0].target, blocks[1].target);
    }

    #[test]
    fn dynamic_mining_respects_the_interval_floor() {
        let scenario = Scenario {
            mining: MiningPolicy::DynamicInterval {
                fork_limit: 0.0095,
                min_interval_seconds: 60.0,
                max_interval_seconds: 3600.0,
            },
            // ~1 transaction a minute: blocks stay near-empty, and the
            // unclamped interval for a 2 kB block would be ~25 s.
            profile: HourlyProfile::constant(60),
            duration_seconds: 24_000.0,
            ..quiet_scenario()
        };
        let result = run(&scenario).unwrap();
        let blocks = canonical(&result);
        assert!(blocks.len() > 100, "got {}", blocks.len());
        let mean = blocks.last().unwrap().time_seconds / blocks.len() as f64;
        assert!((mean - 60.0).abs() < 15.0, "mean interval {mean}");
    }

    #[test]
    fn genesis_is_never_raced() {
        let mut scenario = quiet_scenario();
        // A day of delay per hop: every discovery lands inside the
        // previous block's propagation window.
        scenario.network = NetworkParams::new(10_000, 8, 800_000.0, 86_400.0).unwrap();
        scenario.duration_seconds = 100_000.0;
        let result = run(&scenario).unwrap();
        assert!(!result.blocks.is_empty());
        assert!(!result.blocks[0].stale, "the first block has no one to race");
        assert_eq!(result.blocks[0].height, 1);
        // Everything after it forks against block one.
        assert!(result.blocks[1..].iter().all(|b| b.stale));
    }

    #[test]
    fn empty_workload_drains_immediately() {
        let mut scenario = quiet_scenario();
        scenario.run_until = RunUntil::WorkloadDrained;
        let result = run(&scenario).unwrap();
        assert!(result.blocks.is_empty());
        assert_eq!(result.makespan_seconds, Some(0.0));
        assert_eq!(result.generated_tx, 0);
    }

    #[test]
    fn bad_scenarios_are_rejected() {
        let mut scenario = quiet_scenario();
        scenario.duration_seconds = 0.0;
        assert!(matches!(run(&scenario), Err(EngineError::BadScenario(_))));

        let mut scenario = quiet_scenario();
        scenario.max_block_bytes = 400;
        assert!(matches!(run(&scenario), Err(EngineError::BadScenario(_))));

        let mut scenario = quiet_scenario();
        scenario.mining = MiningPolicy::DynamicInterval {
            fork_limit: 0.0095,
            min_interval_seconds: 1.0,
            max_interval_seconds: 3600.0,
        };
        assert!(matches!(run(&scenario), Err(EngineError::Dmi(_))));
    }

    #[test]
    fn calibration_finds_the_anchor_delay() {
        // Delay at which full 1,001,000-byte blocks mined every 600 s
        // on the default network fork at exactly 0.95%.
        const ANCHOR_DELAY: f64 = 0.022419778978264082;
        let start = NetworkParams::new(10_000, 8, 800_000.0, 0.05).unwrap();
        let calibrated = calibrate_network(&start, 0.0095, 1_001_000, 600.0).unwrap();
        assert!(
            (calibrated.delay_seconds() - ANCHOR_DELAY).abs() < 1e-9,
            "delay {}",
            calibrated.delay_seconds()
        );
        // Already-calibrated networks pass through untouched.
        let again = calibrate_network(&calibrated, 0.0095, 1_001_000, 600.0).unwrap();
        assert_eq!(again.delay_seconds(), calibrated.delay_seconds());
    }

    #[test]
    fn calibration_rejects_unreachable_targets() {
        let slow = NetworkParams::new(10_000, 8, 10.0, 0.0).unwrap();
        let err = calibrate_network(&slow, 0.0001, 1_001_000, 600.0).unwrap_err();
        assert!(matches!(err, EngineError::Calibration(_)), "{err}");
    }
}
