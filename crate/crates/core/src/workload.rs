//! Transaction workload generation and mempool state.
//!
//! Arrivals follow a nonhomogeneous Poisson process driven by an hourly
//! volume profile that repeats daily; fees come from a pluggable
//! sampler. All randomness is ChaCha12 seeded from the scenario seed,
//! with separate, fixed stream ids for arrivals and fees so the two
//! sequences never interleave: changing the fee model cannot move an
//! arrival time.

use std::collections::VecDeque;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, LogNormal};

/// RNG stream ids carved out of each scenario seed.
const ARRIVAL_STREAM: u64 = 1;
const FEE_STREAM: u64 = 2;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    BadRow {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: profile must cover hours 0..=23, hour {hour} is missing")]
    MissingHour { path: String, hour: u32 },
    #[error("fee file {path} contains no fees")]
    EmptyFeeFile { path: String },
    #[error("lognormal sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("constant fee must be non-negative and finite, got {0}")]
    BadConstantFee(f64),
}

/// One simulated payment. Fixed byte size; the fee drives storage
/// pricing under fee-weighted assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    pub id: u64,
    pub arrival_seconds: f64,
    pub size_bytes: u32,
    pub fee: f64,
}

/// Expected transaction volume for each hour of a day. The profile
/// repeats for runs longer than 24 hours.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyProfile {
    counts: [u64; 24],
}

impl HourlyProfile {
    pub fn new(counts: [u64; 24]) -> Self {
        HourlyProfile { counts }
    }

    /// Flat profile: the same expected volume every hour.
    pub fn constant(per_hour: u64) -> Self {
        HourlyProfile {
            counts: [per_hour; 24],
        }
    }

    pub fn counts(&self) -> &[u64; 24] {
        &self.counts
    }

    pub fn daily_total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bundled default: a synthetic diurnal retail-payment profile. Six
/// anchor hours carry measured volumes (hour 0: 530, hour 9: 25,842,
/// hour 10: 33,973, hour 15: 24,271, hour 16: 35,764, hour 23: 741);
/// the hours between anchors are linearly interpolated and rounded.
pub fn bundled_diurnal_profile() -> HourlyProfile {
    HourlyProfile::new([
        530, 3_342, 6_155, 8_967, 11_780, 14_592, 17_405, 20_217, 23_030, 25_842, 33_973,
        32_033, 30_092, 28_152, 26_211, 24_271, 35_764, 30_761, 25_757, 20_754, 15_751,
        10_748, 5_744, 741,
    ])
}

fn read_lines(path: &Path) -> Result<Vec<String>, WorkloadError> {
    let text = std::fs::read_to_string(path).map_err(|e| WorkloadError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Load an hourly profile from CSV rows `hour,count` covering each of
/// hours 0..=23 exactly once. A leading `hour,count` header is allowed.
pub fn load_profile(path: &Path) -> Result<HourlyProfile, WorkloadError> {
    let display = path.display().to_string();
    let bad = |line: usize, message: String| WorkloadError::BadRow {
        path: display.clone(),
        line,
        message,
    };
    let mut seen: [Option<u64>; 24] = [None; 24];
    for (idx, raw) in read_lines(path)?.iter().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',').map(str::trim);
        let hour_field = fields.next().unwrap_or("");
        if line == 1 && hour_field.parse::<u32>().is_err() {
            continue; // header row
        }
        let hour: u32 = hour_field
            .parse()
            .map_err(|_| bad(line, format!("bad hour {hour_field:?}")))?;
        if hour > 23 {
            return Err(bad(line, format!("hour {hour} out of range 0..=23")));
        }
        let count_field = fields.next().ok_or_else(|| {
            bad(line, "expected two fields: hour,count".to_owned())
        })?;
        if fields.next().is_some() {
            return Err(bad(line, "expected two fields: hour,count".to_owned()));
        }
        let count: u64 = count_field
            .parse()
            .map_err(|_| bad(line, format!("bad count {count_field:?}")))?;
        if seen[hour as usize].replace(count).is_some() {
            return Err(bad(line, format!("hour {hour} listed twice")));
        }
    }
    let mut counts = [0u64; 24];
    for (hour, slot) in seen.iter().enumerate() {
        counts[hour] = slot.ok_or(WorkloadError::MissingHour {
            path: display.clone(),
            hour: hour as u32,
        })?;
    }
    Ok(HourlyProfile::new(counts))
}

/// Load a fee-per-line CSV (optional `fee` header). Fees must be finite
/// and non-negative; the file must contain at least one fee.
pub fn load_fee_file(path: &Path) -> Result<Vec<f64>, WorkloadError> {
    let display = path.display().to_string();
    let mut fees = Vec::new();
    for (idx, raw) in read_lines(path)?.iter().enumerate() {
        let line = idx + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        match row.parse::<f64>() {
            Ok(fee) if fee.is_finite() && fee >= 0.0 => fees.push(fee),
            Ok(fee) => {
                return Err(WorkloadError::BadRow {
                    path: display,
                    line,
                    message: format!("fee {fee} must be finite and non-negative"),
                })
            }
            Err(_) if line == 1 => continue, // header row
            Err(_) => {
                return Err(WorkloadError::BadRow {
                    path: display,
                    line,
                    message: format!("bad fee {row:?}"),
                })
            }
        }
    }
    if fees.is_empty() {
        return Err(WorkloadError::EmptyFeeFile { path: display });
    }
    Ok(fees)
}

/// Fully resolved fee model (file-backed models are already loaded).
#[derive(Debug, Clone, PartialEq)]
pub enum FeeSource {
    Constant(f64),
    LogNormal { mu: f64, sigma: f64 },
    /// Replays recorded fees in order, cycling (with a flag) when the
    /// recording is shorter than the run.
    Replay(Vec<f64>),
}

enum FeeKind {
    Constant(f64),
    LogNormal(LogNormal<f64>, ChaCha12Rng),
    Replay {
        fees: Vec<f64>,
        index: usize,
        cycled: bool,
    },
}

/// Draws one fee per transaction, in transaction order.
pub struct FeeSampler {
    kind: FeeKind,
}

impl FeeSampler {
    pub fn new(source: &FeeSource, seed: u64) -> Result<Self, WorkloadError> {
        let kind = match source {
            FeeSource::Constant(v) => {
                if !v.is_finite() || *v < 0.0 {
                    return Err(WorkloadError::BadConstantFee(*v));
                }
                FeeKind::Constant(*v)
            }
            FeeSource::LogNormal { mu, sigma } => {
                let dist = LogNormal::new(*mu, *sigma)
                    .map_err(|_| WorkloadError::BadSigma(*sigma))?;
                if *sigma <= 0.0 || !sigma.is_finite() || !mu.is_finite() {
                    return Err(WorkloadError::BadSigma(*sigma));
                }
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(FEE_STREAM);
                FeeKind::LogNormal(dist, rng)
            }
            FeeSource::Replay(fees) => {
                if fees.is_empty() {
                    return Err(WorkloadError::EmptyFeeFile {
                        path: "<inline>".to_owned(),
                    });
                }
                FeeKind::Replay {
                    fees: fees.clone(),
                    index: 0,
                    cycled: false,
                }
            }
        };
        Ok(FeeSampler { kind })
    }

    pub fn sample(&mut self) -> f64 {
        match &mut self.kind {
            FeeKind::Constant(v) => *v,
            FeeKind::LogNormal(dist, rng) => dist.sample(rng),
            FeeKind::Replay {
                fees,
                index,
                cycled,
            } => {
                if *index >= fees.len() {
                    *index = 0;
                    *cycled = true;
                }
                let fee = fees[*index];
                *index += 1;
                fee
            }
        }
    }

    /// True once a replayed fee file has wrapped around.
    pub fn cycled(&self) -> bool {
        matches!(self.kind, FeeKind::Replay { cycled: true, .. })
    }
}

/// Nonhomogeneous Poisson arrival times: within each hour the rate is
/// `volume / 3600` per second, and crossing an hour boundary restarts
/// the exponential draw (memorylessness makes the restart exact).
struct ArrivalTimes {
    rng: ChaCha12Rng,
    profile: HourlyProfile,
    horizon_seconds: f64,
    now: f64,
}

impl ArrivalTimes {
    fn new(profile: HourlyProfile, horizon_seconds: f64, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(ARRIVAL_STREAM);
        ArrivalTimes {
            rng,
            profile,
            horizon_seconds,
            now: 0.0,
        }
    }
}

impl Iterator for ArrivalTimes {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            if self.now >= self.horizon_seconds {
                return None;
            }
            let hour = (self.now / SECONDS_PER_HOUR) as u64;
            let volume = self.profile.counts()[(hour % 24) as usize];
            let hour_end = (hour + 1) as f64 * SECONDS_PER_HOUR;
            if volume == 0 {
                self.now = hour_end;
                continue;
            }
            let rate = volume as f64 / SECONDS_PER_HOUR;
            let step = Exp::new(rate).expect("positive rate").sample(&mut self.rng);
            let candidate = self.now + step;
            if candidate >= hour_end {
                self.now = hour_end;
                continue;
            }
            self.now = candidate;
            if candidate >= self.horizon_seconds {
                return None;
            }
            return Some(candidate);
        }
    }
}

/// Produces the complete transaction stream of a run: an optional
/// backlog at time zero, then Poisson arrivals until the horizon, with
/// ids increasing in generation order.
pub struct TransactionSource {
    arrivals: ArrivalTimes,
    fees: FeeSampler,
    tx_size_bytes: u32,
    next_id: u64,
    generated: u64,
    lookahead: Option<Transaction>,
}

impl TransactionSource {
    pub fn new(
        profile: HourlyProfile,
        horizon_seconds: f64,
        fees: &FeeSource,
        seed: u64,
        tx_size_bytes: u32,
    ) -> Result<Self, WorkloadError> {
        Ok(TransactionSource {
            arrivals: ArrivalTimes::new(profile, horizon_seconds, seed),
            fees: FeeSampler::new(fees, seed)?,
            tx_size_bytes,
            next_id: 1,
            generated: 0,
            lookahead: None,
        })
    }

    /// Transactions already waiting when the run starts, all at arrival
    /// time zero. Must be called before the stream is pulled so that ids
    /// and fee draws stay in generation order.
    pub fn initial_backlog(&mut self, count: u32) -> Vec<Transaction> {
        debug_assert!(self.lookahead.is_none() && self.generated == 0);
        (0..count)
            .map(|_| {
                let tx = Transaction {
                    id: self.next_id,
                    arrival_seconds: 0.0,
                    size_bytes: self.tx_size_bytes,
                    fee: self.fees.sample(),
                };
                self.next_id += 1;
                self.generated += 1;
                tx
            })
            .collect()
    }

    fn pull(&mut self) -> Option<Transaction> {
        let arrival_seconds = self.arrivals.next()?;
        let tx = Transaction {
            id: self.next_id,
            arrival_seconds,
            size_bytes: self.tx_size_bytes,
            fee: self.fees.sample(),
        };
        self.next_id += 1;
        self.generated += 1;
        Some(tx)
    }

    fn peek(&mut self) -> Option<&Transaction> {
        if self.lookahead.is_none() {
            self.lookahead = self.pull();
        }
        self.lookahead.as_ref()
    }

    /// Move every arrival at or before `now` into the mempool.
    pub fn ingest_until(&mut self, now: f64, pool: &mut Mempool) {
        while let Some(tx) = self.peek() {
            if tx.arrival_seconds > now {
                break;
            }
            let tx = self.lookahead.take().expect("peeked");
            pool.push_arrival(tx);
        }
    }

    /// True once no arrival remains before the horizon.
    pub fn exhausted(&mut self) -> bool {
        self.peek().is_none()
    }

    /// Transactions generated so far, backlog included.
    pub fn generated(&self) -> u64 {
        self.generated
    }

    pub fn fees_cycled(&self) -> bool {
        self.fees.cycled()
    }
}

/// Pending transactions in `(arrival_seconds, id)` order. Assembly
/// always consumes a prefix; transactions returned from stale blocks
/// re-enter at the front, where they sort.
#[derive(Debug, Default)]
pub struct Mempool {
    pending: VecDeque<Transaction>,
}

impl Mempool {
    pub fn new() -> Self {
        Mempool::default()
    }

    pub fn push_arrival(&mut self, tx: Transaction) {
        debug_assert!(self
            .pending
            .back()
            .is_none_or(|b| (b.arrival_seconds, b.id) < (tx.arrival_seconds, tx.id)));
        self.pending.push_back(tx);
    }

    /// Return stale-block transactions. Every returned transaction was
    /// popped from the front earlier, so after sorting the batch it
    /// slots back in front of everything currently pending.
    pub fn reinsert_returned(&mut self, mut batch: Vec<Transaction>) {
        batch.sort_by(|a, b| {
            (a.arrival_seconds, a.id)
                .partial_cmp(&(b.arrival_seconds, b.id))
                .expect("arrival times are finite")
        });
        for tx in batch.into_iter().rev() {
            debug_assert!(self
                .pending
                .front()
                .is_none_or(|f| (tx.arrival_seconds, tx.id) < (f.arrival_seconds, f.id)));
            self.pending.push_front(tx);
        }
    }

    /// Remove the selected prefix.
    pub fn pop_front(&mut self, count: u32) -> Vec<Transaction> {
        (0..count)
            .map(|_| self.pending.pop_front().expect("selection fits the mempool"))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.pending.iter()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}
