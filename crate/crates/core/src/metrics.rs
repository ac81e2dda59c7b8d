//! Run metrics and deterministic result rendering.
//!
//! All serialization of simulation output lives here so that two runs
//! of the same scenario produce byte-identical files. Floats are
//! rendered with Rust's default shortest-roundtrip formatting.

use serde::Serialize;

use crate::engine::{Block, SimResult};

/// Width of the trailing throughput window in the timeline, in seconds.
const INSTANT_WINDOW_SECONDS: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub canonical_blocks: u64,
    pub stale_blocks: u64,
    /// Stale blocks as a fraction of all observed blocks.
    pub fork_rate: f64,
    /// Confirmed transactions per elapsed second.
    pub tps: f64,
    pub confirmed_tx: u64,
    pub generated_tx: u64,
    pub pending_tx: u64,
    pub elapsed_seconds: f64,
    pub makespan_seconds: Option<f64>,
    /// Mean gap between consecutive canonical blocks.
    pub mean_interval_seconds: f64,
    /// Mean canonical block size as a fraction of the byte cap.
    pub mean_block_fill: f64,
    /// Coefficient of variation (population) of canonical per-block
    /// fee totals; a flatness measure for fee capture across blocks.
    pub fee_cv: f64,
    pub fees_cycled: bool,
}

/// Transaction conservation check: every generated transaction is
/// either confirmed or still pending, as exact integers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationAudit {
    pub generated_tx: u64,
    pub confirmed_tx: u64,
    pub pending_tx: u64,
    pub exact: bool,
}

pub fn audit(result: &SimResult) -> ConservationAudit {
    ConservationAudit {
        generated_tx: result.generated_tx,
        confirmed_tx: result.confirmed_tx,
        pending_tx: result.pending_tx,
        exact: result.confirmed_tx + result.pending_tx == result.generated_tx,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        (0.0, 0)
    } else {
        (sum / n as f64, n)
    }
}

pub fn report(result: &SimResult, max_block_bytes: u64) -> MetricsReport {
    let canonical: Vec<&Block> = result.blocks.iter().filter(|b| !b.stale).collect();
    let stale = result.blocks.len() - canonical.len();
    let total = result.blocks.len();
    let fork_rate = if total == 0 {
        0.0
    } else {
        stale as f64 / total as f64
    };
    let tps = if result.elapsed_seconds > 0.0 {
        result.confirmed_tx as f64 / result.elapsed_seconds
    } else {
        0.0
    };
    let (mean_interval_seconds, _) = mean(canonical.iter().map(|b| b.interval_seconds));
    let (mean_block_fill, _) = mean(
        canonical
            .iter()
            .map(|b| b.size_bytes as f64 / max_block_bytes as f64),
    );
    let (fee_mean, n) = mean(canonical.iter().map(|b| b.total_fees));
    let fee_cv = if n == 0 || fee_mean == 0.0 {
        0.0
    } else {
        let variance = canonical
            .iter()
            .map(|b| (b.total_fees - fee_mean).powi(2))
            .sum::<f64>()
            / n as f64;
        variance.sqrt() / fee_mean
    };
    MetricsReport {
        canonical_blocks: canonical.len() as u64,
        stale_blocks: stale as u64,
        fork_rate,
        tps,
        confirmed_tx: result.confirmed_tx,
        generated_tx: result.generated_tx,
        pending_tx: result.pending_tx,
        elapsed_seconds: result.elapsed_seconds,
        makespan_seconds: result.makespan_seconds,
        mean_interval_seconds,
        mean_block_fill,
        fee_cv,
        fees_cycled: result.fees_cycled,
    }
}

/// One row per block, canonical and stale, in discovery order.
pub fn blocks_csv(result: &SimResult) -> String {
    let mut out = String::from(
        "height,time_seconds,size_bytes,interval_seconds,target_hex,stale,tx_count,total_fees\n",
    );
    for b in &result.blocks {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            b.height,
            b.time_seconds,
            b.size_bytes,
            b.interval_seconds,
            b.target.to_hex(),
            b.stale,
            b.tx_count,
            b.total_fees,
        ));
    }
    out
}

/// Cumulative and trailing-window throughput at each block time.
/// The trailing window shortens to the elapsed time until a full hour
/// has passed, so early rows are averages over what actually happened.
fn throughput_rows(blocks: &[Block]) -> Vec<(f64, f64)> {
    let mut rows = Vec::with_capacity(blocks.len());
    let mut cumulative: u64 = 0;
    let mut window_sum: u64 = 0;
    let mut window_start = 0usize;
    for b in blocks {
        if !b.stale {
            cumulative += u64::from(b.tx_count);
            window_sum += u64::from(b.tx_count);
        }
        while blocks[window_start].time_seconds <= b.time_seconds - INSTANT_WINDOW_SECONDS {
            if !blocks[window_start].stale {
                window_sum -= u64::from(blocks[window_start].tx_count);
            }
            window_start += 1;
        }
        let t = b.time_seconds;
        let cumulative_tps = if t > 0.0 { cumulative as f64 / t } else { 0.0 };
        let span = t.min(INSTANT_WINDOW_SECONDS);
        let instant_tps = if span > 0.0 {
            window_sum as f64 / span
        } else {
            0.0
        };
        rows.push((cumulative_tps, instant_tps));
    }
    rows
}

/// One row per block: when it was found, how big it was, and the
/// cumulative and trailing-hour confirmed throughput at that moment.
pub fn timeline_csv(result: &SimResult) -> String {
    let mut out =
        String::from("block_time_minutes,block_size_bytes,cumulative_tps,instant_tps\n");
    for (b, (cumulative_tps, instant_tps)) in
        result.blocks.iter().zip(throughput_rows(&result.blocks))
    {
        out.push_str(&format!(
            "{},{},{},{}\n",
            b.time_seconds / 60.0,
            b.size_bytes,
            cumulative_tps,
            instant_tps,
        ));
    }
    out
}

#[derive(Serialize)]
struct FullReport<'a> {
    metrics: &'a MetricsReport,
    conservation: &'a ConservationAudit,
}

pub fn report_json(metrics: &MetricsReport, conservation: &ConservationAudit) -> String {
    let mut out = serde_json::to_string_pretty(&FullReport {
        metrics,
        conservation,
    })
    .expect("report serialization cannot fail");
    out.push('\n');
    out
}
