//! Block assembly strategies.
//!
//! Standard assembly fills a block with transactions in arrival order up
//! to a byte cap. Dynamic-storage assembly prices each transaction in
//! "leaves" of a fixed-capacity tree. The leaf count grows with the fee
//! through a Weibull CDF, so high-fee transactions crowd out space and
//! blocks carry steadier total fees; both strategies select a strict
//! prefix of the arrival-ordered mempool (the first transaction that
//! does not fit closes the block — no reordering, no skipping past it).

use crate::workload::Transaction;

/// Bytes of header plus structural (Merkle) overhead charged to every
/// block on top of its transaction payload.
pub const HEADER_OVERHEAD_BYTES: u64 = 1000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DtsError {
    #[error("weibull {what} must be positive and finite, got {value}")]
    BadWeibull { what: &'static str, value: f64 },
    #[error("max space per transaction must be at least 1 leaf")]
    ZeroMaxSpace,
    #[error("leaf capacity {capacity} must be a power of two no smaller than max space {max_space}")]
    BadLeafCapacity { capacity: u32, max_space: u32 },
    #[error("designated small-tx space is not supported; set designated_small_space = false")]
    DesignatedSmallSpaceUnsupported,
}

/// Order in which the mempool is scanned during assembly. Only
/// arrival-time order is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyPriority {
    TimeBased,
}

/// Parameters of the fee-to-leaves pricing curve and the leaf tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtsConfig {
    weibull_scale: f64,
    weibull_shape: f64,
    max_space_per_tx: u32,
    leaf_capacity: u32,
    priority: AssemblyPriority,
}

impl DtsConfig {
    pub fn new(
        weibull_scale: f64,
        weibull_shape: f64,
        max_space_per_tx: u32,
        leaf_capacity: u32,
        priority: AssemblyPriority,
        designated_small_space: bool,
    ) -> Result<Self, DtsError> {
        if designated_small_space {
            return Err(DtsError::DesignatedSmallSpaceUnsupported);
        }
        if !weibull_scale.is_finite() || weibull_scale <= 0.0 {
            return Err(DtsError::BadWeibull {
                what: "scale",
                value: weibull_scale,
            });
        }
        if !weibull_shape.is_finite() || weibull_shape <= 0.0 {
            return Err(DtsError::BadWeibull {
                what: "shape",
                value: weibull_shape,
            });
        }
        if max_space_per_tx == 0 {
            return Err(DtsError::ZeroMaxSpace);
        }
        if !leaf_capacity.is_power_of_two() || leaf_capacity < max_space_per_tx {
            return Err(DtsError::BadLeafCapacity {
                capacity: leaf_capacity,
                max_space: max_space_per_tx,
            });
        }
        Ok(DtsConfig {
            weibull_scale,
            weibull_shape,
            max_space_per_tx,
            leaf_capacity,
            priority,
        })
    }

    pub fn weibull_scale(&self) -> f64 {
        self.weibull_scale
    }

    pub fn weibull_shape(&self) -> f64 {
        self.weibull_shape
    }

    pub fn max_space_per_tx(&self) -> u32 {
        self.max_space_per_tx
    }

    pub fn leaf_capacity(&self) -> u32 {
        self.leaf_capacity
    }

    pub fn priority(&self) -> AssemblyPriority {
        self.priority
    }
}

impl Default for DtsConfig {
    fn default() -> Self {
        DtsConfig::new(6.8, 1.0, 80, 2048, AssemblyPriority::TimeBased, false)
            .expect("default parameters are valid")
    }
}

/// Leaves a transaction occupies: `clamp(ceil(F(fee) * max), 1, max)`
/// with the Weibull CDF `F(x) = 1 - exp(-(x/scale)^shape)`. Zero- and
/// negative-fee transactions still occupy one leaf.
pub fn leaves_for_fee(fee: f64, cfg: &DtsConfig) -> u32 {
    debug_assert!(fee.is_finite());
    let max = f64::from(cfg.max_space_per_tx);
    let cdf = if fee <= 0.0 {
        0.0
    } else {
        -(-(fee / cfg.weibull_scale).powf(cfg.weibull_shape)).exp_m1()
    };
    ((cdf * max).ceil() as u32).clamp(1, cfg.max_space_per_tx)
}

/// What one assembly pass selected: always a prefix of the scanned
/// mempool view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockAssembly {
    /// Transactions selected from the front of the view.
    pub tx_count: u32,
    /// Leaves consumed (dynamic-storage assembly only; 0 for standard).
    pub leaf_usage: u32,
    /// Payload plus [`HEADER_OVERHEAD_BYTES`].
    pub block_size_bytes: u64,
    pub total_fees: f64,
}

/// Fee-weighted assembly: walk the view in arrival order, charging each
/// transaction its leaf price, and close the block at the first
/// transaction that does not fit the remaining leaves or the byte cap.
/// An empty view yields an empty block of pure overhead.
pub fn assemble_dts_block<'a>(
    view: impl IntoIterator<Item = &'a Transaction>,
    cfg: &DtsConfig,
    tx_size_bytes: u32,
    max_block_bytes: u64,
) -> BlockAssembly {
    let mut selected = 0u32;
    let mut leaves_left = cfg.leaf_capacity;
    let mut fees = 0.0;
    for tx in view {
        let price = leaves_for_fee(tx.fee, cfg);
        if price > leaves_left {
            break;
        }
        if u64::from(selected + 1) * u64::from(tx_size_bytes) > max_block_bytes {
            break;
        }
        selected += 1;
        leaves_left -= price;
        fees += tx.fee;
    }
    BlockAssembly {
        tx_count: selected,
        leaf_usage: cfg.leaf_capacity - leaves_left,
        block_size_bytes: u64::from(selected) * u64::from(tx_size_bytes) + HEADER_OVERHEAD_BYTES,
        total_fees: fees,
    }
}

/// Byte-capped assembly in arrival order: up to
/// `floor(max_block_bytes / tx_size)` transactions, fewer if the view
/// runs out.
pub fn assemble_standard_block<'a>(
    view: impl IntoIterator<Item = &'a Transaction>,
    max_block_bytes: u64,
    tx_size_bytes: u32,
) -> BlockAssembly {
    let cap = max_block_bytes / u64::from(tx_size_bytes);
    let mut selected = 0u64;
    let mut fees = 0.0;
    for tx in view {
        if selected >= cap {
            break;
        }
        selected += 1;
        fees += tx.fee;
    }
    BlockAssembly {
        tx_count: u32::try_from(selected).expect("selection bounded by byte cap"),
        leaf_usage: 0,
        block_size_bytes: selected * u64::from(tx_size_bytes) + HEADER_OVERHEAD_BYTES,
        total_fees: fees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tx(id: u64, fee: f64) -> Transaction {
        Transaction {
            id,
            arrival_seconds: id as f64,
            size_bytes: 500,
            fee,
        }
    }

    fn txs(fees: &[f64]) -> Vec<Transaction> {
        fees.iter()
            .enumerate()
            .map(|(i, &f)| tx(i as u64, f))
            .collect()
    }

    #[test]
    fn fee_at_the_scale_takes_51_of_80_leaves() {
        // F(scale) = 1 - 1/e = 0.63212..., times 80 leaves, ceiled.
        let cfg = DtsConfig::default();
        assert_eq!(leaves_for_fee(6.8, &cfg), 51);
    }

    #[test]
    fn zero_fee_takes_the_one_leaf_floor_and_huge_fees_cap_out() {
        let cfg = DtsConfig::default();
        assert_eq!(leaves_for_fee(0.0, &cfg), 1);
        assert_eq!(leaves_for_fee(-3.0, &cfg), 1);
        assert_eq!(leaves_for_fee(1e9, &cfg), 80);
    }

    #[test]
    fn max_priced_transactions_fill_25_slots_of_a_default_tree() {
        // floor(2048 / 80) = 25 transactions, then 48 leaves remain,
        // too few for a 26th; 25 * 500 B + 1000 B overhead.
        let cfg = DtsConfig::default();
        let pool = txs(&[1e9; 40]);
        let a = assemble_dts_block(&pool, &cfg, 500, u64::MAX);
        assert_eq!(a.tx_count, 25);
        assert_eq!(a.leaf_usage, 2000);
        assert_eq!(a.block_size_bytes, 13_500);
    }

    #[test]
    fn zero_fee_floods_bind_on_bytes_or_leaves_whichever_first() {
        let cfg = DtsConfig::default();
        let pool = txs(&vec![0.0; 16_000]);
        // 1 MB byte cap binds first: 2000 * 500 B.
        let capped = assemble_dts_block(&pool, &cfg, 500, 1_000_000);
        assert_eq!(capped.tx_count, 2000);
        // Without a byte cap the 2048-leaf tree binds.
        let uncapped = assemble_dts_block(&pool, &cfg, 500, u64::MAX);
        assert_eq!(uncapped.tx_count, 2048);
        assert_eq!(uncapped.leaf_usage, 2048);
    }

    #[test]
    fn first_misfit_closes_the_block_even_if_later_entries_would_fit() {
        let cfg = DtsConfig::default();
        // 2027 one-leaf fillers, then a max-priced blocker (80 > 21
        // remaining), then another one-leaf transaction that would fit.
        let mut fees = vec![0.0; 2027];
        fees.push(1e9);
        fees.push(0.0);
        let a = assemble_dts_block(&txs(&fees), &cfg, 500, u64::MAX);
        assert_eq!(a.tx_count, 2027);
        assert_eq!(a.leaf_usage, 2027);
    }

    #[test]
    fn empty_mempool_yields_a_pure_overhead_block() {
        let cfg = DtsConfig::default();
        let a = assemble_dts_block(&[], &cfg, 500, 1_000_000);
        assert_eq!(a.tx_count, 0);
        assert_eq!(a.block_size_bytes, HEADER_OVERHEAD_BYTES);
        let s = assemble_standard_block(&[], 1_000_000, 500);
        assert_eq!(s.tx_count, 0);
        assert_eq!(s.block_size_bytes, HEADER_OVERHEAD_BYTES);
    }

    #[test]
    fn standard_assembly_fills_to_the_byte_cap() {
        let pool = txs(&vec![1.0; 16_000]);
        let a = assemble_standard_block(&pool, 1_000_000, 500);
        assert_eq!(a.tx_count, 2000);
        assert_eq!(a.block_size_bytes, 1_001_000);
        assert_eq!(a.total_fees, 2000.0);
    }

    #[test]
    fn standard_assembly_drains_a_short_mempool() {
        let pool = txs(&vec![1.0; 100]);
        let a = assemble_standard_block(&pool, 1_000_000, 500);
        assert_eq!(a.tx_count, 100);
        assert_eq!(a.block_size_bytes, 51_000);
    }

    #[test]
    fn config_validation_rejects_degenerates() {
        use AssemblyPriority::TimeBased;
        assert!(DtsConfig::new(0.0, 1.0, 80, 2048, TimeBased, false).is_err());
        assert!(DtsConfig::new(6.8, -1.0, 80, 2048, TimeBased, false).is_err());
        assert!(DtsConfig::new(6.8, 1.0, 0, 2048, TimeBased, false).is_err());
        assert!(DtsConfig::new(6.8, 1.0, 80, 2000, TimeBased, false).is_err());
        assert!(DtsConfig::new(6.8, 1.0, 80, 64, TimeBased, false).is_err());
        assert!(matches!(
            DtsConfig::new(6.8, 1.0, 80, 2048, TimeBased, true),
            Err(DtsError::DesignatedSmallSpaceUnsupported)
        ));
    }

    proptest! {
        #[test]
        fn leaf_price_is_monotone_and_bounded(a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let cfg = DtsConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let pa = leaves_for_fee(lo, &cfg);
            let pb = leaves_for_fee(hi, &cfg);
            prop_assert!(pa <= pb);
            prop_assert!((1..=80).contains(&pa));
            prop_assert!((1..=80).contains(&pb));
        }

        #[test]
        fn leaves_are_conserved(fees in proptest::collection::vec(0.0f64..100.0, 0..600)) {
            let cfg = DtsConfig::default();
            let pool = txs(&fees);
            let a = assemble_dts_block(&pool, &cfg, 500, u64::MAX);
            let priced: u32 = pool
                .iter()
                .take(a.tx_count as usize)
                .map(|t| leaves_for_fee(t.fee, &cfg))
                .sum();
            prop_assert_eq!(priced, a.leaf_usage);
            prop_assert!(a.leaf_usage <= cfg.leaf_capacity());
        }

        #[test]
        fn selection_is_always_a_prefix_within_caps(
            fees in proptest::collection::vec(0.0f64..50.0, 0..400),
            max_kb in 1u64..100,
        ) {
            let cfg = DtsConfig::default();
            let pool = txs(&fees);
            let cap = max_kb * 1000;
            let a = assemble_dts_block(&pool, &cfg, 500, cap);
            prop_assert!(u64::from(a.tx_count) * 500 <= cap);
            prop_assert!(a.tx_count as usize <= pool.len());
            let s = assemble_standard_block(&pool, cap, 500);
            prop_assert!(u64::from(s.tx_count) <= cap / 500);
        }
    }
}
