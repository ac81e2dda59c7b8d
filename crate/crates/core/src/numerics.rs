//! Arithmetic linking mining targets on a 256-bit hash space to
//! difficulty, expected block interval, and expected fork rate.
//!
//! All probability/interval math is done in `f64` with the log-space
//! primitives `ln_1p`/`exp_m1` so that quantities of the form
//! `1 - (1 - x)^y` never go through catastrophic cancellation; the
//! relative error of the full target -> difficulty -> interval -> fork
//! chain stays near 1e-14, far inside the 1e-9 tolerance the tests pin.

use num_bigint::BigUint;
use num_traits::{Float, ToPrimitive};

use crate::propagation::UninformedIntegral;

/// Width of the hash space as a float: 2^256. Exact, since it is a power
/// of two well inside the `f64` exponent range.
const HASH_SPACE: f64 = 1.157920892373162e77;

fn hash_space() -> f64 {
    debug_assert_eq!(2f64.powi(256), HASH_SPACE);
    HASH_SPACE
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("{quantity} must be finite, got {value}")]
    NotFinite { quantity: &'static str, value: f64 },
    #[error("{quantity} must satisfy {requirement}, got {value}")]
    OutOfRange {
        quantity: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("target must lie in (0, 2^256)")]
    TargetOutOfRange,
    #[error("target rounds to zero (success probability {probability:.3e} is below the hash-space resolution)")]
    TargetUnderflow { probability: f64 },
    #[error("target hex must be 64 hexadecimal digits, got {0:?}")]
    BadTargetHex(String),
}

fn require_finite(quantity: &'static str, value: f64) -> Result<f64, NumericsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(NumericsError::NotFinite { quantity, value })
    }
}

/// Hash threshold a block hash must fall below, as an integer in
/// `(0, 2^256)`. Encoded big-endian in a fixed 32-byte header field.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target(BigUint);

impl Target {
    pub fn new(value: BigUint) -> Result<Self, NumericsError> {
        if value == BigUint::ZERO || value.bits() > 256 {
            return Err(NumericsError::TargetOutOfRange);
        }
        Ok(Target(value))
    }

    /// Largest representable target, `2^256 - 1`.
    pub fn max_value() -> Self {
        Target((BigUint::from(1u8) << 256u32) - 1u8)
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    /// Probability that one uniformly random 256-bit hash falls below the
    /// target: `T / 2^256`.
    pub fn success_probability(&self) -> f64 {
        // A 256-bit integer always converts; the quotient only rescales
        // the exponent because the divisor is a power of two.
        self.0.to_f64().expect("256-bit value fits in f64 range") / hash_space()
    }

    /// Fixed-width big-endian header encoding.
    pub fn to_bytes_be(&self) -> [u8; 32] {
        let raw = self.0.to_bytes_be();
        let mut out = [0u8; 32];
        out[32 - raw.len()..].copy_from_slice(&raw);
        out
    }

    pub fn from_bytes_be(bytes: [u8; 32]) -> Result<Self, NumericsError> {
        Target::new(BigUint::from_bytes_be(&bytes))
    }

    /// 64-digit lowercase hex of the 32-byte encoding.
    pub fn to_hex(&self) -> String {
        format!("{:0>64}", self.0.to_str_radix(16))
    }

    pub fn from_hex(hex: &str) -> Result<Self, NumericsError> {
        if hex.len() != 64 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(NumericsError::BadTargetHex(hex.to_owned()));
        }
        let value = BigUint::parse_bytes(hex.as_bytes(), 16)
            .ok_or_else(|| NumericsError::BadTargetHex(hex.to_owned()))?;
        Target::new(value)
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// A target together with a flag saying whether it had to be clamped to
/// the representable range. Clamping is reported, never silent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetOutcome {
    pub target: Target,
    pub clamped: bool,
}

/// Expected number of hashes per block: `2^256 / target`. Always >= 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Difficulty(f64);

impl Difficulty {
    pub fn new(value: f64) -> Result<Self, NumericsError> {
        require_finite("difficulty", value)?;
        if value < 1.0 {
            return Err(NumericsError::OutOfRange {
                quantity: "difficulty",
                requirement: ">= 1",
                value,
            });
        }
        Ok(Difficulty(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Network hash rate in hashes per second. Strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HashRate(f64);

impl HashRate {
    pub fn new(value: f64) -> Result<Self, NumericsError> {
        require_finite("hash rate", value)?;
        if value <= 0.0 {
            return Err(NumericsError::OutOfRange {
                quantity: "hash rate",
                requirement: "> 0",
                value,
            });
        }
        Ok(HashRate(value))
    }

    pub fn hashes_per_second(self) -> f64 {
        self.0
    }
}

/// Expected time between blocks, in seconds. Strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Interval(f64);

impl Interval {
    pub fn new(seconds: f64) -> Result<Self, NumericsError> {
        require_finite("interval", seconds)?;
        if seconds <= 0.0 {
            return Err(NumericsError::OutOfRange {
                quantity: "interval",
                requirement: "> 0 seconds",
                value: seconds,
            });
        }
        Ok(Interval(seconds))
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

/// Probability that a given block ends up in a fork race. Lives in `[0, 1)`;
/// a rate of exactly 1 would mean no block ever settles.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ForkRate(f64);

impl ForkRate {
    pub fn new(probability: f64) -> Result<Self, NumericsError> {
        require_finite("fork rate", probability)?;
        if !(0.0..1.0).contains(&probability) {
            return Err(NumericsError::OutOfRange {
                quantity: "fork rate",
                requirement: "in [0, 1)",
                value: probability,
            });
        }
        Ok(ForkRate(probability))
    }

    pub fn probability(self) -> f64 {
        self.0
    }
}

/// Probability that the whole network finds a block within one second,
/// `P = 1 / I`. Lives in `(0, 1]`, which requires `I >= 1 s`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PerSecondFindProbability(f64);

impl PerSecondFindProbability {
    pub fn new(probability: f64) -> Result<Self, NumericsError> {
        require_finite("per-second find probability", probability)?;
        if probability <= 0.0 || probability > 1.0 {
            return Err(NumericsError::OutOfRange {
                quantity: "per-second find probability",
                requirement: "in (0, 1]",
                value: probability,
            });
        }
        Ok(PerSecondFindProbability(probability))
    }

    pub fn from_interval(interval: Interval) -> Result<Self, NumericsError> {
        Self::new(1.0 / interval.seconds())
    }

    pub fn probability(self) -> f64 {
        self.0
    }
}

/// `D = 2^256 / T`, computed through the target's success probability.
pub fn difficulty_from_target(target: &Target) -> Difficulty {
    let p = target.success_probability();
    // p is in (0, 1], so 1/p is in [1, 2^256]; both ends are finite.
    Difficulty(1.0 / p)
}

/// `T = round(2^256 / D)`. A difficulty of exactly 1 maps to the whole
/// hash space, which is clamped to `2^256 - 1` and flagged.
pub fn target_from_difficulty(difficulty: Difficulty) -> Result<TargetOutcome, NumericsError> {
    target_from_success_probability(1.0 / difficulty.value())
}

/// `I = D / R` seconds.
pub fn expected_interval(difficulty: Difficulty, hash_rate: HashRate) -> Interval {
    let seconds = difficulty.value() / hash_rate.hashes_per_second();
    Interval::new(seconds).expect("quotient of positive finite difficulty and hash rate")
}

/// Expected fork rate `r = 1 - (1 - 1/I)^W` for blocks mined at interval
/// `I` while the network needs `W` uninformed-seconds to hear about each
/// block. Requires `I > 1 s` so the per-second find probability is a
/// probability.
pub fn fork_rate_from_interval(
    interval: Interval,
    uninformed: UninformedIntegral,
) -> Result<ForkRate, NumericsError> {
    if interval.seconds() <= 1.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "interval",
            requirement: "> 1 second",
            value: interval.seconds(),
        });
    }
    let p = PerSecondFindProbability::from_interval(interval)?;
    // 1 - (1-P)^W  ==  -expm1(W * ln1p(-P)), with no cancellation for
    // small P or small W.
    let rate = -(uninformed.seconds() * (-p.probability()).ln_1p()).exp_m1();
    // (1-P)^W is strictly positive, so the true rate is below 1 even
    // when it rounds to 1.0; clamp to the nearest representable value.
    ForkRate::new(rate.min(1.0_f64.next_down()))
}

/// Smallest expected interval that keeps the fork rate at `limit`:
/// `I = 1 / (1 - (1 - r0)^(1/W))`. Degenerate at `r0 = 0` (no interval is
/// slow enough) and at `W = 0` (any interval works), both rejected.
pub fn interval_for_fork_limit(
    limit: ForkRate,
    uninformed: UninformedIntegral,
) -> Result<Interval, NumericsError> {
    if limit.probability() == 0.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "fork limit",
            requirement: "> 0",
            value: 0.0,
        });
    }
    if uninformed.seconds() == 0.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "uninformed integral",
            requirement: "> 0 seconds",
            value: 0.0,
        });
    }
    let p = per_second_probability_for_limit(limit, uninformed);
    Interval::new(1.0 / p)
}

/// One-shot form of the retargeting rule: the target whose implied
/// interval holds the fork rate at `limit` given `W` and hash rate `R`,
/// `T = 2^256 * (1 - (1 - r0)^(1/W)) / R`. This is the algebraic collapse
/// of `interval_for_fork_limit` -> `D = I * R` -> `T = 2^256 / D`; both
/// routes are kept and cross-checked in tests.
pub fn target_for_fork_limit(
    limit: ForkRate,
    uninformed: UninformedIntegral,
    hash_rate: HashRate,
) -> Result<TargetOutcome, NumericsError> {
    if limit.probability() == 0.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "fork limit",
            requirement: "> 0",
            value: 0.0,
        });
    }
    if uninformed.seconds() == 0.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "uninformed integral",
            requirement: "> 0 seconds",
            value: 0.0,
        });
    }
    let p = per_second_probability_for_limit(limit, uninformed);
    target_from_success_probability(p / hash_rate.hashes_per_second())
}

/// `1 - (1 - r0)^(1/W)` via log-space primitives; in `(0, 1)` for valid
/// inputs.
fn per_second_probability_for_limit(limit: ForkRate, uninformed: UninformedIntegral) -> f64 {
    -((-limit.probability()).ln_1p() / uninformed.seconds()).exp_m1()
}

/// Exact `round(p * 2^256)` from the mantissa/exponent decomposition of
/// `p`, so no precision is lost before the integer rounding step.
fn target_from_success_probability(p: f64) -> Result<TargetOutcome, NumericsError> {
    require_finite("success probability", p)?;
    if p <= 0.0 {
        return Err(NumericsError::OutOfRange {
            quantity: "success probability",
            requirement: "> 0",
            value: p,
        });
    }
    if p >= 1.0 {
        return Ok(TargetOutcome {
            target: Target::max_value(),
            clamped: true,
        });
    }
    let (mantissa, exponent, _sign) = Float::integer_decode(p);
    let shift = i64::from(exponent) + 256;
    let value = if shift >= 0 {
        BigUint::from(mantissa) << u64::try_from(shift).expect("non-negative shift")
    } else {
        let back = -shift as u32;
        if back >= 54 {
            // mantissa < 2^53, so the rounded quotient is zero.
            BigUint::ZERO
        } else {
            // Round half away from zero; a tie cannot round up past the
            // p < 1 bound because the mantissa's low bit would be even.
            BigUint::from((mantissa + (1u64 << (back - 1))) >> back)
        }
    };
    if value == BigUint::ZERO {
        return Err(NumericsError::TargetUnderflow { probability: p });
    }
    if value.bits() > 256 {
        return Ok(TargetOutcome {
            target: Target::max_value(),
            clamped: true,
        });
    }
    Ok(TargetOutcome {
        target: Target(value),
        clamped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independently computed anchors (arbitrary-precision integer and
    /// 50-digit float arithmetic):
    ///   - floor(2^256 / (600 * 4e7)) in hex,
    ///   - W such that a 600 s interval yields exactly a 0.95% fork rate.
    const ANCHOR_TARGET_HEX: &str =
        "000000002dd01fc067918c87bb22ae2da831babaff47cc1f55b39398a682631f";
    const ANCHOR_W_SECONDS: f64 = 5.722473672839349;

    fn w(seconds: f64) -> UninformedIntegral {
        UninformedIntegral::new(seconds).unwrap()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn difficulty_of_anchor_target_is_24_billion() {
        let target = Target::from_hex(ANCHOR_TARGET_HEX).unwrap();
        let d = difficulty_from_target(&target);
        assert!(
            rel_err(d.value(), 2.4e10) < 1e-12,
            "difficulty {} is not 2.4e10",
            d.value()
        );
    }

    #[test]
    fn target_difficulty_roundtrip_hits_anchor() {
        let out = target_from_difficulty(Difficulty::new(2.4e10).unwrap()).unwrap();
        assert!(!out.clamped);
        let anchor = Target::from_hex(ANCHOR_TARGET_HEX).unwrap();
        // The float route may differ from the exact integer quotient in
        // the last few bits; compare relatively.
        let a = out.target.success_probability();
        let b = anchor.success_probability();
        assert!(rel_err(a, b) < 1e-12);
        let back = difficulty_from_target(&out.target);
        assert!(rel_err(back.value(), 2.4e10) < 1e-12);
    }

    #[test]
    fn fork_rate_at_600s_and_anchor_w_is_exactly_the_budget() {
        let r = fork_rate_from_interval(Interval::new(600.0).unwrap(), w(ANCHOR_W_SECONDS))
            .unwrap();
        assert!(
            (r.probability() - 0.0095).abs() < 1e-12,
            "got {}",
            r.probability()
        );
    }

    #[test]
    fn interval_for_budget_inverts_fork_rate() {
        let i = interval_for_fork_limit(ForkRate::new(0.0095).unwrap(), w(ANCHOR_W_SECONDS))
            .unwrap();
        assert!(rel_err(i.seconds(), 600.0) < 1e-9, "got {}", i.seconds());
    }

    #[test]
    fn saturated_fork_rates_stay_inside_the_probability_domain() {
        // A propagation window hundreds of times the interval: the true
        // rate is below 1 by far less than one ulp, and must round into
        // the domain instead of erroring out.
        let r = fork_rate_from_interval(Interval::new(600.0).unwrap(), w(500_000.0)).unwrap();
        assert!(r.probability() < 1.0);
        assert!(r.probability() > 0.999_999_9);
    }

    #[test]
    fn both_target_routes_agree_on_the_anchor_point() {
        let limit = ForkRate::new(0.0095).unwrap();
        let rate = HashRate::new(4.0e7).unwrap();
        let direct = target_for_fork_limit(limit, w(ANCHOR_W_SECONDS), rate).unwrap();
        assert!(!direct.clamped);

        let i = interval_for_fork_limit(limit, w(ANCHOR_W_SECONDS)).unwrap();
        let d = Difficulty::new(i.seconds() * rate.hashes_per_second()).unwrap();
        let stepped = target_from_difficulty(d).unwrap();

        let a = direct.target.success_probability();
        let b = stepped.target.success_probability();
        assert!(rel_err(a, b) < 1e-9);
        // And both sit on the independently computed integer anchor.
        let anchor = Target::from_hex(ANCHOR_TARGET_HEX).unwrap().success_probability();
        assert!(rel_err(a, anchor) < 1e-9);
    }

    #[test]
    fn full_chain_recovers_the_fork_budget() {
        // target -> difficulty -> interval -> fork rate must return the
        // budget it was built from, across the whole configured range.
        let rate = HashRate::new(4.0e7).unwrap();
        for &r0 in &[1e-4, 1e-3, 0.0095, 0.05, 0.25, 0.5] {
            for &ws in &[0.05, 1.0, 5.722473672839349, 60.0, 600.0] {
                let limit = ForkRate::new(r0).unwrap();
                let out = target_for_fork_limit(limit, w(ws), rate).unwrap();
                assert!(!out.clamped, "clamped at r0={r0} w={ws}");
                let d = difficulty_from_target(&out.target);
                let i = expected_interval(d, rate);
                if i.seconds() <= 1.0 {
                    // Chain only defined for sub-1-per-second finds.
                    continue;
                }
                let r = fork_rate_from_interval(i, w(ws)).unwrap();
                assert!(
                    rel_err(r.probability(), r0) < 1e-9,
                    "r0={r0} w={ws}: recovered {}",
                    r.probability()
                );
            }
        }
    }

    #[test]
    fn difficulty_one_clamps_to_max_target() {
        let out = target_from_difficulty(Difficulty::new(1.0).unwrap()).unwrap();
        assert!(out.clamped);
        assert_eq!(out.target, Target::max_value());
    }

    #[test]
    fn degenerate_inputs_are_domain_errors() {
        assert!(Difficulty::new(0.5).is_err());
        assert!(Difficulty::new(f64::NAN).is_err());
        assert!(HashRate::new(0.0).is_err());
        assert!(Interval::new(-1.0).is_err());
        assert!(ForkRate::new(1.0).is_err());
        assert!(Target::new(BigUint::ZERO).is_err());
        assert!(Target::new(BigUint::from(1u8) << 256u32).is_err());

        let limit = ForkRate::new(0.0095).unwrap();
        assert!(interval_for_fork_limit(ForkRate::new(0.0).unwrap(), w(5.0)).is_err());
        assert!(interval_for_fork_limit(limit, w(0.0)).is_err());
        assert!(
            fork_rate_from_interval(Interval::new(1.0).unwrap(), w(5.0)).is_err(),
            "per-second probability above 1 must be rejected"
        );
    }

    #[test]
    fn zero_uninformed_time_means_no_forks() {
        let r = fork_rate_from_interval(Interval::new(600.0).unwrap(), w(0.0)).unwrap();
        assert_eq!(r.probability(), 0.0);
    }

    #[test]
    fn header_encoding_roundtrips() {
        let t = Target::from_hex(ANCHOR_TARGET_HEX).unwrap();
        let bytes = t.to_bytes_be();
        assert_eq!(Target::from_bytes_be(bytes).unwrap(), t);
        assert_eq!(t.to_hex().len(), 64);
        assert_eq!(t.to_hex(), ANCHOR_TARGET_HEX);
    }

    proptest! {
        #[test]
        fn roundtrip_difficulty_within_1e12(exp in 0.0f64..50.0) {
            let d = Difficulty::new(10f64.powf(exp).max(1.0 + 1e-9)).unwrap();
            let out = target_from_difficulty(d).unwrap();
            let back = difficulty_from_target(&out.target);
            prop_assert!(rel_err(back.value(), d.value()) < 1e-12);
        }

        #[test]
        fn difficulty_target_product_is_hash_space(raw in proptest::collection::vec(any::<u8>(), 32)) {
            let mut bytes = [0u8; 32];
            bytes.copy_from_slice(&raw);
            // Keep targets >= 2^200 so the product check is far from the
            // integer-rounding floor.
            bytes[0] |= 0x80;
            let t = Target::from_bytes_be(bytes).unwrap();
            let d = difficulty_from_target(&t);
            prop_assert!((d.value() * t.success_probability() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn target_shrinks_as_difficulty_grows(a in 1.0f64..1e15, factor in 1.001f64..1e6) {
            let lo = target_from_difficulty(Difficulty::new(a * factor).unwrap()).unwrap();
            let hi = target_from_difficulty(Difficulty::new(a).unwrap()).unwrap();
            prop_assert!(lo.target < hi.target);
        }

        #[test]
        fn fork_and_interval_are_mutual_inverses(r0 in 1e-4f64..0.5, ws in 0.05f64..600.0) {
            let limit = ForkRate::new(r0).unwrap();
            let i = interval_for_fork_limit(limit, w(ws)).unwrap();
            prop_assume!(i.seconds() > 1.0);
            let r = fork_rate_from_interval(i, w(ws)).unwrap();
            prop_assert!(rel_err(r.probability(), r0) < 1e-9);
        }

        #[test]
        fn fork_rate_monotone_in_interval(ws in 0.5f64..60.0, i in 2.0f64..3000.0) {
            let fast = fork_rate_from_interval(Interval::new(i).unwrap(), w(ws)).unwrap();
            let slow = fork_rate_from_interval(Interval::new(i * 1.5).unwrap(), w(ws)).unwrap();
            prop_assert!(slow.probability() < fast.probability());
        }
    }
}
