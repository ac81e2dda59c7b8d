//! Discrete-event simulator and analytic library for a blockchain whose
//! mining target is retuned after every block from the size of the block
//! just mined, so that the expected fork rate stays under a configured
//! budget, together with a fee-weighted ("dynamic transaction storage")
//! block assembly strategy.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] — target/difficulty/interval/fork-rate arithmetic on a
//!   256-bit hash space,
//! * [`propagation`] — expected-value model of gossip waves through the
//!   network and the uninformed-time integral,
//! * [`dmi`] — the per-block retargeting rule built from the two layers
//!   above,
//! * [`dts`] — block assembly strategies (byte-capped standard packing and
//!   fee-weighted leaf packing),
//! * [`workload`] — transaction arrival/fee generation and the mempool,
//! * [`engine`] — the event-driven chain simulation and network
//!   calibration,
//! * [`metrics`] — run reports and CSV/JSON rendering,
//! * [`config`] — file-level scenario descriptions (TOML/JSON).

pub mod config;
pub mod dmi;
pub mod dts;
pub mod engine;
pub mod metrics;
pub mod numerics;
pub mod propagation;
pub mod workload;

pub use config::{ConfigError, ScenarioSpec};
pub use engine::{calibrate_network, run, Scenario, SimResult};
pub use metrics::{report, MetricsReport};
