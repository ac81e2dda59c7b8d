//! Scenario files: TOML or JSON descriptions of a run, resolved into
//! an engine [`Scenario`].
//!
//! Every section and field is optional; omitted values fall back to
//! the reference settings (10,000 nodes of degree 8 at 800 kB/s,
//! 500-byte transactions, 1 MB blocks, a 600 s baseline interval at
//! 4e7 hashes/s, a 0.95% fork budget, a 16,000-transaction backlog).
//! Relative file paths are resolved against the config file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dmi::{DmiConfig, DmiError};
use crate::dts::{AssemblyPriority, DtsConfig, DtsError};
use crate::engine::{
    calibrate_network, AssemblyPolicy, EngineError, MiningPolicy, RunUntil, Scenario,
};
use crate::numerics::{ForkRate, HashRate, Interval, NumericsError};
use crate::propagation::{NetworkParams, PropagationError};
use crate::workload::{
    bundled_diurnal_profile, load_fee_file, load_profile, FeeSampler, FeeSource, HourlyProfile,
    WorkloadError,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Dts(#[from] DtsError),
    #[error(transparent)]
    Dmi(#[from] DmiError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiningModeSpec {
    Fixed,
    Dmi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyModeSpec {
    Standard,
    Dts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunUntilSpec {
    Duration,
    Drained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_mode")]
    pub mode: MiningModeSpec,
    #[serde(default = "default_assembly")]
    pub assembly: AssemblyModeSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_seconds: f64,
    #[serde(default = "default_run_until")]
    pub run_until: RunUntilSpec,
}

fn default_mode() -> MiningModeSpec {
    MiningModeSpec::Fixed
}
fn default_assembly() -> AssemblyModeSpec {
    AssemblyModeSpec::Standard
}
fn default_seed() -> u64 {
    42
}
fn default_duration() -> f64 {
    86_400.0
}
fn default_run_until() -> RunUntilSpec {
    RunUntilSpec::Duration
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            mode: default_mode(),
            assembly: default_assembly(),
            seed: default_seed(),
            duration_seconds: default_duration(),
            run_until: default_run_until(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(default = "default_nodes")]
    pub nodes: u32,
    #[serde(default = "default_degree")]
    pub neighbor_degree: u32,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bytes_per_sec: f64,
    #[serde(default = "default_delay")]
    pub delay_seconds: f64,
}

fn default_nodes() -> u32 {
    10_000
}
fn default_degree() -> u32 {
    8
}
fn default_bandwidth() -> f64 {
    800_000.0
}
fn default_delay() -> f64 {
    0.05
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            nodes: default_nodes(),
            neighbor_degree: default_degree(),
            bandwidth_bytes_per_sec: default_bandwidth(),
            delay_seconds: default_delay(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default = "default_max_block_bytes")]
    pub max_block_bytes: u64,
    /// Expected interval under fixed-target mining.
    #[serde(default = "default_baseline_interval")]
    pub baseline_interval_seconds: f64,
    #[serde(default = "default_hash_rate")]
    pub hash_rate: f64,
}

fn default_max_block_bytes() -> u64 {
    1_000_000
}
fn default_baseline_interval() -> f64 {
    600.0
}
fn default_hash_rate() -> f64 {
    4.0e7
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            max_block_bytes: default_max_block_bytes(),
            baseline_interval_seconds: default_baseline_interval(),
            hash_rate: default_hash_rate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmiSection {
    #[serde(default = "default_fork_limit")]
    pub fork_limit: f64,
    #[serde(default = "default_min_interval")]
    pub min_interval_seconds: f64,
    #[serde(default = "default_max_interval")]
    pub max_interval_seconds: f64,
}

fn default_fork_limit() -> f64 {
    0.0095
}
fn default_min_interval() -> f64 {
    2.0
}
fn default_max_interval() -> f64 {
    3600.0
}

impl Default for DmiSection {
    fn default() -> Self {
        DmiSection {
            fork_limit: default_fork_limit(),
            min_interval_seconds: default_min_interval(),
            max_interval_seconds: default_max_interval(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtsSection {
    #[serde(default = "default_weibull_scale")]
    pub weibull_scale: f64,
    #[serde(default = "default_weibull_shape")]
    pub weibull_shape: f64,
    #[serde(default = "default_max_space")]
    pub max_space_per_tx: u32,
    #[serde(default = "default_leaf_capacity")]
    pub leaf_capacity: u32,
    #[serde(default = "default_priority")]
    pub priority: AssemblyPriority,
    #[serde(default)]
    pub designated_small_space: bool,
}

fn default_weibull_scale() -> f64 {
    6.8
}
fn default_weibull_shape() -> f64 {
    1.0
}
fn default_max_space() -> u32 {
    80
}
fn default_leaf_capacity() -> u32 {
    2048
}
fn default_priority() -> AssemblyPriority {
    AssemblyPriority::TimeBased
}

impl Default for DtsSection {
    fn default() -> Self {
        DtsSection {
            weibull_scale: default_weibull_scale(),
            weibull_shape: default_weibull_shape(),
            max_space_per_tx: default_max_space(),
            leaf_capacity: default_leaf_capacity(),
            priority: default_priority(),
            designated_small_space: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// The bundled synthetic retail diurnal profile.
    BundledDiurnal,
    ConstantHourly { per_hour: u64 },
    Csv { path: PathBuf },
    /// No arrivals at all (backlog-only workloads).
    None,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::BundledDiurnal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeeSpec {
    Constant { value: f64 },
    Lognormal { mu: f64, sigma: f64 },
    CsvReplay { path: PathBuf },
}

impl Default for FeeSpec {
    fn default() -> Self {
        FeeSpec::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    #[serde(default = "default_backlog")]
    pub initial_backlog: u32,
    #[serde(default = "default_tx_size")]
    pub tx_size_bytes: u32,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub fees: FeeSpec,
}

fn default_backlog() -> u32 {
    16_000
}
fn default_tx_size() -> u32 {
    500
}

impl Default for WorkloadSection {
    fn default() -> Self {
        WorkloadSection {
            initial_backlog: default_backlog(),
            tx_size_bytes: default_tx_size(),
            profile: ProfileSpec::default(),
            fees: FeeSpec::default(),
        }
    }
}

/// When present, the network delay is recalibrated before the run so
/// blocks of the given size mined at the given interval fork at the
/// given analytic rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    pub target_fork_rate: f64,
    pub block_size_bytes: u64,
    pub interval_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub chain: ChainSection,
    #[serde(default)]
    pub dmi: DmiSection,
    #[serde(default)]
    pub dts: DtsSection,
    #[serde(default)]
    pub workload: WorkloadSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<inline toml>".to_owned(),
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<inline json>".to_owned(),
            message: e.to_string(),
        })
    }

    /// Load a spec from a `.toml` or `.json` file (decided by
    /// extension; anything but `.json` parses as TOML).
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    /// Build the runnable scenario. File paths inside the spec are
    /// resolved against `base_dir`; validation that the engine would
    /// only hit mid-run happens here, up front.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario, ConfigError> {
        let mut network = NetworkParams::new(
            self.network.nodes,
            self.network.neighbor_degree,
            self.network.bandwidth_bytes_per_sec,
            self.network.delay_seconds,
        )?;
        if let Some(c) = &self.calibration {
            network = calibrate_network(
                &network,
                c.target_fork_rate,
                c.block_size_bytes,
                c.interval_seconds,
            )?;
        }

        let hash_rate = HashRate::new(self.chain.hash_rate)?;
        let mining = match self.scenario.mode {
            MiningModeSpec::Fixed => {
                Interval::new(self.chain.baseline_interval_seconds)?;
                MiningPolicy::FixedInterval {
                    interval_seconds: self.chain.baseline_interval_seconds,
                }
            }
            MiningModeSpec::Dmi => {
                // Constructed once here so bad bounds fail at load time.
                DmiConfig::new(
                    ForkRate::new(self.dmi.fork_limit)?,
                    hash_rate,
                    network.clone(),
                    Interval::new(self.dmi.min_interval_seconds)?,
                    Interval::new(self.dmi.max_interval_seconds)?,
                )?;
                MiningPolicy::DynamicInterval {
                    fork_limit: self.dmi.fork_limit,
                    min_interval_seconds: self.dmi.min_interval_seconds,
                    max_interval_seconds: self.dmi.max_interval_seconds,
                }
            }
        };

        let assembly = match self.scenario.assembly {
            AssemblyModeSpec::Standard => AssemblyPolicy::Standard,
            AssemblyModeSpec::Dts => AssemblyPolicy::FeeWeighted(DtsConfig::new(
                self.dts.weibull_scale,
                self.dts.weibull_shape,
                self.dts.max_space_per_tx,
                self.dts.leaf_capacity,
                self.dts.priority,
                self.dts.designated_small_space,
            )?),
        };

        let profile = match &self.workload.profile {
            ProfileSpec::BundledDiurnal => bundled_diurnal_profile(),
            ProfileSpec::ConstantHourly { per_hour } => HourlyProfile::constant(*per_hour),
            ProfileSpec::Csv { path } => load_profile(&base_dir.join(path))?,
            ProfileSpec::None => HourlyProfile::constant(0),
        };
        let fees = match &self.workload.fees {
            FeeSpec::Constant { value } => FeeSource::Constant(*value),
            FeeSpec::Lognormal { mu, sigma } => FeeSource::LogNormal {
                mu: *mu,
                sigma: *sigma,
            },
            FeeSpec::CsvReplay { path } => FeeSource::Replay(load_fee_file(&base_dir.join(path))?),
        };
        FeeSampler::new(&fees, 0)?;

        Ok(Scenario {
            seed: self.scenario.seed,
            network,
            hash_rate_hashes_per_sec: self.chain.hash_rate,
            mining,
            assembly,
            max_block_bytes: self.chain.max_block_bytes,
            tx_size_bytes: self.workload.tx_size_bytes,
            initial_backlog: self.workload.initial_backlog,
            profile,
            fees,
            duration_seconds: self.scenario.duration_seconds,
            run_until: match self.scenario.run_until {
                RunUntilSpec::Duration => RunUntil::Duration,
                RunUntilSpec::Drained => RunUntil::WorkloadDrained,
            },
        })
    }
}
