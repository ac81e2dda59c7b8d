//! Operator front end for the simulator.
//!
//! Four subcommands: `simulate` runs one scenario file and writes its
//! artifacts, `sweep` evaluates a block-size x interval grid
//! (analytically or by simulation), `target` prints one retargeting
//! decision, and `propagation` exports the informed-fraction curve.
//! Every simulate/sweep output directory gets a `manifest.json` that
//! pins the config snapshot, seed, and code version needed to
//! reproduce the artifacts byte for byte.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use dmi_sim::config::{NetworkSection, ScenarioSpec};
use dmi_sim::dmi;
use dmi_sim::engine::run;
use dmi_sim::metrics::{audit, blocks_csv, report, report_json, timeline_csv, MetricsReport};
use dmi_sim::numerics::{fork_rate_from_interval, ForkRate, HashRate, Interval};
use dmi_sim::propagation::{informed_curve, uninformed_integral, NetworkParams};

#[derive(Parser)]
#[command(
    name = "dmi-sim",
    version,
    about = "Blockchain simulator with size-adaptive per-block retargeting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and write report.json, blocks.csv,
    /// timeline.csv, and manifest.json.
    Simulate(SimulateArgs),
    /// Evaluate a block-size x interval grid and write sweep.csv.
    Sweep(SweepArgs),
    /// Print one retargeting decision as JSON.
    Target(TargetArgs),
    /// Print the informed-fraction curve of one block as CSV.
    Propagation(PropagationArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "sim-out")]
    out: PathBuf,
    /// Also write trace.jsonl with one JSON object per block.
    #[arg(long)]
    trace: bool,
    /// Metric assertion like "tps>=3.15" or "fork_rate<=0.0125";
    /// repeatable. Any failure exits with code 2.
    #[arg(long = "assert")]
    assertions: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep file (.toml), see the bundled examples.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "sweep-out")]
    out: PathBuf,
}

#[derive(Args, Clone, Copy)]
struct NetworkFlags {
    #[arg(long, default_value_t = 10_000)]
    nodes: u32,
    #[arg(long, default_value_t = 8)]
    neighbor_degree: u32,
    /// Per-connection bandwidth in bytes per second.
    #[arg(long, default_value_t = 800_000.0)]
    bandwidth: f64,
    /// Per-hop latency in seconds.
    #[arg(long, default_value_t = 0.05)]
    delay: f64,
}

impl NetworkFlags {
    fn build(&self) -> Result<NetworkParams> {
        Ok(NetworkParams::new(
            self.nodes,
            self.neighbor_degree,
            self.bandwidth,
            self.delay,
        )?)
    }
}

#[derive(Args)]
struct TargetArgs {
    /// Size of the block just mined, in bytes.
    #[arg(long)]
    block_size: u64,
    /// Fork-rate budget.
    #[arg(long, default_value_t = 0.0095)]
    fork_limit: f64,
    /// Network hash rate in hashes per second.
    #[arg(long, default_value_t = 4.0e7)]
    hash_rate: f64,
    #[arg(long, default_value_t = 2.0)]
    min_interval: f64,
    #[arg(long, default_value_t = 3600.0)]
    max_interval: f64,
    #[command(flatten)]
    network: NetworkFlags,
}

#[derive(Args)]
struct PropagationArgs {
    /// Block size in bytes.
    #[arg(long)]
    block_size: u64,
    #[command(flatten)]
    network: NetworkFlags,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Target(args) => cmd_target(args),
        Command::Propagation(args) => cmd_propagation(args),
    }
}

/// Writes to stdout, exiting quietly when the consumer has closed the
/// pipe (for example `dmi-sim propagation ... | head`).
fn emit(args: std::fmt::Arguments) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_fmt(args) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing stdout: {e}");
        std::process::exit(1);
    }
}

/// Write through a temp file so a crash never leaves a half-written
/// artifact behind.
fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)
        .with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    code_version: String,
    seed: Option<u64>,
    config_path: String,
    /// Directory relative paths inside the config resolve against.
    config_dir: String,
    /// Snapshot of the spec as loaded (with any seed override applied).
    config: serde_json::Value,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
}

fn write_manifest(out_dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    write_atomic(&out_dir.join("manifest.json"), &text)
}

fn config_dir(config: &Path) -> PathBuf {
    let parent = config.parent().unwrap_or(Path::new("."));
    if parent.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        parent.to_path_buf()
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let mut spec = ScenarioSpec::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        spec.scenario.seed = seed;
    }
    let base_dir = config_dir(&args.config);
    let scenario = spec
        .resolve(&base_dir)
        .with_context(|| format!("resolving {}", args.config.display()))?;

    let result = run(&scenario)?;
    let metrics = report(&result, scenario.max_block_bytes);
    let conservation = audit(&result);

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_atomic(&args.out.join("report.json"), &report_json(&metrics, &conservation))?;
    write_atomic(&args.out.join("blocks.csv"), &blocks_csv(&result))?;
    write_atomic(&args.out.join("timeline.csv"), &timeline_csv(&result))?;
    let mut outputs = vec![
        "report.json".to_owned(),
        "blocks.csv".to_owned(),
        "timeline.csv".to_owned(),
    ];
    if args.trace {
        write_atomic(&args.out.join("trace.jsonl"), &trace_jsonl(&result.blocks))?;
        outputs.push("trace.jsonl".to_owned());
    }
    write_manifest(
        &args.out,
        &Manifest {
            command: "simulate".to_owned(),
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: Some(scenario.seed),
            config_path: args.config.display().to_string(),
            config_dir: base_dir.display().to_string(),
            config: serde_json::to_value(&spec)?,
            outputs,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    )?;

    emit(format_args!(
        "seed {}: {} canonical blocks, {} stale (fork rate {:.4}), {:.3} tps over {:.0} s\n",
        scenario.seed,
        metrics.canonical_blocks,
        metrics.stale_blocks,
        metrics.fork_rate,
        metrics.tps,
        metrics.elapsed_seconds,
    ));
    emit(format_args!("artifacts in {}\n", args.out.display()));

    let mut failed = false;
    for expr in &args.assertions {
        let (name, op, value) = parse_assertion(expr)?;
        let Some(actual) = metric_value(&metrics, &name) else {
            bail!("assertion references unknown metric {name:?}");
        };
        if compare(actual, &op, value) {
            emit(format_args!("assert ok: {expr} (actual {actual})\n"));
        } else {
            emit(format_args!("assert FAILED: {expr} (actual {actual})\n"));
            failed = true;
        }
    }
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn trace_jsonl(blocks: &[dmi_sim::engine::Block]) -> String {
    let mut out = String::new();
    for b in blocks {
        let line = serde_json::json!({
            "id": b.id,
            "parent_id": b.parent_id,
            "height": b.height,
            "time_seconds": b.time_seconds,
            "interval_seconds": b.interval_seconds,
            "size_bytes": b.size_bytes,
            "tx_count": b.tx_count,
            "total_fees": b.total_fees,
            "target_hex": b.target.to_hex(),
            "stale": b.stale,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

fn parse_assertion(expr: &str) -> Result<(String, String, f64)> {
    for op in ["<=", ">=", "==", "!=", "<", ">"] {
        if let Some((lhs, rhs)) = expr.split_once(op) {
            let value: f64 = rhs
                .trim()
                .parse()
                .with_context(|| format!("bad number in assertion {expr:?}"))?;
            return Ok((lhs.trim().to_owned(), op.to_owned(), value));
        }
    }
    bail!("assertion {expr:?} must look like <metric><op><value>, e.g. tps>=3.15")
}

fn metric_value(m: &MetricsReport, name: &str) -> Option<f64> {
    Some(match name {
        "canonical_blocks" => m.canonical_blocks as f64,
        "stale_blocks" => m.stale_blocks as f64,
        "fork_rate" => m.fork_rate,
        "tps" => m.tps,
        "confirmed_tx" => m.confirmed_tx as f64,
        "generated_tx" => m.generated_tx as f64,
        "pending_tx" => m.pending_tx as f64,
        "elapsed_seconds" => m.elapsed_seconds,
        "makespan_seconds" => m.makespan_seconds?,
        "mean_interval_seconds" => m.mean_interval_seconds,
        "mean_block_fill" => m.mean_block_fill,
        "fee_cv" => m.fee_cv,
        _ => return None,
    })
}

fn compare(actual: f64, op: &str, value: f64) -> bool {
    match op {
        "<=" => actual <= value,
        ">=" => actual >= value,
        "<" => actual < value,
        ">" => actual > value,
        "==" => actual == value,
        "!=" => actual != value,
        _ => unreachable!("parser only yields the ops above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SweepMode {
    /// Closed-form fork rate per grid point.
    Analytic,
    /// Full simulation per grid point; adds an observed column.
    Simulation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum AxisSpec {
    List(Vec<f64>),
    Range { min: f64, max: f64, steps: u32 },
}

impl AxisSpec {
    fn values(&self, what: &str) -> Result<Vec<f64>> {
        let values = match self {
            AxisSpec::List(v) => v.clone(),
            AxisSpec::Range { min, max, steps } => {
                if *steps == 0 {
                    bail!("{what}: steps must be at least 1");
                }
                if *steps == 1 {
                    vec![*min]
                } else {
                    (0..*steps)
                        .map(|i| min + (max - min) * f64::from(i) / f64::from(steps - 1))
                        .collect()
                }
            }
        };
        if values.is_empty() {
            bail!("{what}: the grid axis is empty");
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    block_size_bytes: AxisSpec,
    interval_seconds: AxisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    mode: SweepMode,
    /// Network for analytic evaluation (defaults to the reference
    /// settings). Simulation points use the base config's network.
    #[serde(default)]
    network: NetworkSection,
    /// Scenario file the simulation points start from.
    #[serde(default)]
    base_config: Option<PathBuf>,
    grid: GridSection,
}

fn analytic_fork(network: &NetworkParams, size_bytes: u64, interval_seconds: f64) -> Result<f64> {
    let w = uninformed_integral(&informed_curve(size_bytes, network));
    if w.seconds() == 0.0 {
        return Ok(0.0);
    }
    let interval = Interval::new(interval_seconds)?;
    Ok(fork_rate_from_interval(interval, w)?.probability())
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let started = Instant::now();
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let sweep: SweepFile = toml::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;

    let sizes: Vec<u64> = sweep
        .grid
        .block_size_bytes
        .values("grid.block_size_bytes")?
        .into_iter()
        .map(|v| v.round() as u64)
        .collect();
    let intervals = sweep.grid.interval_seconds.values("grid.interval_seconds")?;
    let points: Vec<(usize, u64, f64)> = sizes
        .iter()
        .flat_map(|s| intervals.iter().map(|i| (*s, *i)))
        .enumerate()
        .map(|(idx, (s, i))| (idx, s, i))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads()?)
        .build()
        .context("building sweep worker pool")?;

    let csv = match sweep.mode {
        SweepMode::Analytic => {
            let network = NetworkParams::new(
                sweep.network.nodes,
                sweep.network.neighbor_degree,
                sweep.network.bandwidth_bytes_per_sec,
                sweep.network.delay_seconds,
            )?;
            let rows: Vec<Result<String>> = pool.install(|| {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|(_, size, interval)| {
                        let fork = analytic_fork(&network, *size, *interval)?;
                        Ok(format!("{size},{interval},{fork}\n"))
                    })
                    .collect()
            });
            let mut out = String::from("size_bytes,interval_seconds,analytic_fork_rate\n");
            for row in rows {
                out.push_str(&row?);
            }
            out
        }
        SweepMode::Simulation => {
            let Some(base_path) = &sweep.base_config else {
                bail!("simulation sweeps need base_config pointing at a scenario file");
            };
            let base_path = config_dir(&args.config).join(base_path);
            let base = ScenarioSpec::load(&base_path)
                .with_context(|| format!("loading {}", base_path.display()))?;
            let base_dir = config_dir(&base_path);
            let rows: Vec<Result<String>> = pool.install(|| {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|(idx, size, interval)| {
                        let mut spec = base.clone();
                        spec.chain.max_block_bytes = *size;
                        spec.chain.baseline_interval_seconds = *interval;
                        spec.scenario.seed = base.scenario.seed + *idx as u64;
                        let scenario = spec.resolve(&base_dir)?;
                        let result = run(&scenario)?;
                        let metrics = report(&result, scenario.max_block_bytes);
                        let analytic = analytic_fork(&scenario.network, *size, *interval)?;
                        Ok(format!(
                            "{size},{interval},{analytic},{}\n",
                            metrics.fork_rate
                        ))
                    })
                    .collect()
            });
            let mut out = String::from(
                "size_bytes,interval_seconds,analytic_fork_rate,observed_fork_rate\n",
            );
            for row in rows {
                out.push_str(&row?);
            }
            out
        }
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_atomic(&args.out.join("sweep.csv"), &csv)?;
    write_manifest(
        &args.out,
        &Manifest {
            command: "sweep".to_owned(),
            code_version: env!("CARGO_PKG_VERSION").to_owned(),
            seed: None,
            config_path: args.config.display().to_string(),
            config_dir: config_dir(&args.config).display().to_string(),
            config: serde_json::to_value(&sweep)?,
            outputs: vec!["sweep.csv".to_owned()],
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    )?;
    emit(format_args!(
        "{} grid points -> {}\n",
        points.len(),
        args.out.join("sweep.csv").display()
    ));
    Ok(ExitCode::SUCCESS)
}

fn sweep_threads() -> Result<usize> {
    match std::env::var("DMI_SIM_THREADS") {
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .with_context(|| format!("DMI_SIM_THREADS={raw:?} is not a thread count"))?;
            if n == 0 {
                bail!("DMI_SIM_THREADS must be at least 1");
            }
            Ok(n)
        }
        // 0 lets the pool pick the number of cores.
        Err(_) => Ok(0),
    }
}

fn cmd_target(args: TargetArgs) -> Result<ExitCode> {
    let cfg = dmi::DmiConfig::new(
        ForkRate::new(args.fork_limit)?,
        HashRate::new(args.hash_rate)?,
        args.network.build()?,
        Interval::new(args.min_interval)?,
        Interval::new(args.max_interval)?,
    )?;
    let decision = dmi::evaluate(args.block_size, &cfg)?;
    let out = serde_json::json!({
        "target_hex": decision.target.to_hex(),
        "interval_seconds": decision.interval.seconds(),
        "uninformed_integral_seconds": decision.uninformed_integral.seconds(),
        "interval_clamp": match decision.interval_clamp {
            None => serde_json::Value::Null,
            Some(dmi::IntervalClamp::Min) => "min".into(),
            Some(dmi::IntervalClamp::Max) => "max".into(),
        },
        "target_clamped": decision.target_clamped,
    });
    emit(format_args!("{}\n", serde_json::to_string_pretty(&out)?));
    Ok(ExitCode::SUCCESS)
}

fn cmd_propagation(args: PropagationArgs) -> Result<ExitCode> {
    let network = args.network.build()?;
    let curve = informed_curve(args.block_size, &network);
    let w = uninformed_integral(&curve);
    let n = f64::from(curve.node_count());
    let hop = curve.wave_interval_seconds();
    let mut out = String::from("t_seconds,informed_fraction\n");
    for (k, count) in curve.informed_counts().iter().enumerate() {
        out.push_str(&format!("{},{}\n", k as f64 * hop, count / n));
    }
    out.push_str(&format!("# uninformed_integral_seconds,{}\n", w.seconds()));
    emit(format_args!("{out}"));
    Ok(ExitCode::SUCCESS)
}
