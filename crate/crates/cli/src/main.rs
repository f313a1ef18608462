//! Command-line front end: config ingestion, experiment commands,
//! deterministic seeding, CSV/JSON export.
//!
//! Seeding scheme: each command derives its RNG stream as
//! `master_seed XOR fnv1a64(component_name)` (components: `"simulate"`,
//! `"convergence"`, `"batch/sigma_q=<value>"`), so re-running a single
//! command reproduces its outputs without replaying the rest of a study.
//!
//! Exit codes: 0 success (mission timeouts are experimental outcomes, not
//! failures), 2 usage or config error, 1 internal error.

use std::fmt::Write as FmtWrite;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gyrotrack::crlb::{self, CrlbScenario};
use gyrotrack::planner::PlannerMode;
use gyrotrack::sim::{
    self, BatchOptions, BatchSummary, Method, PatternSpec, ScenarioConfig,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "gyrotrack", version, about = "RF-source localization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spin-rate information sweep and per-rate bound traces
    CrlbSweep(CrlbSweepArgs),
    /// Run one mission and export its artifacts
    Simulate(SimulateArgs),
    /// Monte Carlo comparison across methods and drift levels
    Batch(BatchArgs),
    /// Fixed-transect belief-convergence study over spin rates
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 1 km^2, five wandering sources, spinning receiver
    Desk,
    /// Slower vehicle, noisier channel, four sources
    Field,
    /// Single static source on a straight low-speed flyby
    Transect,
}

impl Preset {
    fn config(self) -> ScenarioConfig {
        match self {
            Preset::Desk => ScenarioConfig::desk(),
            Preset::Field => ScenarioConfig::field(),
            Preset::Transect => ScenarioConfig::transect(),
        }
    }
}

#[derive(Args)]
struct IoArgs {
    /// JSON scenario config; omitted fields take their defaults
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario preset
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Master seed; every stream in the run derives from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing)
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overwrite existing output files
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct CrlbSweepArgs {
    /// JSON sweep config; omitted fields take the reference orbit values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    force: bool,
    /// Override the number of 1 Hz samples per evaluation
    #[arg(long)]
    steps: Option<usize>,
    /// Swept spin rates, deg/s (comma separated)
    #[arg(long, value_delimiter = ',')]
    angles: Option<Vec<f64>>,
    /// Spin rates whose full bound trace is exported, deg/s
    #[arg(long, value_delimiter = ',')]
    zetas: Option<Vec<f64>>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Measurement method override
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Planner mode override
    #[arg(long, value_parser = parse_planner)]
    planner: Option<PlannerMode>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Methods to compare (comma separated); default is the config's method
    #[arg(long, alias = "methods", value_delimiter = ',', value_parser = parse_method)]
    method: Option<Vec<Method>>,
    /// Planner mode override
    #[arg(long, value_parser = parse_planner)]
    planner: Option<PlannerMode>,
    /// Ground-truth tracks (randomized source layouts)
    #[arg(long, default_value_t = 10)]
    tracks: usize,
    /// Receiver-noise runs per track
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Source drift levels to sweep, m per step (comma separated)
    #[arg(long = "sigma-q", value_delimiter = ',')]
    sigma_q: Option<Vec<f64>>,
    /// Worker threads; 1 (the default) is bit-reproducible
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Spin rates to trace, deg/s (comma separated)
    #[arg(long, value_delimiter = ',')]
    zetas: Option<Vec<f64>>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn parse_planner(s: &str) -> Result<PlannerMode, String> {
    match s {
        "discrete" => Ok(PlannerMode::Discrete),
        "continuous" => Ok(PlannerMode::Continuous),
        other => Err(format!(
            "unknown planner {other:?}; expected discrete or continuous"
        )),
    }
}

enum Fail {
    Usage(String),
    Internal(String),
}

impl Fail {
    fn usage(e: impl std::fmt::Display) -> Self {
        Fail::Usage(e.to_string())
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Fail::Internal(e.to_string())
    }
}

type CliResult<T> = Result<T, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::CrlbSweep(args) => cmd_crlb_sweep(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Convergence(args) => cmd_convergence(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Fail::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// FNV-1a, the hash behind config fingerprints and stream derivation.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn derive_seed(master: u64, component: &str) -> u64 {
    master ^ fnv1a64(component.as_bytes())
}

/// The `# ...` line embedded at the top of every CSV output.
fn manifest_line(seed: u64, config_hash: u64) -> String {
    format!("# tool_version={TOOL_VERSION} seed={seed} config_hash={config_hash:016x}\n")
}

/// Identity of one invocation, embedded in JSON outputs.
#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    command: &'static str,
    config_path: Option<String>,
    seed: u64,
    config_hash: String,
    output_dir: String,
}

impl RunManifest {
    fn new(
        command: &'static str,
        config_path: Option<&Path>,
        seed: u64,
        config_hash: u64,
        out: &Path,
    ) -> Self {
        RunManifest {
            tool_version: TOOL_VERSION,
            command,
            config_path: config_path.map(|p| p.display().to_string()),
            seed,
            config_hash: format!("{config_hash:016x}"),
            output_dir: out.display().to_string(),
        }
    }
}

fn load_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Fail::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Fail::Usage(format!(
            "malformed config {} (line {}, column {}): {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn scenario_from(io: &IoArgs, fallback: Preset) -> CliResult<ScenarioConfig> {
    let cfg = match (&io.config, io.preset) {
        (Some(path), _) => load_json_config(path)?,
        (None, Some(preset)) => preset.config(),
        (None, None) => fallback.config(),
    };
    Ok(cfg)
}

/// Serialize the effective config and fingerprint it.
fn hash_config<T: Serialize>(cfg: &T) -> CliResult<u64> {
    let canon = serde_json::to_string(cfg)
        .map_err(|e| Fail::internal(format!("config serialization: {e}")))?;
    Ok(fnv1a64(canon.as_bytes()))
}

/// Write one output file, refusing to clobber without --force.
fn write_output(path: &Path, contents: &[u8], force: bool) -> CliResult<()> {
    if path.exists() && !force {
        return Err(Fail::Usage(format!(
            "{} already exists; pass --force to overwrite",
            path.display()
        )));
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| Fail::internal(format!("creating {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| Fail::internal(format!("writing {}: {e}", path.display())))
}

// ---------------------------------------------------------------- crlb-sweep

/// Reference-orbit description for the bound analysis; rates in deg/s so the
/// file reads like the experiment tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct SweepConfig {
    orbit_radius_m: f64,
    revolve_rate_deg_s: f64,
    spin_rate_deg_s: f64,
    sample_period_s: f64,
    noise_std_db: f64,
    steps: usize,
    pattern: PatternSpec,
    /// Inter-antenna difference pattern of the two-antenna reference system.
    dual_pattern: PatternSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            orbit_radius_m: 50.0,
            revolve_rate_deg_s: 3.6,
            spin_rate_deg_s: 40.0,
            sample_period_s: 1.0,
            noise_std_db: 4.0,
            steps: 10_000,
            pattern: PatternSpec::Parametric {
                boresight_db: 6.15,
                front_to_back_db: 10.0,
            },
            dual_pattern: PatternSpec::Parametric {
                boresight_db: 2.15,
                front_to_back_db: 3.0,
            },
        }
    }
}

impl SweepConfig {
    fn scenario(&self) -> CliResult<CrlbScenario<f64>> {
        let scenario = CrlbScenario {
            orbit_radius_m: self.orbit_radius_m,
            revolve_rate_rad_s: self.revolve_rate_deg_s.to_radians(),
            spin_rate_rad_s: self.spin_rate_deg_s.to_radians(),
            sample_period_s: self.sample_period_s,
            noise_std_db: self.noise_std_db,
            pattern: self.pattern.build().map_err(Fail::usage)?,
            steps: self.steps,
        };
        scenario.validate().map_err(Fail::usage)?;
        Ok(scenario)
    }
}

fn cmd_crlb_sweep(args: CrlbSweepArgs) -> CliResult<()> {
    let mut cfg: SweepConfig = match &args.config {
        Some(path) => load_json_config(path)?,
        None => SweepConfig::default(),
    };
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    let scenario = cfg.scenario()?;
    let dual_pattern = cfg.dual_pattern.build().map_err(Fail::usage)?;
    let hash = hash_config(&cfg)?;
    let header = manifest_line(args.seed, hash);

    let angles: Vec<f64> = args
        .angles
        .unwrap_or_else(|| (0..=36).map(|k| k as f64 * 5.0).collect());
    if angles.is_empty() {
        return Err(Fail::Usage("empty angle list".into()));
    }
    let zetas: Vec<f64> = args
        .zetas
        .unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
    if zetas.is_empty() {
        return Err(Fail::Usage("empty zeta list".into()));
    }

    let rows = crlb::sweep_spin_rates(&scenario, &angles).map_err(Fail::usage)?;
    let dual = crlb::dual_antenna_final(&scenario, &dual_pattern).map_err(Fail::usage)?;
    let dual_cell = dual
        .map(|d| d.to_string())
        .unwrap_or_else(|| "singular".into());
    let mut sweep = header.clone();
    sweep.push_str("angle_deg,det_crlb,dual_antenna_det\n");
    for (angle, det) in &rows {
        let cell = det
            .map(|d| d.to_string())
            .unwrap_or_else(|| "singular".into());
        let _ = writeln!(sweep, "{angle},{cell},{dual_cell}");
    }
    write_output(&args.out.join("crlb_sweep.csv"), sweep.as_bytes(), args.force)?;

    let mut trace_csv = header;
    trace_csv.push_str("zeta_deg_s,step,det_crlb\n");
    for &zeta in &zetas {
        let z_scenario = CrlbScenario {
            spin_rate_rad_s: zeta.to_radians(),
            pattern: scenario.pattern.clone(),
            ..scenario
        };
        let trace = crlb::crlb_det_trace(&z_scenario).map_err(Fail::usage)?;
        for (i, det) in trace.iter().enumerate() {
            let cell = det
                .map(|d| d.to_string())
                .unwrap_or_else(|| "singular".into());
            let _ = writeln!(trace_csv, "{zeta},{},{cell}", i + 1);
        }
    }
    write_output(
        &args.out.join("crlb_trace.csv"),
        trace_csv.as_bytes(),
        args.force,
    )?;

    println!(
        "crlb-sweep: {} angles, {} traces -> {}",
        angles.len(),
        zetas.len(),
        args.out.display()
    );
    Ok(())
}

// ------------------------------------------------------------------ simulate

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let mut cfg = scenario_from(&args.io, Preset::Desk)?;
    if let Some(method) = args.method {
        cfg.method = method;
    }
    if let Some(mode) = args.planner {
        cfg.planner.mode = mode;
    }
    cfg.validate().map_err(Fail::usage)?;
    let hash = hash_config(&cfg)?;
    let header = manifest_line(args.io.seed, hash);
    let seed = derive_seed(args.io.seed, "simulate");

    let result = sim::run_mission(&cfg, seed).map_err(Fail::internal)?;

    let mut trajectory = header.clone().into_bytes();
    sim::write_trajectory_csv(&mut trajectory, &result.trajectory)
        .map_err(Fail::internal)?;
    write_output(&args.io.out.join("trajectory.csv"), &trajectory, args.io.force)?;

    let mut beliefs = header.into_bytes();
    sim::write_det_traces_csv(&mut beliefs, &result.det_traces).map_err(Fail::internal)?;
    write_output(&args.io.out.join("belief_trace.csv"), &beliefs, args.io.force)?;

    let manifest = RunManifest::new(
        "simulate",
        args.io.config.as_deref(),
        args.io.seed,
        hash,
        &args.io.out,
    );
    #[derive(Serialize)]
    struct Summary<'a> {
        manifest: &'a RunManifest,
        result: &'a sim::MissionResult,
    }
    let json = serde_json::to_string_pretty(&Summary {
        manifest: &manifest,
        result: &result,
    })
    .map_err(|e| Fail::internal(format!("summary serialization: {e}")))?;
    write_output(
        &args.io.out.join("summary.json"),
        format!("{json}\n").as_bytes(),
        args.io.force,
    )?;

    let status = if result.timed_out { "timeout" } else { "complete" };
    println!(
        "simulate [{}]: {} in {} s, {}/{} sources localized -> {}",
        cfg.method.name(),
        status,
        result.total_time_s,
        result
            .per_source
            .iter()
            .filter(|s| s.localization_time_s.is_some())
            .count(),
        result.per_source.len(),
        args.io.out.display()
    );
    Ok(())
}

// --------------------------------------------------------------------- batch

fn format_sigma(v: f64) -> String {
    // 2.0 -> "2", 1.5 -> "1.5": stable tokens for filenames and components.
    let s = format!("{v}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

fn cmd_batch(args: BatchArgs) -> CliResult<()> {
    let mut cfg = scenario_from(&args.io, Preset::Desk)?;
    if let Some(mode) = args.planner {
        cfg.planner.mode = mode;
    }
    cfg.validate().map_err(Fail::usage)?;
    if args.tracks == 0 || args.runs == 0 {
        return Err(Fail::Usage("--tracks and --runs must be at least 1".into()));
    }
    let methods = match &args.method {
        Some(list) if list.is_empty() => {
            return Err(Fail::Usage("empty method list".into()))
        }
        Some(list) => list.clone(),
        None => vec![cfg.method],
    };
    let sigma_qs = match &args.sigma_q {
        Some(list) if list.is_empty() => {
            return Err(Fail::Usage("empty sigma-q list".into()))
        }
        Some(list) => list.clone(),
        None => vec![cfg.source_sigma_q_m],
    };

    let hash = hash_config(&cfg)?;
    let header = manifest_line(args.io.seed, hash);
    let options = BatchOptions {
        n_tracks: args.tracks,
        runs_per_track: args.runs,
        threads: args.jobs,
    };

    let mut summary_csv = header.clone();
    summary_csv.push_str(
        "sigma_q_m,method,planner,n_tracks,runs_per_track,mean_total_time_s,\
         std_total_time_s,mean_error_m,std_error_m,timeout_rate,mean_detection_rate\n",
    );
    let planner_name = match cfg.planner.mode {
        PlannerMode::Discrete => "discrete",
        PlannerMode::Continuous => "continuous",
    };

    for &sigma_q in &sigma_qs {
        let component = format!("batch/sigma_q={}", format_sigma(sigma_q));
        let block_seed = derive_seed(args.io.seed, &component);
        let mut block_cfg = cfg.clone();
        block_cfg.source_sigma_q_m = sigma_q;

        let mut runs_csv = header.clone().into_bytes();
        sim::write_runs_header(&mut runs_csv).map_err(Fail::internal)?;
        let mut block_summaries: Vec<BatchSummary> = Vec::new();

        for &method in &methods {
            let mut m_cfg = block_cfg.clone();
            m_cfg.method = method;
            // The same block seed across methods pairs them on identical
            // ground-truth tracks and receiver streams.
            let summary = sim::run_monte_carlo(&m_cfg, &options, block_seed).map_err(|e| {
                Fail::Internal(format!(
                    "batch aborted (method {}, sigma_q {}, seed {block_seed}): {e}",
                    method.name(),
                    format_sigma(sigma_q)
                ))
            })?;
            sim::write_runs_rows(&mut runs_csv, &summary, cfg.planner.mode)
                .map_err(Fail::internal)?;
            // No run localized anything -> error stats are undefined; the
            // cells stay empty rather than carrying NaN into the CSV.
            let finite = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
            let _ = writeln!(
                summary_csv,
                "{},{},{},{},{},{},{},{},{},{},{}",
                format_sigma(sigma_q),
                method.name(),
                planner_name,
                summary.n_tracks,
                summary.runs_per_track,
                summary.mean_total_time_s,
                summary.std_total_time_s,
                finite(summary.mean_error_m),
                finite(summary.std_error_m),
                summary.timeout_rate,
                summary.mean_detection_rate
            );
            block_summaries.push(summary);
        }

        let runs_name = if sigma_qs.len() == 1 {
            "runs.csv".to_string()
        } else {
            format!("runs_sigmaq{}.csv", format_sigma(sigma_q))
        };
        write_output(&args.io.out.join(runs_name), &runs_csv, args.io.force)?;

        println!(
            "sigma_q = {} m ({} tracks x {} runs)",
            format_sigma(sigma_q),
            args.tracks,
            args.runs
        );
        println!(
            "{:<16} {:>12} {:>11} {:>11} {:>10} {:>13} {:>11}",
            "method", "mean_time_s", "std_time_s", "mean_err_m", "std_err_m", "timeout_rate",
            "detect_rate"
        );
        for summary in &block_summaries {
            let cell = |v: f64| {
                if v.is_finite() {
                    format!("{v:.1}")
                } else {
                    "-".to_string()
                }
            };
            println!(
                "{:<16} {:>12.1} {:>11.1} {:>11} {:>10} {:>13.2} {:>11.3}",
                summary.method.name(),
                summary.mean_total_time_s,
                summary.std_total_time_s,
                cell(summary.mean_error_m),
                cell(summary.std_error_m),
                summary.timeout_rate,
                summary.mean_detection_rate
            );
        }
    }

    write_output(
        &args.io.out.join("batch_summary.csv"),
        summary_csv.as_bytes(),
        args.io.force,
    )?;
    Ok(())
}

// --------------------------------------------------------------- convergence

fn cmd_convergence(args: ConvergenceArgs) -> CliResult<()> {
    let cfg = scenario_from(&args.io, Preset::Transect)?;
    cfg.validate().map_err(Fail::usage)?;
    let zetas: Vec<f64> = args
        .zetas
        .unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
    if zetas.is_empty() {
        return Err(Fail::Usage("empty zeta list".into()));
    }
    let hash = hash_config(&cfg)?;
    let seed = derive_seed(args.io.seed, "convergence");

    let traces =
        sim::rotation_speed_convergence(&cfg, &zetas, seed).map_err(Fail::usage)?;

    let mut csv = manifest_line(args.io.seed, hash).into_bytes();
    sim::write_convergence_csv(&mut csv, &traces).map_err(Fail::internal)?;
    write_output(&args.io.out.join("convergence.csv"), &csv, args.io.force)?;

    for trace in &traces {
        match trace.time_to_threshold_s {
            Some(t) => println!("zeta {:>5} deg/s: crossed threshold at {t} s", trace.zeta_deg_s),
            None => println!("zeta {:>5} deg/s: never crossed threshold", trace.zeta_deg_s),
        }
    }
    Ok(())
}
