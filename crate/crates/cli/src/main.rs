//! `satmag`: simulate, estimate, compare filter variants, query the field.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use satmag::geomag::{igrf_field_ned, load_igrf_coefficients, GeomagCoefficients};
use satmag::harness::csv::{export_comparison_csv, export_run_csv, export_truth_csv};
use satmag::harness::{
    compare_variants, compute_metrics, run_scenario, simulate_truth, Environment, HarnessError, ScenarioConfig,
};
use satmag::orbit::{GeoPosition, R_EARTH};

#[derive(Debug, Parser)]
#[command(
    name = "satmag",
    version,
    about = "Magnetometer-only attitude and residual magnetic moment estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the truth trajectory and magnetometer samples.
    Simulate(RunArgs),
    /// Simulate and run the configured filter.
    Estimate(RunArgs),
    /// Paired Monte Carlo comparison of the six- and nine-state filters.
    Compare(CompareArgs),
    /// Print the geomagnetic field (north, east, down, total) in nT.
    Igrf(IgrfArgs),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a scenario key, e.g. `filter.variant=six_state`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Scenario seed (first trial seed for `compare`).
    #[arg(long)]
    seed: Option<u64>,
    /// Only warnings and errors.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output CSV file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Per-pair CSV table.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

#[derive(Debug, Args)]
struct IgrfArgs {
    /// Geocentric latitude, deg.
    #[arg(long, allow_negative_numbers = true)]
    lat: f64,
    /// Longitude, deg east.
    #[arg(long, allow_negative_numbers = true)]
    lon: f64,
    /// Altitude above the equatorial radius (6378.137 km), km.
    #[arg(
        long,
        allow_negative_numbers = true,
        conflicts_with = "radius",
        default_value_t = 0.0
    )]
    alt: f64,
    /// Geocentric radius, km. Replaces `--alt`.
    #[arg(long)]
    radius: Option<f64>,
    /// Decimal year.
    #[arg(long, default_value_t = 2020.0)]
    date: f64,
    /// Coefficient table in the IGRF text layout; bundled IGRF-13 when omitted.
    #[arg(long, value_name = "PATH")]
    coeffs: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

fn init_logging(quiet: bool) {
    let level = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path, &args.overrides)?,
        None => ScenarioConfig::default().with_overrides(&args.overrides)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = load_scenario(&args.scenario)?;
    let env = Environment::new(&cfg)?;
    let truth = simulate_truth(&cfg, &env)?;
    export_truth_csv(&truth, &args.out)?;
    info!("wrote {} samples to {}", truth.states.len(), args.out.display());
    if !args.scenario.quiet {
        println!(
            "{} samples, measurement stream sha256 {}",
            truth.states.len(),
            truth.stream_hash()
        );
    }
    Ok(())
}

fn estimate(args: &RunArgs) -> Result<(), HarnessError> {
    let cfg = load_scenario(&args.scenario)?;
    let run = run_scenario(&cfg)?;
    export_run_csv(&run, &args.out)?;
    info!("wrote {} records to {}", run.len(), args.out.display());
    let m = compute_metrics(&run, cfg.convergence_threshold_deg)?;
    if !args.scenario.quiet {
        println!(
            "{}: attitude RMSE {:.3} deg (final third {:.3} deg), RMM RMSE {:.4} A m^2, mean |innovation| {:.3e} T, convergence {}",
            cfg.filter.variant.name(),
            m.attitude_rmse_deg,
            m.attitude_rmse_final_third_deg,
            m.rmm_rmse,
            m.mean_innovation,
            m.convergence_time.map_or("never".to_string(), |t| format!("{t} s")),
        );
    }
    Ok(())
}

fn compare(args: &CompareArgs) -> Result<(), HarnessError> {
    let cfg = load_scenario(&args.scenario)?;
    let c = compare_variants(&cfg, args.trials, cfg.seed)?;
    if let Some(out) = &args.out {
        export_comparison_csv(&c, out)?;
        info!("wrote {} pairs to {}", c.pairs.len(), out.display());
    }
    println!("{}", c.summary());
    Ok(())
}

fn load_table(path: &Path) -> Result<GeomagCoefficients, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    load_igrf_coefficients(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn igrf(args: &IgrfArgs) -> Result<(), HarnessError> {
    if !(-90.0..=90.0).contains(&args.lat) {
        return Err(HarnessError::Config(format!(
            "latitude {} deg outside [-90, 90]",
            args.lat
        )));
    }
    if !args.lon.is_finite() || !args.date.is_finite() {
        return Err(HarnessError::Config("longitude and date must be finite".into()));
    }
    let radius = args.radius.map_or(R_EARTH + args.alt * 1e3, |r| r * 1e3);
    let coeffs = match &args.coeffs {
        Some(path) => load_table(path)?,
        None => GeomagCoefficients::igrf13(),
    };
    let pos = GeoPosition {
        latitude: args.lat.to_radians(),
        longitude: args.lon.to_radians(),
        radius,
    };
    let b = igrf_field_ned(&coeffs, &pos, args.date).map_err(|e| HarnessError::Config(e.to_string()))?;
    println!("B_north {:.0} nT", b.x);
    println!("B_east  {:.0} nT", b.y);
    println!("B_down  {:.0} nT", b.z);
    println!("|B|     {:.0} nT", b.norm());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let quiet = match &cli.command {
        Command::Simulate(a) | Command::Estimate(a) => a.scenario.quiet,
        Command::Compare(a) => a.scenario.quiet,
        Command::Igrf(a) => a.quiet,
    };
    init_logging(quiet);
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
        Command::Igrf(a) => igrf(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
