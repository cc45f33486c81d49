//! Command-line entry point wiring the pipeline: simulate, fit, analyze,
//! and the combined two-window wave workflow.
//!
//! Exit codes: 0 success, 1 usage/config, 2 data, 3 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use epicsp::analyzer;
use epicsp::fit::{self, FitError, WindowFit};
use epicsp::integrate::{integrate, IntegrateError, Trajectory};
use epicsp::io::{self, RunConfig};
use epicsp::model::{ModelParams, StateVector};

#[derive(Parser)]
#[command(name = "epicsp", version, about = "SEInsRD outbreak timescale analysis")]
struct Cli {
    /// Run configuration file (flat `key = value`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the fit restarts
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (overrides the config's out_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured initial state and write actives.csv
    Simulate,
    /// Fit the free parameters to an observation window, write fit.json
    Fit {
        /// Observation CSV (date,active_cases,cumulative_deaths[,exposed])
        #[arg(long)]
        obs: PathBuf,
        /// Fit window as day offsets `<start:end>` (defaults to window_a)
        #[arg(long)]
        window: Option<String>,
    },
    /// Analyze a trajectory and write report.json plus plot CSVs
    Analyze {
        /// Take parameters and initial state from a previous fit.json
        #[arg(long)]
        fit_json: Option<PathBuf>,
    },
    /// Fit two windows, analyze both, and write a combined report
    Wave {
        #[arg(long)]
        obs: PathBuf,
        /// First window `<start:end>` (defaults to the config's window_a)
        #[arg(long)]
        window_a: Option<String>,
        /// Second window `<start:end>` (defaults to the config's window_b)
        #[arg(long)]
        window_b: Option<String>,
    },
}

enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn classify_fit_error(e: FitError) -> CliError {
    match e {
        FitError::BadObservations(_) | FitError::BadWindow { .. } => data(e),
        FitError::BadConfig(_) => usage(e),
        FitError::AllRestartsInfeasible { .. } | FitError::Analysis(_) => numeric(e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2 on its own; the contract reserves 2 for
            // data errors, so print and map to the usage code.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let config = RunConfig::load(config_path).map_err(usage)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| config.out_dir.clone());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| data(format!("cannot create output directory {}: {e}", out_dir.display())))?;

    match &cli.command {
        Command::Simulate => cmd_simulate(&config, &out_dir),
        Command::Fit { obs, window } => cmd_fit(&config, obs, window.as_deref(), cli.seed, &out_dir),
        Command::Analyze { fit_json } => cmd_analyze(&config, fit_json.as_deref(), &out_dir),
        Command::Wave { obs, window_a, window_b } => cmd_wave(
            &config,
            obs,
            window_a.as_deref(),
            window_b.as_deref(),
            cli.seed,
            &out_dir,
        ),
    }
}

fn integrate_config(
    config: &RunConfig,
    params: &ModelParams,
    init: &StateVector,
) -> Result<Trajectory, IntegrateError> {
    integrate(params, init, config.wave_start_date, config.horizon_days, config.tolerances())
}

fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    let params = config.model_params();
    let traj = integrate_config(config, &params, &config.initial_state()).map_err(numeric)?;
    let path = out_dir.join("actives.csv");
    std::fs::write(&path, io::actives_csv(&traj))
        .map_err(|e| data(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn resolve_window(
    flag: Option<&str>,
    config_window: Option<(usize, usize)>,
    which: &str,
) -> Result<(usize, usize), CliError> {
    match flag {
        Some(spec) => io::parse_window(spec).map_err(usage),
        None => config_window
            .ok_or_else(|| CliError::Usage(format!("no fit window: pass --{which} or set {which} in the config"))),
    }
}

fn cmd_fit(
    config: &RunConfig,
    obs_path: &Path,
    window_flag: Option<&str>,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let observations = io::parse_observations(obs_path).map_err(data)?;
    let window = resolve_window(window_flag, config.window_a, "window").map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(m.replace("--window_a", "--window")),
        other => other,
    })?;
    let fit_config = config.fit_config(seed);
    let result = fit::fit(&observations, window, &fit_config).map_err(classify_fit_error)?;
    let path = out_dir.join("fit.json");
    io::emit_json(&io::fit_json(&result, window, seed), &path).map_err(data)?;
    println!(
        "wrote {} (loss {:.3e}, converged: {})",
        path.display(),
        result.loss,
        result.converged
    );
    Ok(())
}

fn cmd_analyze(config: &RunConfig, fit_json: Option<&Path>, out_dir: &Path) -> Result<(), CliError> {
    let (params, init) = match fit_json {
        Some(path) => io::parse_fit_json(path).map_err(data)?,
        None => (config.model_params(), config.initial_state()),
    };
    let traj = integrate_config(config, &params, &init).map_err(numeric)?;
    let analyzer_cfg = config.analyzer_config();
    let timeline = analyzer::build_timeline(&traj, &params, &analyzer_cfg).map_err(numeric)?;
    let events = analyzer::analyze_outbreak(&timeline, &traj, &analyzer_cfg, &config.ranking_days);

    let sp = analyzer::oracle_sp_inflection(&traj, &params, config.persistence_days).map_err(numeric)?;
    let active = analyzer::oracle_active_inflection_vs_max_ep(&traj, config.persistence_days);
    let ordering = analyzer::oracle_ep_before_sp_inflection(&traj, config.persistence_days);
    let oracles = io::oracles_json(&sp, &active, &ordering);

    let report = io::report_json(config.wave_start_date, &events, oracles, None);
    let report_path = out_dir.join("report.json");
    io::emit_json(&report, &report_path).map_err(data)?;
    io::emit_plot_data(&timeline, &traj, out_dir).map_err(data)?;
    println!("wrote {}", report_path.display());
    println!("wrote {}", out_dir.join("timescales.csv").display());
    println!("wrote {}", out_dir.join("actives.csv").display());
    Ok(())
}

fn window_fit_json(wf: &WindowFit, seed: u64) -> Value {
    json!({
        "window": {"start": wf.window.0, "end": wf.window.1},
        "fit": io::fit_json(&wf.fit, wf.window, seed),
        "events": io::events_json(&wf.events),
        "disappearance_abs": match wf.disappearance_abs {
            Some(d) => json!(d),
            None => Value::Null,
        },
    })
}

fn cmd_wave(
    config: &RunConfig,
    obs_path: &Path,
    window_a_flag: Option<&str>,
    window_b_flag: Option<&str>,
    seed: u64,
    out_dir: &Path,
) -> Result<(), CliError> {
    let observations = io::parse_observations(obs_path).map_err(data)?;
    let wa = resolve_window(window_a_flag, config.window_a, "window-a")?;
    let wb = resolve_window(window_b_flag, config.window_b, "window-b")?;
    let fit_config = config.fit_config(seed);
    let analyzer_cfg = config.analyzer_config();
    let cmp = fit::fit_windows(
        &observations,
        wa,
        wb,
        &fit_config,
        config.horizon_days,
        &analyzer_cfg,
    );

    // Window validation failures are data errors and abort before any
    // report; fit/analysis failures produce a partial report below.
    for side in [&cmp.a, &cmp.b] {
        if let Err(e @ (FitError::BadWindow { .. } | FitError::BadObservations(_))) = side {
            return Err(data(e));
        }
        if let Err(e @ FitError::BadConfig(_)) = side {
            return Err(usage(e));
        }
    }

    let side_json = |side: &Result<WindowFit, FitError>| match side {
        Ok(wf) => (window_fit_json(wf, seed), Value::Null),
        Err(e) => (Value::Null, json!(e.to_string())),
    };
    let (a_json, a_fail) = side_json(&cmp.a);
    let (b_json, b_fail) = side_json(&cmp.b);
    let report = json!({
        "schema": 1,
        "wave_start_date": config.wave_start_date.to_string(),
        "window_a": a_json,
        "window_b": b_json,
        "failures": {"window_a": a_fail, "window_b": b_fail},
        "disappearance_gap_days": match cmp.disappearance_gap {
            Some(g) => json!(g),
            None => Value::Null,
        },
    });
    let path = out_dir.join("wave_report.json");
    io::emit_json(&report, &path).map_err(data)?;
    println!("wrote {}", path.display());

    if let Err(e) = &cmp.a {
        return Err(numeric(format!("window A fit failed: {e}")));
    }
    if let Err(e) = &cmp.b {
        return Err(numeric(format!("window B fit failed: {e}")));
    }
    Ok(())
}
