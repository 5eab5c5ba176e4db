//! Command line front end: analytic curves, simulation, parameter sweeps,
//! and scenario validation, all driven by a JSON scenario file.
//!
//! Exit codes: 0 success, 1 validation or parse failure, 2 quadrature
//! non-convergence, 3 statistical alarm (simulation vs analytic |z| > 4).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fundnet::{
    compare_with_analytic, long_run_ratio, settling_time, simulate, simulate_cash_flows,
    transient_profile, Error, GridSpec, MarkMode, MeanValueFunction, NetworkConfig,
    OccupancyMethod, Scenario, SimulationPlan, SimulationSettings,
};

#[derive(Parser)]
#[command(
    name = "fundnet",
    version,
    about = "Transient occupancy, equilibrium ratios and simulation for a two-node pensions network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the analytic occupancy curves and balance ratios on the grid
    Compute(CommonArgs),
    /// Run the event simulator and score it against the analytic curves
    Simulate(CommonArgs),
    /// Sweep one parameter and report the equilibrium quantities per value
    Sweep(SweepArgs),
    /// Check a scenario file, reporting every violation and degeneracy notice
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON)
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    /// Write CSV here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the grid horizon
    #[arg(long, value_name = "T")]
    t_max: Option<f64>,
    /// Override the number of grid steps
    #[arg(long, value_name = "N")]
    t_steps: Option<u32>,
    /// Override the replication count
    #[arg(long, value_name = "N")]
    reps: Option<usize>,
    /// Override the simulation seed
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Force quadrature at this absolute tolerance instead of closed forms
    #[arg(long, value_name = "TOL")]
    quad_tol: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to sweep: lambda_a, lambda_b, p, mean_a, mean_b
    #[arg(long, value_name = "NAME")]
    param: String,
    /// First parameter value
    #[arg(long, value_name = "X")]
    from: f64,
    /// Last parameter value
    #[arg(long, value_name = "X")]
    to: f64,
    /// Number of rows; 1 evaluates only `from`
    #[arg(long, value_name = "N")]
    steps: u32,
}

#[derive(Debug)]
enum CliError {
    Read(PathBuf, std::io::Error),
    Write(PathBuf, std::io::Error),
    Parse(String),
    Validation(Vec<String>),
    Usage(String),
    Core(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Read(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            CliError::Write(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            CliError::Parse(m) => write!(f, "scenario parse error: {m}"),
            CliError::Validation(v) => {
                write!(f, "scenario validation failed:")?;
                for m in v {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::QuadratureNonConvergence { .. }) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not failures; bad flags count as parse errors.
            let code = if e.use_stderr() { 1u8 } else { 0u8 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => run_compute(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Non-finite values serialize as `inf` / `-inf` / `nan` so the CSV loads
/// in spreadsheet and plotting tools.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Read(path.to_path_buf(), e))?;
    Scenario::from_json(&text).map_err(|e| CliError::Parse(e.to_string()))
}

/// Apply `--t-max` / `--t-steps`. An explicit time list can only be replaced
/// wholesale, so it needs both flags.
fn effective_grid(scenario: &Scenario, args: &CommonArgs) -> Result<GridSpec, CliError> {
    match (args.t_max, args.t_steps) {
        (None, None) => Ok(scenario.grid.clone()),
        (t_max_flag, steps_flag) => match &scenario.grid {
            GridSpec::Range { t_max, steps } => Ok(GridSpec::Range {
                t_max: t_max_flag.unwrap_or(*t_max),
                steps: steps_flag.unwrap_or(*steps),
            }),
            GridSpec::Explicit { .. } => match (t_max_flag, steps_flag) {
                (Some(t_max), Some(steps)) => Ok(GridSpec::Range { t_max, steps }),
                _ => Err(CliError::Usage(
                    "the scenario grid is an explicit time list; pass both --t-max and --t-steps to replace it"
                        .to_string(),
                )),
            },
        },
    }
}

/// Load, apply grid overrides, and insist the result is fully valid.
fn prepared_scenario(args: &CommonArgs) -> Result<Scenario, CliError> {
    let mut scenario = load_scenario(&args.scenario)?;
    scenario.grid = effective_grid(&scenario, args)?;
    let violations = scenario.violations();
    if !violations.is_empty() {
        return Err(CliError::Validation(violations));
    }
    Ok(scenario)
}

fn method_from(args: &CommonArgs) -> Result<OccupancyMethod, CliError> {
    match args.quad_tol {
        None => Ok(OccupancyMethod::Auto),
        Some(tol) => {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::Usage(format!(
                    "--quad-tol must be finite and > 0, got {tol}"
                )));
            }
            Ok(OccupancyMethod::Quadrature {
                abs_tol: tol,
                rel_tol: 0.0,
            })
        }
    }
}

fn mark_functions(scenario: &Scenario) -> (MeanValueFunction, MeanValueFunction) {
    match &scenario.mean_values {
        Some(mv) => (mv.m_a.clone(), mv.m_b.clone()),
        None => (
            MeanValueFunction::Constant { value: 1.0 },
            MeanValueFunction::Constant { value: 1.0 },
        ),
    }
}

/// CSV goes to `--out` (summary to standard output) or to standard output
/// (summary to standard error) so piped CSV stays clean.
fn emit(csv: &str, summary: &[String], out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| CliError::Write(path.clone(), e))?;
            for line in summary {
                println!("{line}");
            }
        }
        None => {
            print!("{csv}");
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn run_compute(args: &CommonArgs) -> Result<ExitCode, CliError> {
    let scenario = prepared_scenario(args)?;
    let method = method_from(args)?;
    let times = scenario.grid_times();
    let (m_a, m_b) = mark_functions(&scenario);
    let profile = transient_profile(&scenario.network, &times, &m_a, &m_b, method)?;
    let method_label = if profile.closed_form {
        "ClosedForm"
    } else {
        "Quadrature"
    };
    // The long-run value doubles as the large-horizon approximation; the
    // short-horizon approximation is lambda_a / lambda_b.
    let eq3 = fmt_f64(profile.ratio_long_run.as_f64());
    let eq4 = eq3.clone();
    let eq5 = fmt_f64(profile.ratio_short.as_f64());
    let mut csv = String::from("t,e_n_a,e_n_b,ratio,ratio_eq3,ratio_eq4,ratio_eq5,h,method\n");
    for (i, &t) in times.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(t),
            fmt_f64(profile.e_n_a[i]),
            fmt_f64(profile.e_n_b[i]),
            fmt_f64(profile.ratio[i].as_f64()),
            eq3,
            eq4,
            eq5,
            fmt_f64(profile.excess[i]),
            method_label,
        ));
    }
    let summary = vec![format!(
        "long_run_ratio={} settling_time={} ratio_short={} method={} rows={}",
        eq3,
        fmt_f64(profile.settling_time),
        eq5,
        method_label,
        times.len(),
    )];
    emit(&csv, &summary, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(args: &CommonArgs) -> Result<ExitCode, CliError> {
    let scenario = prepared_scenario(args)?;
    let method = method_from(args)?;
    let times = scenario.grid_times();
    let settings = match (&scenario.simulation, args.reps) {
        (Some(s), _) => SimulationSettings {
            replications: args.reps.unwrap_or(s.replications),
            seed: args.seed.unwrap_or(s.seed),
        },
        (None, Some(reps)) => SimulationSettings {
            replications: reps,
            seed: args.seed.unwrap_or(0),
        },
        (None, None) => {
            return Err(CliError::Usage(
                "scenario has no simulation block; pass --reps (and optionally --seed)".to_string(),
            ))
        }
    };
    let plan = SimulationPlan {
        config: scenario.network.clone(),
        times,
        replications: settings.replications,
        seed: settings.seed,
    };
    let est = simulate(&plan)?;
    let report = compare_with_analytic(&est, &plan.config, method)?;
    let flows = match &scenario.mean_values {
        Some(mv) => Some(simulate_cash_flows(
            &plan,
            &mv.m_a,
            &mv.m_b,
            MarkMode::Degenerate,
        )?),
        None => None,
    };
    let mut csv = String::from("t,mean_n_a,se_n_a,mean_n_b,se_n_b,z_n_a,z_n_b");
    if flows.is_some() {
        csv.push_str(",contrib_rate,pension_rate");
    }
    csv.push('\n');
    for i in 0..plan.times.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(plan.times[i]),
            fmt_f64(est.mean_n_a[i]),
            fmt_f64(est.se_n_a[i]),
            fmt_f64(est.mean_n_b[i]),
            fmt_f64(est.se_n_b[i]),
            fmt_f64(report.z_n_a[i]),
            fmt_f64(report.z_n_b[i]),
        ));
        if let Some(cf) = &flows {
            csv.push_str(&format!(
                ",{},{}",
                fmt_f64(cf.mean_contribution[i]),
                fmt_f64(cf.mean_pension[i]),
            ));
        }
        csv.push('\n');
    }
    let c = est.event_counts;
    let summary = vec![
        format!(
            "replications={} seed={} max_abs_z={} frac_within_3={} alarm={}",
            plan.replications,
            plan.seed,
            fmt_f64(report.max_abs_z),
            fmt_f64(report.frac_within_3),
            report.alarm,
        ),
        format!(
            "events: arrivals_a={} completions_a={} routed_to_b={} external_arrivals_b={} completions_b={}",
            c.arrivals_a, c.completions_a, c.routed_to_b, c.external_arrivals_b, c.completions_b,
        ),
    ];
    emit(&csv, &summary, &args.out)?;
    if report.alarm {
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn apply_param(base: &NetworkConfig, name: &str, value: f64) -> Result<NetworkConfig, CliError> {
    let mut cfg = base.clone();
    match name {
        "lambda_a" => cfg.lambda_a = value,
        "lambda_b" => cfg.lambda_b = value,
        "p" => cfg.p = value,
        "mean_a" => cfg.service_a = cfg.service_a.scaled_to_mean(value)?,
        "mean_b" => cfg.service_b = cfg.service_b.scaled_to_mean(value)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown sweep parameter `{other}`; expected lambda_a, lambda_b, p, mean_a or mean_b"
            )))
        }
    }
    Ok(cfg)
}

fn run_sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    let scenario = prepared_scenario(&args.common)?;
    let method = method_from(&args.common)?;
    if args.steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".to_string()));
    }
    let t_max = *scenario
        .grid_times()
        .last()
        .expect("validated grid is nonempty");
    let values: Vec<f64> = if args.steps == 1 {
        vec![args.from]
    } else {
        (0..args.steps)
            .map(|i| args.from + (args.to - args.from) * i as f64 / (args.steps - 1) as f64)
            .collect()
    };
    let one = MeanValueFunction::Constant { value: 1.0 };
    let mut csv = String::from("param_value,long_run_ratio,ratio_at_tmax,settling_time\n");
    for &v in &values {
        let network = apply_param(&scenario.network, &args.param, v)?;
        if let Err(e) = network.validate() {
            return Err(CliError::Validation(vec![format!(
                "{} = {v}: {e}",
                args.param
            )]));
        }
        let long_run = match long_run_ratio(&network) {
            Ok(x) => x,
            Err(_) => {
                if network.lambda_a * network.service_a.mean() > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            }
        };
        let profile = transient_profile(&network, &[t_max], &one, &one, method)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(v),
            fmt_f64(long_run),
            fmt_f64(profile.ratio[0].as_f64()),
            fmt_f64(settling_time(&network)),
        ));
    }
    let summary = vec![format!(
        "param={} rows={} t_max={}",
        args.param,
        values.len(),
        fmt_f64(t_max),
    )];
    emit(&csv, &summary, &args.common.out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: &CommonArgs) -> Result<ExitCode, CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let violations = scenario.violations();
    let mut text = String::new();
    let code = if violations.is_empty() {
        text.push_str("valid\n");
        for n in scenario.notices() {
            text.push_str(&format!("notice: {n}\n"));
        }
        ExitCode::SUCCESS
    } else {
        text.push_str("invalid\n");
        for v in &violations {
            text.push_str(&format!("violation: {v}\n"));
        }
        ExitCode::from(1)
    };
    emit(&text, &[], &args.out)?;
    Ok(code)
}
