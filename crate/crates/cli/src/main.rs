use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aci_core::config::{load_config, Config};
use aci_core::cycle::{gen_cycle, CycleSpec};
use aci_core::gains::{validate_actor_critic_conditions, validate_identifier_conditions, ValidationReport};
use aci_core::io::atomic_write;
use aci_core::runner::{self, ControllerKind};
use aci_core::sim::{Baseline, PlantSelector};
use aci_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes.
const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGENCE: u8 = 2;
const EXIT_ORACLE: u8 = 3;
/// A run finished but its pass criterion was not met.
const EXIT_CRITERION: u8 = 4;
/// Command-line misuse (clap's own default of 2 would collide with divergence).
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "aci", version, about = "Actor-critic-identifier speed tracking for an electric vehicle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one controller over a drive cycle; writes trajectory.csv and metrics.json.
    Run(RunArgs),
    /// Run ACI and a baseline on the same cycle; writes both trajectories and comparison.json.
    Compare(CompareArgs),
    /// Evaluate the sufficient gain conditions for the configured gains and constants.
    ValidateGains(ValidateArgs),
    /// Learn on the linear test plant and compare the critic against the Riccati solution.
    LqrVerify(LqrArgs),
    /// Write the configured (or flag-described) drive cycle as CSV.
    GenCycle(GenCycleArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PlantArg {
    Ev,
    Lqr,
    Nltest,
}

impl From<PlantArg> for PlantSelector {
    fn from(p: PlantArg) -> Self {
        match p {
            PlantArg::Ev => PlantSelector::Ev,
            PlantArg::Lqr => PlantSelector::Lqr,
            PlantArg::Nltest => PlantSelector::Nltest,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ControllerArg {
    Aci,
    Pid,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Drive-cycle CSV (`t_s,v_d_mps`); the config's cycle when omitted.
    #[arg(long, value_name = "FILE")]
    cycle: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ev")]
    plant: PlantArg,
    #[arg(long, value_enum, default_value = "aci")]
    controller: ControllerArg,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Drive-cycle CSV (`t_s,v_d_mps`); the config's cycle when omitted.
    #[arg(long, value_name = "FILE")]
    cycle: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ev")]
    plant: PlantArg,
    /// Controller on the baseline side; `aci` compares ACI with itself.
    #[arg(long, value_enum, default_value = "pid")]
    baseline: ControllerArg,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out_dir: PathBuf,
    /// Not accepted: compare always runs both controllers.
    #[arg(long, hide = true, value_name = "KIND")]
    controller: Option<String>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// TOML configuration; gains from the top-level sections, constants from `[analysis]`.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Exit with status 4 if any inequality fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct LqrArgs {
    #[command(flatten)]
    common: Common,
    /// Simulated learning time, s.
    #[arg(long, default_value_t = 200.0)]
    duration: f64,
    /// Write the verification result as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CycleKind {
    Trapezoid,
    Constant,
}

#[derive(Args, Debug)]
struct GenCycleArgs {
    /// Use the `[cycle]` section of this config (ignored when --kind is given).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Build the cycle from flags instead of the config.
    #[arg(long, value_enum)]
    kind: Option<CycleKind>,
    /// Start and end speed, m/s (trapezoid).
    #[arg(long, default_value_t = 0.0)]
    v0: f64,
    /// Cruise speed, m/s (trapezoid) or the held speed (constant).
    #[arg(long, default_value_t = 15.0)]
    v_cruise: f64,
    /// Acceleration, m/s².
    #[arg(long, default_value_t = 1.5)]
    accel: f64,
    /// Deceleration, m/s².
    #[arg(long, default_value_t = 1.5)]
    decel: f64,
    /// Cruise hold time, s (trapezoid) or total duration (constant).
    #[arg(long, default_value_t = 30.0)]
    cruise_s: f64,
    /// Standstill before and after the trapezoid, s.
    #[arg(long, default_value_t = 5.0)]
    dwell_s: f64,
    /// Output CSV.
    #[arg(long, value_name = "FILE", default_value = "cycle.csv")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Core(Error),
    Criterion(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::NonFinite { .. } => EXIT_DIVERGENCE,
        Error::RiccatiNonConvergence { .. } => EXIT_ORACLE,
        _ => EXIT_CONFIG,
    }
}

fn config(path: Option<&Path>) -> Result<Config, Error> {
    match path {
        Some(p) => load_config(p),
        None => Ok(Config::default()),
    }
}

fn controller(c: ControllerArg) -> ControllerKind {
    match c {
        ControllerArg::Aci => ControllerKind::Aci,
        ControllerArg::Pid => ControllerKind::Pid,
    }
}

fn cmd_run(a: RunArgs) -> Result<String, Failure> {
    let cfg = config(a.common.config.as_deref())?;
    let cycle = runner::resolve_cycle(&cfg, a.cycle.as_deref())?;
    let seed = a.common.seed.unwrap_or(cfg.seed);
    let kind = controller(a.controller);
    let out = runner::run_to_dir(&cfg, &cycle, a.plant.into(), kind, seed, &a.out_dir)?;
    let m = &out.metrics.energy;
    Ok(format!(
        "{kind}: net {:.3} kJ (consumed {:.3}, recovered {:.3}), rms error {:.4}, {:.2} s -> {}",
        m.net_energy / 1e3,
        m.energy_consumed / 1e3,
        m.energy_recovered / 1e3,
        m.rms_tracking_error,
        out.metrics.runtime_s,
        a.out_dir.display()
    ))
}

fn cmd_compare(a: CompareArgs) -> Result<String, Failure> {
    if a.controller.is_some() {
        return Err(Failure::Usage(
            "compare always runs both controllers; choose the baseline with --baseline".into(),
        ));
    }
    let cfg = config(a.common.config.as_deref())?;
    let cycle = runner::resolve_cycle(&cfg, a.cycle.as_deref())?;
    let seed = a.common.seed.unwrap_or(cfg.seed);
    let baseline = match a.baseline {
        ControllerArg::Aci => Baseline::Aci,
        ControllerArg::Pid => Baseline::Pid,
    };
    let out = runner::compare_to_dir(&cfg, &cycle, a.plant.into(), baseline, seed, &a.out_dir)?;
    let r = &out.report;
    Ok(format!(
        "aci {:.3} kJ vs {} {:.3} kJ: net reduction {:.2}%, recovery change {:+.2}% -> {}",
        r.aci.net_energy / 1e3,
        controller(a.baseline),
        r.baseline.net_energy / 1e3,
        r.net_energy_reduction_pct,
        r.recovery_improvement_pct,
        out.report_path.display()
    ))
}

fn summarize(r: &ValidationReport) -> String {
    let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let passed = r.checks.len() - failed.len();
    if failed.is_empty() {
        format!("{}: {passed}/{} pass", r.condition, r.checks.len())
    } else {
        format!("{}: {passed}/{} pass, failing [{}]", r.condition, r.checks.len(), failed.join("; "))
    }
}

fn cmd_validate(a: ValidateArgs) -> Result<String, Failure> {
    let cfg = config(a.config.as_deref())?;
    let (g, c) = (cfg.gains(), cfg.constants());
    let reports = [validate_identifier_conditions(&g, &c)?, validate_actor_critic_conditions(&g, &c)?];
    if let Some(path) = &a.out {
        let json = serde_json::to_vec_pretty(&reports).map_err(Error::from)?;
        atomic_write(path, &json)?;
    }
    let line = reports.iter().map(summarize).collect::<Vec<_>>().join(" | ");
    if a.strict && !reports.iter().all(|r| r.all_passed()) {
        return Err(Failure::Criterion(line));
    }
    Ok(line)
}

fn cmd_lqr_verify(a: LqrArgs) -> Result<String, Failure> {
    if !(a.duration.is_finite() && a.duration > 0.0) {
        return Err(Failure::Usage(format!("--duration must be > 0, got {}", a.duration)));
    }
    let cfg = config(a.common.config.as_deref())?;
    let seed = a.common.seed.unwrap_or(cfg.seed);
    let v = runner::lqr_verify(&cfg, a.duration, seed)?;
    if let Some(path) = &a.out {
        let json = serde_json::to_vec_pretty(&v).map_err(Error::from)?;
        atomic_write(path, &json)?;
    }
    let w = v.learned_weights;
    let o = v.oracle_weights;
    let line = format!(
        "relative error {:.4} (tolerance {}), learned [{:.4}, {:.4}, {:.4}] vs riccati [{:.4}, {:.4}, {:.4}], tail mean |delta| {:.3e}, max |delta| {:.3e}, {} resets",
        v.relative_error,
        v.tolerance,
        w[0],
        w[1],
        w[2],
        o[0],
        o[1],
        o[2],
        v.tail_mean_abs_residual,
        v.max_abs_residual,
        v.covariance_resets
    );
    if v.passed {
        Ok(line)
    } else {
        Err(Failure::Criterion(line))
    }
}

fn cmd_gen_cycle(a: GenCycleArgs) -> Result<String, Failure> {
    let spec = match a.kind {
        Some(CycleKind::Trapezoid) => CycleSpec::Trapezoid {
            v0: a.v0,
            v_cruise: a.v_cruise,
            accel: a.accel,
            decel: a.decel,
            cruise_s: a.cruise_s,
            dwell_s: a.dwell_s,
        },
        Some(CycleKind::Constant) => CycleSpec::Constant {
            speed: a.v_cruise,
            duration_s: a.cruise_s,
        },
        None => config(a.config.as_deref())?.cycle,
    };
    let cycle = gen_cycle(&spec)?;
    atomic_write(&a.out, cycle.to_csv_string()?.as_bytes())?;
    Ok(format!(
        "{} samples over {:.2} s -> {}",
        cycle.samples().len(),
        cycle.duration(),
        a.out.display()
    ))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::ValidateGains(a) => cmd_validate(a),
        Command::LqrVerify(a) => cmd_lqr_verify(a),
        Command::GenCycle(a) => cmd_gen_cycle(a),
    };
    match result {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Criterion(line)) => {
            println!("{line}");
            eprintln!("error: criterion not met");
            ExitCode::from(EXIT_CRITERION)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
