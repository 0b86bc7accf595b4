//! File-producing entry points shared by the command-line tool and tests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::config::Config;
use crate::cycle::{gen_cycle, DriveCycle};
use crate::error::{Error, Result};
use crate::io::atomic_write;
use crate::lqr::{solve_riccati, stabilizing_gain, RiccatiSolution};
use crate::sim::{self, Baseline, ComparisonReport, PlantSelector, RunMetrics, TrajectoryLog};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const ACI_TRAJECTORY_FILE: &str = "aci_trajectory.csv";
pub const BASELINE_TRAJECTORY_FILE: &str = "baseline_trajectory.csv";
pub const COMPARISON_FILE: &str = "comparison.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControllerKind {
    #[default]
    Aci,
    Pid,
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aci" => Ok(Self::Aci),
            "pid" => Ok(Self::Pid),
            other => Err(Error::InvalidInput(format!("unknown controller `{other}` (aci|pid)"))),
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Aci => "aci",
            Self::Pid => "pid",
        })
    }
}

/// The recorded cycle at `path`, or the one described by the config.
pub fn resolve_cycle(config: &Config, path: Option<&Path>) -> Result<DriveCycle> {
    match path {
        Some(p) => DriveCycle::read_csv(p),
        None => gen_cycle(&config.cycle),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    atomic_write(path, &text)
}

fn write_log(path: &Path, log: &TrajectoryLog) -> Result<()> {
    atomic_write(path, &log.to_csv_bytes()?)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectory: PathBuf,
    pub metrics_path: PathBuf,
    pub metrics: RunMetrics,
}

/// Runs one controller and writes `trajectory.csv` and `metrics.json` into `out_dir`.
pub fn run_to_dir(
    config: &Config,
    cycle: &DriveCycle,
    plant: PlantSelector,
    controller: ControllerKind,
    seed: u64,
    out_dir: &Path,
) -> Result<RunOutput> {
    config.validate()?;
    let gains = config.gains();
    let scenario = config.scenario(Some(plant));
    let start = Instant::now();
    let (log, energy) = match controller {
        ControllerKind::Aci => sim::run_aci(cycle, &gains, &scenario, seed)?,
        ControllerKind::Pid => sim::run_pid(cycle, &scenario.pid, &scenario, gains.dt)?,
    };
    let metrics = RunMetrics {
        energy,
        runtime_s: start.elapsed().as_secs_f64(),
        seed,
    };
    ensure_dir(out_dir)?;
    let trajectory = out_dir.join(TRAJECTORY_FILE);
    let metrics_path = out_dir.join(METRICS_FILE);
    write_log(&trajectory, &log)?;
    write_json(&metrics_path, &metrics)?;
    Ok(RunOutput {
        trajectory,
        metrics_path,
        metrics,
    })
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub report_path: PathBuf,
    pub report: ComparisonReport,
}

/// Runs ACI and the baseline on the same cycle, plant and seed and writes both
/// trajectories plus `comparison.json`.
pub fn compare_to_dir(
    config: &Config,
    cycle: &DriveCycle,
    plant: PlantSelector,
    baseline: Baseline,
    seed: u64,
    out_dir: &Path,
) -> Result<CompareOutput> {
    config.validate()?;
    let scenario = config.scenario(Some(plant));
    let cmp = sim::compare(cycle, &config.gains(), &scenario, seed, baseline)?;
    ensure_dir(out_dir)?;
    write_log(&out_dir.join(ACI_TRAJECTORY_FILE), &cmp.aci_log)?;
    write_log(&out_dir.join(BASELINE_TRAJECTORY_FILE), &cmp.baseline_log)?;
    let report_path = out_dir.join(COMPARISON_FILE);
    write_json(&report_path, &cmp.report)?;
    Ok(CompareOutput {
        report_path,
        report: cmp.report,
    })
}

/// Outcome of running the ACI loop on the linear plant against the Riccati solution.
#[derive(Debug, Clone, Serialize)]
pub struct LqrVerification {
    pub oracle_weights: [f64; 3],
    pub learned_weights: [f64; 3],
    pub relative_error: f64,
    pub riccati_iterations: usize,
    /// Mean |δ_HJB| over the last 10% of the run.
    pub tail_mean_abs_residual: f64,
    pub max_abs_residual: f64,
    pub covariance_resets: usize,
    pub duration_s: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative error the learned critic must reach.
pub const LQR_TOLERANCE: f64 = 0.10;

/// Riccati solution for the configured linear plant, started from a
/// stabilizing gain. An unstabilizable pair reports non-convergence.
pub fn riccati_oracle(config: &Config) -> Result<RiccatiSolution> {
    let s = config.scenario(Some(PlantSelector::Lqr));
    let k0 = stabilizing_gain(&s.lqr.plant).ok_or(Error::RiccatiNonConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    solve_riccati(&s.lqr.plant, &s.lqr.q, config.cost.beta, Some(k0), 1e-12, 200)
}

pub fn lqr_verify(config: &Config, duration: f64, seed: u64) -> Result<LqrVerification> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid("duration", format!("must be > 0, got {duration}")));
    }
    config.validate()?;
    let oracle = riccati_oracle(config)?;
    let target = oracle.critic_weights();
    let scenario = config.scenario(Some(PlantSelector::Lqr));
    let cycle = DriveCycle::constant(0.0, duration)?;
    let out = sim::run_aci_detailed(&cycle, &config.gains(), &scenario, seed)?;
    let learned = out.controller.critic.w_hat;
    let relative_error = (learned - target).norm() / target.norm();
    let residuals = out.log.column(|r| r.delta_hjb.abs());
    let tail = &residuals[residuals.len() - (residuals.len() / 10).max(1)..];
    Ok(LqrVerification {
        oracle_weights: target.into(),
        learned_weights: learned.into(),
        relative_error,
        riccati_iterations: oracle.iterations,
        tail_mean_abs_residual: tail.iter().sum::<f64>() / tail.len() as f64,
        max_abs_residual: residuals.iter().cloned().fold(0.0, f64::max),
        covariance_resets: out.controller.critic.reset_count,
        duration_s: duration,
        tolerance: LQR_TOLERANCE,
        passed: relative_error < LQR_TOLERANCE,
    })
}
