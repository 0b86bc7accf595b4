//! Closed-loop simulation: ACI and PID runs, drive cycles, energy accounting.

mod aci;
mod energy;
mod explore;
mod log;
mod pid;
mod plant_loop;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

pub use aci::{AciController, AciStep};
pub use energy::{integrate_energy, percent_change, trapezoid, EnergyReport, EnergySplit};
pub use explore::{Dither, Exploration};
pub use log::{TrajectoryLog, TrajectoryRow, TRAJECTORY_HEADER};
pub use pid::{Pid, PidGains};
pub use plant_loop::{LqrScenario, PlantSelector};

use crate::cost::{Cost, CostWeights, QuadraticCost};
use crate::cycle::DriveCycle;
use crate::error::{Error, Result};
use crate::gains::GainSet;
use crate::plant::{EvParams, LinearPlant, NonlinearTestPlant};
use plant_loop::{guard, LoopPlant};

/// Units of the controller's internal coordinates.
///
/// The controller works on `x1 / speed`, `x2 / power` and outputs torque in
/// multiples of `torque`. Cost weights and initial weights are expressed in
/// these units. The identity scale leaves signals untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalScale {
    pub speed: f64,
    pub power: f64,
    pub torque: f64,
}

impl Default for SignalScale {
    fn default() -> Self {
        Self::identity()
    }
}

impl SignalScale {
    pub const fn identity() -> Self {
        Self {
            speed: 1.0,
            power: 1.0,
            torque: 1.0,
        }
    }

    /// 10 m/s, 100 kW and 250 N·m (the default motor torque limit).
    pub const fn ev() -> Self {
        Self {
            speed: 10.0,
            power: 1e5,
            torque: 250.0,
        }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        for (k, v) in [("speed", self.speed), ("power", self.power), ("torque", self.torque)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{section}.{k}_scale"), format!("must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn to_controller(&self, x: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(x[0] / self.speed, x[1] / self.power)
    }
}

/// Plant choice and everything about a run that is not a controller gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: PlantSelector,
    pub ev: EvParams,
    pub lqr: LqrScenario,
    pub nltest_x0: Vector2<f64>,
    pub explore: Exploration,
    /// Initial critic (and actor) weights in controller units.
    pub critic_w0: Vector3<f64>,
    pub scale: SignalScale,
    pub pid: PidGains,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::new(PlantSelector::Ev)
    }
}

/// Initial weights used on the linear and nonlinear test plants.
pub const TEST_PLANT_W0: [f64; 3] = [0.1, 0.1, 0.1];
/// Initial weights used on the EV plant: speed feedback only.
pub const EV_W0: [f64; 3] = [0.5, 0.5, 0.0];

impl Scenario {
    /// Defaults for `plant`: the EV runs in scaled units with its own
    /// initial weights, the test plants in raw units.
    pub fn new(plant: PlantSelector) -> Self {
        let (w0, scale) = match plant {
            PlantSelector::Ev => (EV_W0, SignalScale::ev()),
            _ => (TEST_PLANT_W0, SignalScale::identity()),
        };
        Self {
            plant,
            ev: EvParams::default(),
            lqr: LqrScenario::default(),
            nltest_x0: Vector2::new(0.5, -0.5),
            explore: Exploration::default(),
            critic_w0: Vector3::from(w0),
            scale,
            pid: PidGains::default(),
        }
    }

    fn loop_plant(&self, cycle: &DriveCycle) -> LoopPlant {
        match self.plant {
            PlantSelector::Ev => {
                let v0 = cycle.speed_at(cycle.start());
                LoopPlant::ev(self.ev, v0, v0)
            }
            PlantSelector::Lqr => LoopPlant::Linear {
                plant: self.lqr.plant,
                x: self.lqr.x0,
            },
            PlantSelector::Nltest => LoopPlant::Nonlinear {
                plant: NonlinearTestPlant,
                x: self.nltest_x0,
            },
        }
    }
}

/// Running cost used by the loop, in controller units: quadratic for the
/// linear plant, tracking and acceleration power otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostModel {
    Tracking(CostWeights),
    Quadratic(QuadraticCost),
}

impl CostModel {
    pub fn for_scenario(gains: &GainSet, scenario: &Scenario) -> Self {
        match scenario.plant {
            PlantSelector::Lqr => CostModel::Quadratic(QuadraticCost {
                q: scenario.lqr.q,
                beta: gains.beta,
            }),
            _ => CostModel::Tracking(CostWeights::from(gains)),
        }
    }
}

impl Cost for CostModel {
    fn state_cost(&self, x: &Vector2<f64>) -> f64 {
        match self {
            CostModel::Tracking(c) => c.state_cost(x),
            CostModel::Quadratic(c) => c.state_cost(x),
        }
    }

    fn beta(&self) -> f64 {
        match self {
            CostModel::Tracking(c) => c.beta,
            CostModel::Quadratic(c) => c.beta,
        }
    }
}

fn step_count(cycle: &DriveCycle, dt: f64) -> Result<usize> {
    let n = (cycle.duration() / dt).round();
    if !(n >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "cycle of {} s is shorter than one step of {dt} s",
            cycle.duration()
        )));
    }
    Ok(n as usize)
}

const DITHER_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of the exploration dither stream for a run seed.
pub fn dither_seed(seed: u64) -> u64 {
    seed ^ DITHER_STREAM
}

/// Runs the actor-critic-identifier controller over `cycle`.
///
/// Each step logs the plant state before the control is applied, then holds
/// the applied control for `dt`. The log has one row per step plus the final
/// state.
pub fn run_aci(
    cycle: &DriveCycle,
    gains: &GainSet,
    scenario: &Scenario,
    seed: u64,
) -> Result<(TrajectoryLog, EnergyReport)> {
    let out = run_aci_detailed(cycle, gains, scenario, seed)?;
    Ok((out.log, out.report))
}

/// Result of an ACI run including the final controller.
#[derive(Debug, Clone)]
pub struct AciOutcome {
    pub log: TrajectoryLog,
    pub report: EnergyReport,
    pub controller: AciController<CostModel>,
}

/// [`run_aci`] that also returns the controller after the last step.
pub fn run_aci_detailed(cycle: &DriveCycle, gains: &GainSet, scenario: &Scenario, seed: u64) -> Result<AciOutcome> {
    run_aci_observed(cycle, gains, scenario, seed, |_, _, _| {})
}

/// [`run_aci_detailed`] calling `observe(k, t, controller)` after every controller step.
pub fn run_aci_observed(
    cycle: &DriveCycle,
    gains: &GainSet,
    scenario: &Scenario,
    seed: u64,
    mut observe: impl FnMut(usize, f64, &AciController<CostModel>),
) -> Result<AciOutcome> {
    gains.validate()?;
    scenario.scale.validate("ev")?;
    let dt = gains.dt;
    let n = step_count(cycle, dt)?;
    let mut plant = scenario.loop_plant(cycle);
    let cost = CostModel::for_scenario(gains, scenario);
    let scale = scenario.scale;
    let x0 = scale.to_controller(&plant.read().x);
    let mut ctrl = AciController::new(gains.clone(), cost, scenario.critic_w0, x0, seed)
        .with_control_limit(plant.torque_limit().map(|l| l / scale.torque));
    let mut dither = Dither::new(scenario.explore, n, dt, dither_seed(seed));
    let mut log = TrajectoryLog::new(dt);
    log.rows.reserve(n + 1);

    for k in 0..=n {
        let t = cycle.start() + k as f64 * dt;
        let reading = plant.read();
        guard("x", reading.x.norm(), k, t)?;
        let step = ctrl.step(&scale.to_controller(&reading.x), dither.sample(k) / scale.torque)?;
        let torque = step.u_applied * scale.torque;
        guard("w_hat_c", ctrl.critic.w_hat.norm(), k, t)?;
        guard("w_hat_a", ctrl.actor.w_hat.norm(), k, t)?;
        guard("w_hat_g", ctrl.identifier.w_hat.norm(), k, t)?;
        guard("v_hat_g", ctrl.identifier.v_hat.norm(), k, t)?;
        guard("x_hat", ctrl.identifier.x_hat.norm(), k, t)?;
        observe(k, t, &ctrl);
        log.push(TrajectoryRow {
            t,
            v_d: reading.v_d,
            v_v: reading.v_v,
            x1: reading.x[0],
            x2: reading.x[1],
            u: torque,
            delta_hjb: step.residual.delta_hjb,
            p_batt: reading.p_batt,
            wc_norm: ctrl.critic.w_hat.norm(),
            wa_norm: ctrl.actor.w_hat.norm(),
            xtilde_norm: step.x_tilde.norm(),
            lambda_min_p: ctrl.critic.lambda_min(),
            reset_count: ctrl.critic.reset_count as u64,
        });
        if k < n {
            plant.step(torque, cycle.speed_at(t + dt), dt)?;
        }
    }
    let report = report_from_log(&log)?;
    Ok(AciOutcome {
        log,
        report,
        controller: ctrl,
    })
}

/// Runs the PID baseline over `cycle` on the scenario's plant.
pub fn run_pid(
    cycle: &DriveCycle,
    pid_gains: &PidGains,
    scenario: &Scenario,
    dt: f64,
) -> Result<(TrajectoryLog, EnergyReport)> {
    pid_gains.validate()?;
    if !(dt > 0.0) {
        return Err(Error::invalid("sim.dt", "must be > 0"));
    }
    let n = step_count(cycle, dt)?;
    let mut plant = scenario.loop_plant(cycle);
    let limit = plant.torque_limit();
    let mut pid = Pid::new(*pid_gains);
    let mut log = TrajectoryLog::new(dt);
    log.rows.reserve(n + 1);
    for k in 0..=n {
        let t = cycle.start() + k as f64 * dt;
        let reading = plant.read();
        guard("x", reading.x.norm(), k, t)?;
        let u = pid.update(-reading.x[0], dt);
        let u = limit.map_or(u, |l| u.clamp(-l, l));
        log.push(TrajectoryRow {
            t,
            v_d: reading.v_d,
            v_v: reading.v_v,
            x1: reading.x[0],
            x2: reading.x[1],
            u,
            delta_hjb: 0.0,
            p_batt: reading.p_batt,
            wc_norm: 0.0,
            wa_norm: 0.0,
            xtilde_norm: 0.0,
            lambda_min_p: 0.0,
            reset_count: 0,
        });
        if k < n {
            plant.step(u, cycle.speed_at(t + dt), dt)?;
        }
    }
    let report = report_from_log(&log)?;
    Ok((log, report))
}

/// Energy metrics recomputed from the `p_batt` and `x1` columns.
pub fn report_from_log(log: &TrajectoryLog) -> Result<EnergyReport> {
    EnergyReport::from_trace(&log.column(|r| r.p_batt), &log.column(|r| r.x1), log.dt)
}

/// Controller used on the baseline side of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Baseline {
    #[default]
    Pid,
    /// Self-comparison: the ACI controller on both sides.
    Aci,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub aci: EnergyReport,
    pub baseline: EnergyReport,
    pub baseline_kind: &'static str,
    /// `(net_baseline − net_aci) / |net_baseline|`, percent.
    pub net_energy_reduction_pct: f64,
    /// `(recovered_aci − recovered_baseline) / recovered_baseline`, percent.
    pub recovery_improvement_pct: f64,
    pub rms_tracking_error_aci_mps: f64,
    pub rms_tracking_error_baseline_mps: f64,
}

pub struct Comparison {
    pub aci_log: TrajectoryLog,
    pub baseline_log: TrajectoryLog,
    pub report: ComparisonReport,
}

pub fn compare(
    cycle: &DriveCycle,
    gains: &GainSet,
    scenario: &Scenario,
    seed: u64,
    baseline: Baseline,
) -> Result<Comparison> {
    let (aci_log, aci) = run_aci(cycle, gains, scenario, seed)?;
    let (baseline_log, base) = match baseline {
        Baseline::Pid => run_pid(cycle, &scenario.pid, scenario, gains.dt)?,
        Baseline::Aci => run_aci(cycle, gains, scenario, seed)?,
    };
    let aci = aci.with_baseline(&base);
    let report = ComparisonReport {
        // `+ 0.0` turns a negated zero into +0 so self-comparison reports 0%
        net_energy_reduction_pct: -percent_change(aci.net_energy, base.net_energy) + 0.0,
        recovery_improvement_pct: percent_change(aci.energy_recovered, base.energy_recovered),
        rms_tracking_error_aci_mps: aci.rms_tracking_error,
        rms_tracking_error_baseline_mps: base.rms_tracking_error,
        baseline_kind: match baseline {
            Baseline::Pid => "pid",
            Baseline::Aci => "aci",
        },
        aci,
        baseline: base,
    };
    Ok(Comparison {
        aci_log,
        baseline_log,
        report,
    })
}

/// Run-level metrics written next to the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    #[serde(flatten)]
    pub energy: EnergyReport,
    pub runtime_s: f64,
    pub seed: u64,
}

/// Trace of an open-loop identification run.
#[derive(Debug, Clone, Default)]
pub struct IdentificationTrace {
    pub t: Vec<f64>,
    pub x: Vec<Vector2<f64>>,
    pub x_tilde: Vec<Vector2<f64>>,
}

impl IdentificationTrace {
    /// RMS of ‖x̃‖ and ‖x‖ over the trailing `fraction` of the run.
    pub fn tail_rms(&self, fraction: f64) -> (f64, f64) {
        let n = self.t.len();
        let start = n - ((n as f64 * fraction).round() as usize).clamp(1, n);
        let rms = |v: &[Vector2<f64>]| (v.iter().map(|e| e.norm_squared()).sum::<f64>() / v.len() as f64).sqrt();
        (rms(&self.x_tilde[start..]), rms(&self.x[start..]))
    }
}

/// Drives a plant with `input(t, x)` and runs only the identifier on it.
/// The input may feed back the measured state, which keeps plants with an
/// unstable drift bounded while they are being excited.
pub fn identify(
    plant: Identifiable,
    gains: &GainSet,
    x0: Vector2<f64>,
    duration: f64,
    seed: u64,
    input: impl Fn(f64, &Vector2<f64>) -> f64,
) -> Result<IdentificationTrace> {
    use crate::identifier::{f_hat, rise_feedback, update_weights, IdentifierState};
    use rand::SeedableRng;

    gains.validate()?;
    let dt = gains.dt;
    let n = (duration / dt).round() as usize;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut id = IdentifierState::new(gains.hidden, x0, x0, &mut rng);
    let mut x = x0;
    let mut trace = IdentificationTrace::default();
    for k in 0..=n {
        let t = k as f64 * dt;
        let u = input(t, &x);
        let x_tilde = x - id.x_hat;
        let (r_t, nu_next) = rise_feedback(&id, &x_tilde, gains, dt)?;
        let x_hat_dot = f_hat(&id, u, &r_t);
        trace.t.push(t);
        trace.x.push(x);
        trace.x_tilde.push(x_tilde);
        guard("x", x.norm(), k, t)?;
        let mut next = update_weights(&id, &x_tilde, &x_hat_dot, gains, dt)?;
        next.nu = nu_next;
        next.advance_estimate(&x_hat_dot, dt);
        id = next;
        if k < n {
            x = match plant {
                Identifiable::Linear(p) => p.step(&x, u, dt)?,
                Identifiable::Nonlinear(p) => p.step(&x, u, dt)?,
            };
        }
    }
    Ok(trace)
}

/// Plants with a vector state that can be identified open-loop.
#[derive(Debug, Clone, Copy)]
pub enum Identifiable {
    Linear(LinearPlant),
    Nonlinear(NonlinearTestPlant),
}
