//! Control-affine plants: an EV longitudinal model, a linear verification
//! plant with a known Riccati solution, and a known-nonlinear identifier test
//! plant. All three share h(x) = [0, 1]ᵀ.

use nalgebra::{Matrix2, SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::state::{input_gain, SystemState};

const GRAVITY: f64 = 9.81;
/// Below this speed rolling resistance is faded out linearly.
const ROLLING_FADE_SPEED: f64 = 0.1;

/// Classic fourth-order Runge-Kutta step for an autonomous right-hand side.
pub fn rk4<const N: usize>(
    f: impl Fn(&SVector<f64, N>) -> SVector<f64, N>,
    x: &SVector<f64, N>,
    dt: f64,
) -> SVector<f64, N> {
    let k1 = f(x);
    let k2 = f(&(x + k1 * (dt / 2.0)));
    let k3 = f(&(x + k2 * (dt / 2.0)));
    let k4 = f(&(x + k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("sim.dt", format!("must be finite and > 0, got {dt}")))
    }
}

/// Point-mass longitudinal vehicle with efficiency-gated regeneration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvParams {
    /// kg
    pub mass: f64,
    /// m
    pub wheel_radius: f64,
    pub gear_ratio: f64,
    /// Drag coefficient times frontal area, m².
    pub cda: f64,
    /// kg/m³
    pub air_density: f64,
    pub crr: f64,
    pub eta_drive: f64,
    pub eta_regen: f64,
    /// N·m
    pub max_torque: f64,
}

impl Default for EvParams {
    fn default() -> Self {
        Self {
            mass: 1600.0,
            wheel_radius: 0.3,
            gear_ratio: 9.0,
            cda: 0.6,
            air_density: 1.2,
            crr: 0.01,
            eta_drive: 0.9,
            eta_regen: 0.6,
            max_torque: 250.0,
        }
    }
}

impl EvParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("plant.mass", self.mass),
            ("plant.wheel_radius", self.wheel_radius),
            ("plant.gear_ratio", self.gear_ratio),
            ("plant.cda", self.cda),
            ("plant.air_density", self.air_density),
            ("plant.crr", self.crr),
            ("plant.max_torque", self.max_torque),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(key, format!("must be > 0, got {v}")));
            }
        }
        for (key, v) in [("plant.eta_drive", self.eta_drive), ("plant.eta_regen", self.eta_regen)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(key, format!("must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Tractive force at the wheel for a motor torque, N.
    pub fn tractive_force(&self, torque: f64) -> f64 {
        torque * self.gear_ratio / self.wheel_radius
    }

    /// Aerodynamic drag plus rolling resistance at speed `v`, N.
    pub fn resistance(&self, v: f64) -> f64 {
        let drag = 0.5 * self.air_density * self.cda * v * v.abs();
        let gate = (v / ROLLING_FADE_SPEED).clamp(0.0, 1.0);
        drag + self.mass * GRAVITY * self.crr * gate
    }

    /// Motor torque that exactly balances the resistances at speed `v`.
    pub fn cruise_torque(&self, v: f64) -> f64 {
        self.resistance(v) * self.wheel_radius / self.gear_ratio
    }

    /// Battery-side net traction power for a torque held at speed `v`, W.
    pub fn battery_power(&self, torque: f64, v: f64) -> f64 {
        let wheel = self.tractive_force(torque) * v;
        if wheel > 0.0 {
            wheel / self.eta_drive
        } else {
            wheel * self.eta_regen
        }
    }

    fn acceleration(&self, torque: f64, v: f64) -> f64 {
        (self.tractive_force(torque) - self.resistance(v)) / self.mass
    }
}

/// Raw EV state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvState {
    pub t: f64,
    /// Vehicle speed, m/s.
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantOutput {
    pub state: EvState,
    /// Net traction power over the step at the new speed, W.
    pub power: f64,
    pub measurement: SystemState,
    /// Torque actually applied after saturation.
    pub torque: f64,
    pub clamped: bool,
}

/// Advances the vehicle by `dt` under a held motor torque. `v_d_next` is
/// the desired speed at the end of the step, used to form the measurement.
pub fn ev_step(p: &EvParams, state: &EvState, torque: f64, v_d_next: f64, dt: f64) -> Result<PlantOutput> {
    check_dt(dt)?;
    ensure_finite("ev_step input", [&state.v, &state.t, &torque, &v_d_next])?;
    if state.v < 0.0 {
        return Err(Error::InvalidInput(format!("vehicle speed must be >= 0, got {}", state.v)));
    }
    let applied = torque.clamp(-p.max_torque, p.max_torque);
    let clamped = applied != torque;
    let x0 = SVector::<f64, 1>::new(state.v);
    let v_next = rk4(|x| SVector::<f64, 1>::new(p.acceleration(applied, x[0].max(0.0))), &x0, dt)[0];
    // braking cannot push the car backwards
    let v_next = v_next.max(0.0);
    let power = p.battery_power(applied, v_next);
    let t = state.t + dt;
    Ok(PlantOutput {
        state: EvState { t, v: v_next },
        power,
        measurement: SystemState::new(t, v_next, v_d_next, power),
        torque: applied,
        clamped,
    })
}

/// ẋ = A x + B u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPlant {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
}

impl Default for LinearPlant {
    fn default() -> Self {
        Self {
            a: Matrix2::new(0.0, 1.0, -1.0, -2.0),
            b: input_gain(),
        }
    }
}

impl LinearPlant {
    pub fn derivative(&self, x: &Vector2<f64>, u: f64) -> Vector2<f64> {
        self.a * x + self.b * u
    }

    pub fn step(&self, x: &Vector2<f64>, u: f64, dt: f64) -> Result<Vector2<f64>> {
        check_dt(dt)?;
        ensure_finite("lqr_plant_step input", x.iter().chain([&u]))?;
        Ok(rk4(|s| self.derivative(s, u), x, dt))
    }
}

/// Known smooth test drift g(x) = (−x1 + x2, −x1·x2 − x2 + sin x1) with h = [0, 1]ᵀ.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NonlinearTestPlant;

impl NonlinearTestPlant {
    pub fn drift(&self, x: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new(-x[0] + x[1], -x[0] * x[1] - x[1] + x[0].sin())
    }

    pub fn derivative(&self, x: &Vector2<f64>, u: f64) -> Vector2<f64> {
        self.drift(x) + input_gain() * u
    }

    pub fn step(&self, x: &Vector2<f64>, u: f64, dt: f64) -> Result<Vector2<f64>> {
        check_dt(dt)?;
        ensure_finite("nonlinear_test_plant_step input", x.iter().chain([&u]))?;
        Ok(rk4(|s| self.derivative(s, u), x, dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn standstill_stays_put() {
        let p = EvParams::default();
        let out = ev_step(&p, &EvState { t: 0.0, v: 0.0 }, 0.0, 0.0, 1e-3).unwrap();
        assert_eq!(out.state.v, 0.0);
        assert_eq!(out.power, 0.0);
        assert!(!out.clamped);
    }

    #[test]
    fn braking_at_standstill_does_not_reverse() {
        let p = EvParams::default();
        let out = ev_step(&p, &EvState { t: 0.0, v: 0.0 }, -100.0, 0.0, 1e-3).unwrap();
        assert_eq!(out.state.v, 0.0);
    }

    #[test]
    fn force_balance_holds_speed() {
        let p = EvParams::default();
        let v = 15.0;
        let mut s = EvState { t: 0.0, v };
        for _ in 0..1000 {
            s = ev_step(&p, &s, p.cruise_torque(v), v, 1e-3).unwrap().state;
        }
        assert_relative_eq!(s.v, v, epsilon = 1e-9);
    }

    #[test]
    fn regeneration_is_efficiency_gated() {
        let p = EvParams::default();
        let out = ev_step(&p, &EvState { t: 0.0, v: 20.0 }, -50.0, 20.0, 1e-3).unwrap();
        let wheel = -50.0 * 9.0 / 0.3 * out.state.v;
        assert!(out.power < 0.0);
        assert_relative_eq!(out.power, 0.6 * wheel, epsilon = 1e-9);
        // 0.6 * 50 * 30 * ~20 m/s
        assert!((out.power + 18_000.0).abs() < 5.0);
    }

    #[test]
    fn traction_power_includes_drive_losses() {
        let p = EvParams::default();
        assert_relative_eq!(p.battery_power(10.0, 10.0), 10.0 * 30.0 * 10.0 / 0.9);
    }

    #[test]
    fn torque_is_saturated_and_flagged() {
        let p = EvParams::default();
        let out = ev_step(&p, &EvState { t: 0.0, v: 5.0 }, 1000.0, 5.0, 1e-3).unwrap();
        assert!(out.clamped);
        assert_eq!(out.torque, 250.0);
    }

    #[test]
    fn ev_rejects_bad_inputs() {
        let p = EvParams::default();
        let s = EvState { t: 0.0, v: 1.0 };
        assert!(ev_step(&p, &s, f64::NAN, 1.0, 1e-3).is_err());
        assert!(ev_step(&p, &s, 1.0, 1.0, 0.0).is_err());
        assert!(ev_step(&p, &EvState { t: 0.0, v: -1.0 }, 1.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn null_linear_dynamics() {
        let plant = LinearPlant {
            a: Matrix2::zeros(),
            b: Vector2::zeros(),
        };
        let x = Vector2::new(0.3, -2.0);
        assert_eq!(plant.step(&x, 4.0, 0.1).unwrap(), x);
    }

    #[test]
    fn double_integrator_closed_form() {
        let plant = LinearPlant {
            a: Matrix2::new(0.0, 1.0, 0.0, 0.0),
            b: Vector2::new(0.0, 1.0),
        };
        let x = plant.step(&Vector2::new(0.0, 1.0), 0.0, 0.1).unwrap();
        assert_relative_eq!(x, Vector2::new(0.1, 1.0), epsilon = 1e-14);
        // constant input: x1 = u t²/2, x2 = u t
        let x = plant.step(&Vector2::zeros(), 2.0, 0.1).unwrap();
        assert_relative_eq!(x, Vector2::new(0.01, 0.2), epsilon = 1e-14);
    }

    #[test]
    fn hurwitz_plant_decays_in_lyapunov_norm() {
        let plant = LinearPlant::default();
        // AᵀM + MA = −I for the default A
        let m = Matrix2::new(1.5, 0.5, 0.5, 0.5);
        assert_relative_eq!(plant.a.transpose() * m + m * plant.a, -Matrix2::identity(), epsilon = 1e-12);
        let mut x = Vector2::new(1.0, -0.5);
        let mut v = x.dot(&(m * x));
        for _ in 0..2000 {
            x = plant.step(&x, 0.0, 0.01).unwrap();
            let next = x.dot(&(m * x));
            assert!(next < v);
            v = next;
        }
    }

    #[test]
    fn nonlinear_equilibrium_and_injection() {
        let plant = NonlinearTestPlant;
        assert_eq!(plant.step(&Vector2::zeros(), 0.0, 0.01).unwrap(), Vector2::zeros());
        let dt = 1e-4;
        let x = plant.step(&Vector2::zeros(), 1.0, dt).unwrap();
        assert_relative_eq!(x[1], dt, epsilon = 1e-8);
        assert!(x[0].abs() < dt * dt);
    }

    /// Reference solution from many tiny explicit Euler steps.
    fn euler_oracle(x: Vector2<f64>, u: f64, dt: f64, substeps: usize) -> Vector2<f64> {
        let h = dt / substeps as f64;
        let mut s = x;
        for _ in 0..substeps {
            let g = Vector2::new(-s[0] + s[1], -s[0] * s[1] - s[1] + s[0].sin());
            s += (g + Vector2::new(0.0, u)) * h;
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn nonlinear_step_matches_refined_euler(
            x1 in -2.0..2.0f64, x2 in -2.0..2.0f64, u in -3.0..3.0f64
        ) {
            let dt = 0.01;
            let x = Vector2::new(x1, x2);
            let rk = NonlinearTestPlant.step(&x, u, dt).unwrap();
            let reference = euler_oracle(x, u, dt, 200_000);
            // Euler with h = 5e-8 carries O(h·dt) ≈ 1e-9 error; the RK4 local error is O(dt⁵).
            prop_assert!((rk - reference).norm() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn plant_steps_are_deterministic(v in 0.0..40.0f64, torque in -300.0..300.0f64) {
            let p = EvParams::default();
            let s = EvState { t: 1.0, v };
            let a = ev_step(&p, &s, torque, 10.0, 1e-3).unwrap();
            let b = ev_step(&p, &s, torque, 10.0, 1e-3).unwrap();
            prop_assert_eq!(a.state.v.to_bits(), b.state.v.to_bits());
            prop_assert_eq!(a.power.to_bits(), b.power.to_bits());
        }

        #[test]
        fn power_sign_matches_torque_times_speed(v in 0.01..40.0f64, torque in -250.0..250.0f64) {
            let p = EvParams::default();
            let out = ev_step(&p, &EvState { t: 0.0, v }, torque, v, 1e-3).unwrap();
            if out.state.v > 0.0 && torque != 0.0 {
                prop_assert_eq!(out.power > 0.0, torque > 0.0);
            }
        }
    }
}
