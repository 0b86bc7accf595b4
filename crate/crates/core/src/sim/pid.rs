use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed-loop PID gains; the output is motor torque in N·m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral contribution ki·∫e, N·m.
    pub integral_clamp: f64,
}

impl Default for PidGains {
    fn default() -> Self {
        Self {
            kp: 600.0,
            ki: 60.0,
            kd: 10.0,
            integral_clamp: 100.0,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("pid.kp", self.kp), ("pid.ki", self.ki), ("pid.kd", self.kd)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(key, format!("must be >= 0, got {v}")));
            }
        }
        if self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0 {
            return Err(Error::invalid("pid.kp", "at least one PID gain must be positive"));
        }
        if !(self.integral_clamp > 0.0) {
            return Err(Error::invalid("pid.integral_clamp", "must be > 0"));
        }
        Ok(())
    }
}

/// Discrete PID with a clamped integral term and a backward-difference derivative.
#[derive(Debug, Clone)]
pub struct Pid {
    gains: PidGains,
    integral: f64,
    prev_error: Option<f64>,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            prev_error: None,
        }
    }

    /// Control for tracking error `e = v_d − v_v` over a step of `dt`.
    pub fn update(&mut self, e: f64, dt: f64) -> f64 {
        let g = &self.gains;
        self.integral += e * dt;
        if g.ki > 0.0 {
            let lim = g.integral_clamp / g.ki;
            self.integral = self.integral.clamp(-lim, lim);
        }
        let de = self.prev_error.map_or(0.0, |p| (e - p) / dt);
        self.prev_error = Some(e);
        g.kp * e + g.ki * self.integral + g.kd * de
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_error_zero_output() {
        let mut pid = Pid::new(PidGains::default());
        for _ in 0..100 {
            assert_eq!(pid.update(0.0, 1e-3), 0.0);
        }
    }

    #[test]
    fn proportional_only() {
        let mut pid = Pid::new(PidGains {
            kp: 600.0,
            ki: 0.0,
            kd: 0.0,
            integral_clamp: 100.0,
        });
        assert_eq!(pid.update(0.5, 1e-3), 300.0);
        assert_eq!(pid.update(0.5, 1e-3), 300.0);
    }

    #[test]
    fn integral_is_clamped() {
        let mut pid = Pid::new(PidGains {
            kp: 0.0,
            ki: 60.0,
            kd: 0.0,
            integral_clamp: 100.0,
        });
        let mut u = 0.0;
        for _ in 0..100_000 {
            u = pid.update(10.0, 1e-3);
        }
        assert!((u - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_all_zero_gains() {
        let g = PidGains {
            kp: 0.0,
            ki: 0.0,
            kd: 0.0,
            integral_clamp: 1.0,
        };
        assert!(g.validate().is_err());
    }
}
