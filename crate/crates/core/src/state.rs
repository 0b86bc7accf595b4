use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// A controller measurement: speed error and net traction power, together with
/// the raw speeds they were derived from.
///
/// `x1` is always recomputed from the two speeds so it can never drift from
/// `v_v - v_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// Vehicle speed, m/s.
    pub v_v: f64,
    /// Desired speed, m/s.
    pub v_d: f64,
    /// Net traction power, W. Positive draws from the battery, negative recovers.
    pub x2: f64,
    /// Time, s.
    pub t: f64,
}

impl SystemState {
    pub fn new(t: f64, v_v: f64, v_d: f64, x2: f64) -> Self {
        Self { v_v, v_d, x2, t }
    }

    /// Speed error v_v - v_d, m/s.
    pub fn x1(&self) -> f64 {
        self.v_v - self.v_d
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    /// The controller's 2-vector view.
    pub fn vector(&self) -> Vector2<f64> {
        Vector2::new(self.x1(), self.x2)
    }

    pub fn is_finite(&self) -> bool {
        self.v_v.is_finite() && self.v_d.is_finite() && self.x2.is_finite() && self.t.is_finite()
    }
}

/// Input vector field h(x) = [0, 1]ᵀ, shared by every plant.
pub fn input_gain() -> Vector2<f64> {
    Vector2::new(0.0, 1.0)
}
