//! Instantaneous cost ℓ(x, u) = C(x) + β u².

use nalgebra::{Matrix2, Vector2};

use crate::gains::GainSet;

/// Acceleration power: the battery-draw part of the net traction power.
pub fn p_accel(x2: f64) -> f64 {
    x2.max(0.0)
}

/// A running cost of the form C(x) + β u².
pub trait Cost {
    fn state_cost(&self, x: &Vector2<f64>) -> f64;

    fn beta(&self) -> f64;

    fn running_cost(&self, x: &Vector2<f64>, u: f64) -> f64 {
        self.state_cost(x) + self.beta() * u * u
    }
}

/// Speed-tracking and acceleration-power penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub q1: f64,
    pub q2: f64,
    pub beta: f64,
}

impl CostWeights {
    pub fn new(q1: f64, q2: f64, beta: f64) -> Self {
        Self { q1, q2, beta }
    }
}

impl From<&GainSet> for CostWeights {
    fn from(g: &GainSet) -> Self {
        Self::new(g.q1, g.q2, g.beta)
    }
}

impl Cost for CostWeights {
    /// q1·x1² + q2·max(x2, 0)².
    fn state_cost(&self, x: &Vector2<f64>) -> f64 {
        let pa = p_accel(x[1]);
        self.q1 * x[0] * x[0] + self.q2 * pa * pa
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

/// xᵀQx + β u², the cost of the linear verification plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCost {
    pub q: Matrix2<f64>,
    pub beta: f64,
}

impl Cost for QuadraticCost {
    fn state_cost(&self, x: &Vector2<f64>) -> f64 {
        x.dot(&(self.q * x))
    }

    fn beta(&self) -> f64 {
        self.beta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accel_power_branches() {
        assert_eq!(p_accel(0.0), 0.0);
        assert_eq!(p_accel(-5000.0), 0.0);
        assert_eq!(p_accel(3500.0), 3500.0);
    }

    #[test]
    fn state_cost_examples() {
        let unit = CostWeights::new(1.0, 1.0, 1.0);
        assert_eq!(unit.state_cost(&Vector2::zeros()), 0.0);
        assert_eq!(unit.state_cost(&Vector2::new(2.0, -5.0)), 4.0);
        let w = CostWeights::new(2.0, 0.5, 3.0);
        assert_eq!(w.state_cost(&Vector2::new(1.0, 3.0)), 6.5);
    }

    #[test]
    fn running_cost_examples() {
        let unit = CostWeights::new(1.0, 1.0, 1.0);
        assert_eq!(unit.running_cost(&Vector2::zeros(), 0.0), 0.0);
        assert_eq!(unit.running_cost(&Vector2::zeros(), 2.0), 4.0);
        let w = CostWeights::new(2.0, 0.5, 3.0);
        assert_eq!(w.running_cost(&Vector2::new(1.0, 3.0), 1.0), 9.5);
    }

    #[test]
    fn quadratic_cost_identity() {
        let c = QuadraticCost {
            q: Matrix2::identity(),
            beta: 1.0,
        };
        assert_eq!(c.running_cost(&Vector2::new(1.0, 2.0), 1.0), 6.0);
    }

    proptest! {
        #[test]
        fn running_cost_nonnegative_and_monotone(
            x1 in -50.0..50.0f64, x2 in -1e5..1e5f64, u in -300.0..300.0f64,
            q1 in 1e-3..10.0f64, q2 in 0.0..1.0f64, beta in 1e-3..10.0f64,
        ) {
            let w = CostWeights::new(q1, q2, beta);
            let x = Vector2::new(x1, x2);
            let l = w.running_cost(&x, u);
            prop_assert!(l >= 0.0);
            prop_assert!(w.running_cost(&x, 1.5 * u) >= l);
        }

        #[test]
        fn running_cost_zero_only_at_rest(x1 in -1.0..1.0f64, x2 in -1.0..1.0f64, u in -1.0..1.0f64) {
            let w = CostWeights::new(1.0, 1.0, 1.0);
            let l = w.running_cost(&Vector2::new(x1, x2), u);
            let at_rest = x1 == 0.0 && x2 <= 0.0 && u == 0.0;
            prop_assert_eq!(l == 0.0, at_rest);
        }
    }
}
