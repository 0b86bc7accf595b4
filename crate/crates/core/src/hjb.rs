//! HJB residual δ = Ĵ_x F̂(x, û) + ℓ(x, û).

use nalgebra::{Vector2, Vector3};

use crate::cost::Cost;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRecord {
    pub delta_hjb: f64,
    /// ŵ_cᵀ (φ'(x) F̂).
    pub value_gradient_term: f64,
    /// C(x).
    pub state_cost_term: f64,
    /// β û².
    pub control_cost_term: f64,
}

/// `phi` is the regressor φ'(x)·F̂(x, û) already evaluated by the caller.
pub fn residual(
    critic_weights: &Vector3<f64>,
    phi: &Vector3<f64>,
    x: &Vector2<f64>,
    u_hat: f64,
    cost: &impl Cost,
) -> ResidualRecord {
    let value_gradient_term = critic_weights.dot(phi);
    let state_cost_term = cost.state_cost(x);
    let control_cost_term = cost.beta() * u_hat * u_hat;
    ResidualRecord {
        delta_hjb: value_gradient_term + state_cost_term + control_cost_term,
        value_gradient_term,
        state_cost_term,
        control_cost_term,
    }
}
