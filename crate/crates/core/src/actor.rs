//! Policy û(x) = −½β⁻¹hᵀφ'(x)ᵀŵ_a and its projected adaptation law.

use nalgebra::{Vector2, Vector3};

use crate::critic::basis_jacobian;
use crate::error::{Error, Result};
use crate::gains::GainSet;
use crate::state::input_gain;

#[derive(Debug, Clone, PartialEq)]
pub struct ActorState {
    pub w_hat: Vector3<f64>,
}

impl ActorState {
    pub fn new(w0: Vector3<f64>) -> Self {
        Self { w_hat: w0 }
    }
}

/// ∂û/∂ŵ_a = −½β⁻¹(φ'(x)h); the policy is linear in the weights.
pub fn control_gradient(x: &Vector2<f64>, beta: f64) -> Vector3<f64> {
    basis_jacobian(x) * input_gain() * (-0.5 / beta)
}

pub fn control(a: &ActorState, x: &Vector2<f64>, beta: f64) -> f64 {
    control_gradient(x, beta).dot(&a.w_hat)
}

/// One Euler step of the actor law followed by the norm clamp to w̄_a.
pub fn update(
    a: &ActorState,
    critic_weights: &Vector3<f64>,
    phi: &Vector3<f64>,
    x: &Vector2<f64>,
    delta_hjb: f64,
    g: &GainSet,
    dt: f64,
) -> Result<ActorState> {
    if !delta_hjb.is_finite() {
        return Err(Error::non_finite("actor delta_hjb"));
    }
    let grad = control_gradient(x, g.beta);
    let u_hat = grad.dot(&a.w_hat);
    // ∂F̂/∂û = h, so ŵ_cᵀφ'(∂F̂/∂û) is the critic's directional value slope.
    let slope = critic_weights.dot(&(basis_jacobian(x) * input_gain()));
    let bracket = grad * slope + grad * (g.beta * u_hat);
    let gain = 2.0 * g.k_a1 / (1.0 + phi.dot(phi)).sqrt();
    let w_dot = -bracket * (gain * delta_hjb) - (a.w_hat - critic_weights) * g.k_a2;

    let mut w_hat = a.w_hat + w_dot * dt;
    let n = w_hat.norm();
    if n > g.w_bar_a {
        w_hat *= g.w_bar_a / n;
    }
    Ok(ActorState { w_hat })
}
