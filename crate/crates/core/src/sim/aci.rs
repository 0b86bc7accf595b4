//! Closed actor-critic-identifier loop.

use nalgebra::{Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::actor::{self, ActorState};
use crate::cost::Cost;
use crate::critic::{self, CriticState};
use crate::error::Result;
use crate::gains::GainSet;
use crate::hjb::{self, ResidualRecord};
use crate::identifier::{self, IdentifierState};
use crate::state::input_gain;

/// Everything the loop computed in one controller step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AciStep {
    /// Policy output before exploration and saturation.
    pub u_hat: f64,
    /// Control handed to the plant.
    pub u_applied: f64,
    pub residual: ResidualRecord,
    pub x_tilde: Vector2<f64>,
    /// Identifier estimate of ẋ under the applied control.
    pub x_hat_dot: Vector2<f64>,
}

/// Owns the three approximators and advances them once per step.
#[derive(Debug, Clone)]
pub struct AciController<C> {
    pub gains: GainSet,
    pub cost: C,
    pub critic: CriticState,
    pub actor: ActorState,
    pub identifier: IdentifierState,
    /// Saturation applied between the policy and the plant.
    pub control_limit: Option<f64>,
}

impl<C: Cost> AciController<C> {
    /// Actor starts equal to the critic; the identifier estimate starts at
    /// the first measurement with random input weights from `seed`.
    pub fn new(gains: GainSet, cost: C, critic_w0: Vector3<f64>, x0: Vector2<f64>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let identifier = IdentifierState::new(gains.hidden, x0, x0, &mut rng);
        Self {
            critic: CriticState::new(critic_w0, &gains),
            actor: ActorState::new(critic_w0),
            identifier,
            gains,
            cost,
            control_limit: None,
        }
    }

    pub fn with_control_limit(mut self, limit: Option<f64>) -> Self {
        self.control_limit = limit;
        self
    }

    /// One controller step for measurement `x`, adding `dither` to the policy.
    ///
    /// Order: estimation error, RISE term, the control-free part of F̂, the
    /// policy, F̂ completed at û (learning) and at the applied control
    /// (estimation), regressor, HJB residual, simultaneous weight updates,
    /// then the Euler advance of x̂ and ν.
    pub fn step(&mut self, x: &Vector2<f64>, dither: f64) -> Result<AciStep> {
        let g = &self.gains;
        let dt = g.dt;
        let h = input_gain();

        let x_tilde = x - self.identifier.x_hat;
        let (r_t, nu_next) = identifier::rise_feedback(&self.identifier, &x_tilde, g, dt)?;
        let uncontrolled = identifier::f_hat(&self.identifier, 0.0, &r_t);

        let u_hat = actor::control(&self.actor, x, g.beta);
        let commanded = u_hat + dither;
        let u_applied = match self.control_limit {
            Some(limit) => commanded.clamp(-limit, limit),
            None => commanded,
        };
        let f_policy = uncontrolled + h * u_hat;
        let x_hat_dot = uncontrolled + h * u_applied;

        let phi = critic::regressor(x, &f_policy);
        let residual = hjb::residual(&self.critic.w_hat, &phi, x, u_hat, &self.cost);
        let delta = residual.delta_hjb;

        let critic_next = critic::update(&self.critic, &self.actor.w_hat, &phi, delta, g, dt)?;
        let actor_next = actor::update(&self.actor, &self.critic.w_hat, &phi, x, delta, g, dt)?;
        let mut ident_next = identifier::update_weights(&self.identifier, &x_tilde, &x_hat_dot, g, dt)?;
        ident_next.nu = nu_next;
        ident_next.advance_estimate(&x_hat_dot, dt);

        self.critic = critic_next;
        self.actor = actor_next;
        self.identifier = ident_next;
        Ok(AciStep {
            u_hat,
            u_applied,
            residual,
            x_tilde,
            x_hat_dot,
        })
    }
}
