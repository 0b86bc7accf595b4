use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{ev_step, EvParams, EvState, LinearPlant, NonlinearTestPlant};

/// Which plant closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlantSelector {
    #[default]
    Ev,
    Lqr,
    Nltest,
}

impl FromStr for PlantSelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ev" => Ok(Self::Ev),
            "lqr" => Ok(Self::Lqr),
            "nltest" => Ok(Self::Nltest),
            other => Err(Error::invalid("sim.plant", format!("unknown plant `{other}` (ev|lqr|nltest)"))),
        }
    }
}

impl fmt::Display for PlantSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ev => "ev",
            Self::Lqr => "lqr",
            Self::Nltest => "nltest",
        })
    }
}

/// Parameters of the linear verification scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqrScenario {
    pub plant: LinearPlant,
    pub q: Matrix2<f64>,
    pub x0: Vector2<f64>,
}

impl Default for LqrScenario {
    fn default() -> Self {
        Self {
            plant: LinearPlant::default(),
            q: Matrix2::identity(),
            x0: Vector2::new(1.0, 0.0),
        }
    }
}

/// A plant instance being stepped by the simulation loop.
#[derive(Debug, Clone)]
pub(crate) enum LoopPlant {
    Ev { params: EvParams, state: EvState, power: f64, v_d: f64 },
    Linear { plant: LinearPlant, x: Vector2<f64> },
    Nonlinear { plant: NonlinearTestPlant, x: Vector2<f64> },
}

/// What the logger needs from the plant at one instant.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Reading {
    pub x: Vector2<f64>,
    pub v_v: f64,
    pub v_d: f64,
    pub p_batt: f64,
}

impl LoopPlant {
    pub fn ev(params: EvParams, v0: f64, v_d0: f64) -> Self {
        LoopPlant::Ev {
            params,
            state: EvState { t: 0.0, v: v0 },
            power: 0.0,
            v_d: v_d0,
        }
    }

    pub fn torque_limit(&self) -> Option<f64> {
        match self {
            LoopPlant::Ev { params, .. } => Some(params.max_torque),
            _ => None,
        }
    }

    pub fn read(&self) -> Reading {
        match *self {
            LoopPlant::Ev { state, power, v_d, .. } => Reading {
                x: Vector2::new(state.v - v_d, power),
                v_v: state.v,
                v_d,
                p_batt: power,
            },
            LoopPlant::Linear { x, .. } | LoopPlant::Nonlinear { x, .. } => Reading {
                x,
                v_v: x[0],
                v_d: 0.0,
                p_batt: 0.0,
            },
        }
    }

    /// Holds `u` over one step; `v_d_next` is the desired speed at the end of it.
    pub fn step(&mut self, u: f64, v_d_next: f64, dt: f64) -> Result<()> {
        match self {
            LoopPlant::Ev { params, state, power, v_d } => {
                let out = ev_step(params, state, u, v_d_next, dt)?;
                *state = out.state;
                *power = out.power;
                *v_d = v_d_next;
            }
            LoopPlant::Linear { plant, x } => *x = plant.step(x, u, dt)?,
            LoopPlant::Nonlinear { plant, x } => *x = plant.step(x, u, dt)?,
        }
        Ok(())
    }
}

/// Guard against run-away simulations.
pub(crate) const DIVERGENCE_LIMIT: f64 = 1e9;

pub(crate) fn guard(quantity: &str, value: f64, step: usize, time: f64) -> Result<()> {
    if value.is_finite() && value <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(Error::Divergence {
            quantity: quantity.to_string(),
            step,
            time,
            value,
        })
    }
}
