use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero-mean uniform control dither used to excite the learning laws.
///
/// A fresh value uniform on `[−a(t), a(t)]` is drawn every `hold_s` seconds
/// and held in between. The amplitude `a(t)` decays linearly from
/// `amplitude` to zero at `decay_fraction` of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exploration {
    pub amplitude: f64,
    pub decay_fraction: f64,
    pub hold_s: f64,
}

impl Default for Exploration {
    fn default() -> Self {
        Self {
            amplitude: 5.0,
            decay_fraction: 0.3,
            hold_s: 0.5,
        }
    }
}

impl Exploration {
    pub fn off() -> Self {
        Self {
            amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::invalid(format!("{section}.amplitude"), "must be >= 0"));
        }
        if !(self.decay_fraction > 0.0 && self.decay_fraction <= 1.0) {
            return Err(Error::invalid(format!("{section}.decay_fraction"), "must lie in (0, 1]"));
        }
        if !(self.hold_s.is_finite() && self.hold_s >= 0.0) {
            return Err(Error::invalid(format!("{section}.hold_s"), "must be >= 0"));
        }
        Ok(())
    }
}

/// Seeded realization of an [`Exploration`] policy over a run of fixed length.
#[derive(Debug, Clone)]
pub struct Dither {
    rng: ChaCha8Rng,
    policy: Exploration,
    hold_steps: usize,
    decay_steps: f64,
    draw: f64,
}

impl Dither {
    pub fn new(policy: Exploration, total_steps: usize, dt: f64, seed: u64) -> Self {
        let hold_steps = ((policy.hold_s / dt).round() as usize).max(1);
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            policy,
            hold_steps,
            decay_steps: policy.decay_fraction * total_steps as f64,
            draw: 0.0,
        }
    }

    pub fn amplitude_at(&self, step: usize) -> f64 {
        if self.decay_steps <= 0.0 {
            return 0.0;
        }
        self.policy.amplitude * (1.0 - step as f64 / self.decay_steps).max(0.0)
    }

    /// Dither for step `step`; steps must be visited in increasing order.
    pub fn sample(&mut self, step: usize) -> f64 {
        if step.is_multiple_of(self.hold_steps) {
            self.draw = self.rng.random_range(-1.0..=1.0);
        }
        self.amplitude_at(step) * self.draw
    }
}
