use serde::Serialize;

use crate::error::{Error, Result};

/// Battery energy split into drawn and recovered parts, J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    pub consumed: f64,
    pub recovered: f64,
}

impl EnergySplit {
    pub fn net(&self) -> f64 {
        self.consumed - self.recovered
    }
}

/// Trapezoidal integral of a uniformly sampled power trace, split into its
/// positive and negative parts. Intervals that cross zero are split at the
/// linear-interpolation crossing, so `consumed − recovered` equals the plain
/// trapezoidal integral of the trace.
pub fn integrate_energy(power: &[f64], dt: f64) -> Result<EnergySplit> {
    if power.is_empty() {
        return Err(Error::InvalidInput("empty power trace".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("sim.dt", "must be > 0"));
    }
    let mut consumed = 0.0;
    let mut recovered = 0.0;
    for w in power.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= 0.0 && b >= 0.0 {
            consumed += 0.5 * (a + b) * dt;
        } else if a <= 0.0 && b <= 0.0 {
            recovered -= 0.5 * (a + b) * dt;
        } else {
            let (pos, neg) = if a > 0.0 { (a, b) } else { (b, a) };
            let f_pos = pos / (pos - neg);
            let f_neg = neg / (neg - pos);
            consumed += 0.5 * pos * f_pos * dt;
            recovered += 0.5 * (-neg) * f_neg * dt;
        }
    }
    Ok(EnergySplit { consumed, recovered })
}

/// Plain trapezoidal integral.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum()
}

/// Per-run energy and tracking metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    #[serde(rename = "energy_consumed_J")]
    pub energy_consumed: f64,
    #[serde(rename = "energy_recovered_J")]
    pub energy_recovered: f64,
    #[serde(rename = "net_energy_J")]
    pub net_energy: f64,
    #[serde(rename = "rms_tracking_error_mps")]
    pub rms_tracking_error: f64,
    /// Recovered-energy change against a baseline run, percent; `None` for a standalone run.
    #[serde(rename = "recovery_improvement_pct")]
    pub recovery_improvement_vs_baseline: Option<f64>,
}

impl EnergyReport {
    pub fn from_trace(power: &[f64], speed_error: &[f64], dt: f64) -> Result<Self> {
        let split = integrate_energy(power, dt)?;
        let rms = if speed_error.is_empty() {
            0.0
        } else {
            (speed_error.iter().map(|e| e * e).sum::<f64>() / speed_error.len() as f64).sqrt()
        };
        Ok(Self {
            energy_consumed: split.consumed,
            energy_recovered: split.recovered,
            net_energy: split.net(),
            rms_tracking_error: rms,
            recovery_improvement_vs_baseline: None,
        })
    }

    pub fn with_baseline(mut self, baseline: &EnergyReport) -> Self {
        self.recovery_improvement_vs_baseline = Some(percent_change(self.energy_recovered, baseline.energy_recovered));
        self
    }
}

/// `(value − reference) / |reference|` in percent; 0 when both are zero.
pub fn percent_change(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(value)
        }
    } else {
        100.0 * (value - reference) / reference.abs()
    }
}
