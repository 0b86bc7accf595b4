//! Desired-speed profiles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamped desired speed, linearly interpolated between samples and
/// held constant outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    samples: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CycleRow {
    t_s: f64,
    v_d_mps: f64,
}

impl DriveCycle {
    /// Builds a cycle, enforcing strictly increasing time, non-negative
    /// speeds and equal first/last speed.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Cycle("need at least two samples".into()));
        }
        for (i, &(t, v)) in samples.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::Cycle(format!("sample {i} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::Cycle(format!("negative speed {v} at t = {t}")));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return Err(Error::Cycle(format!("time not strictly increasing at sample {i} (t = {t})")));
            }
        }
        let first = samples[0].1;
        let last = samples[samples.len() - 1].1;
        if (first - last).abs() > 1e-9 * first.abs().max(1.0) {
            return Err(Error::Cycle(format!("first speed {first} differs from last speed {last}")));
        }
        Ok(Self { samples })
    }

    /// Constant speed over `[0, duration]`.
    pub fn constant(speed: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::Cycle(format!("duration must be > 0, got {duration}")));
        }
        Self::new(vec![(0.0, speed), (duration, speed)])
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].0 {
            return s[0].1;
        }
        if t >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        let i = s.partition_point(|&(ts, _)| ts <= t);
        let (t0, v0) = s[i - 1];
        let (t1, v1) = s[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let header = reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["t_s", "v_d_mps"] {
            return Err(Error::Cycle(format!(
                "{}: expected header `t_s,v_d_mps`, found `{}`",
                path.display(),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for row in reader.deserialize() {
            let row: CycleRow = row?;
            samples.push((row.t_s, row.v_d_mps));
        }
        Self::new(samples)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for &(t_s, v_d_mps) in &self.samples {
            w.serialize(CycleRow { t_s, v_d_mps })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// One plateau of a multi-step profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub speed: f64,
    pub hold_s: f64,
}

/// Built-in cycle generators; `Csv` passes a recorded profile through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CycleSpec {
    /// Dwell at `v0`, accelerate to `v_cruise`, hold, decelerate back, dwell.
    Trapezoid {
        v0: f64,
        v_cruise: f64,
        accel: f64,
        decel: f64,
        cruise_s: f64,
        #[serde(default)]
        dwell_s: f64,
    },
    /// Start at `v0`, visit each plateau in turn, return to `v0`.
    MultiTrapezoid {
        v0: f64,
        accel: f64,
        decel: f64,
        plateaus: Vec<Plateau>,
        #[serde(default)]
        dwell_s: f64,
    },
    Constant { speed: f64, duration_s: f64 },
    Csv { path: String },
}

impl Default for CycleSpec {
    /// 60 s: 5 s standstill, 0 → 15 m/s at 1.5 m/s², 30 s cruise, back to rest, 5 s standstill.
    fn default() -> Self {
        CycleSpec::Trapezoid {
            v0: 0.0,
            v_cruise: 15.0,
            accel: 1.5,
            decel: 1.5,
            cruise_s: 30.0,
            dwell_s: 5.0,
        }
    }
}

fn push_point(samples: &mut Vec<(f64, f64)>, t: f64, v: f64) {
    match samples.last() {
        Some(&(tl, _)) if (t - tl).abs() < 1e-12 => {}
        _ => samples.push((t, v)),
    }
}

fn ramp_time(from: f64, to: f64, accel: f64, decel: f64) -> f64 {
    if to >= from {
        (to - from) / accel
    } else {
        (from - to) / decel
    }
}

fn check_params(v0: f64, accel: f64, decel: f64, dwell_s: f64, speeds: impl IntoIterator<Item = f64>) -> Result<()> {
    if !(accel > 0.0 && decel > 0.0) {
        return Err(Error::Cycle(format!("accel and decel must be > 0 (got {accel}, {decel})")));
    }
    if !(dwell_s >= 0.0) {
        return Err(Error::Cycle(format!("dwell must be >= 0, got {dwell_s}")));
    }
    for v in std::iter::once(v0).chain(speeds) {
        if !(v >= 0.0) {
            return Err(Error::Cycle(format!("parameters produce negative speed {v}")));
        }
    }
    Ok(())
}

fn plateau_profile(v0: f64, accel: f64, decel: f64, dwell_s: f64, plateaus: &[Plateau]) -> Result<DriveCycle> {
    check_params(v0, accel, decel, dwell_s, plateaus.iter().map(|p| p.speed))?;
    if plateaus.iter().any(|p| !(p.hold_s >= 0.0)) {
        return Err(Error::Cycle("plateau hold times must be >= 0".into()));
    }
    let mut samples = vec![(0.0, v0)];
    let mut t = dwell_s;
    push_point(&mut samples, t, v0);
    let mut v = v0;
    for p in plateaus {
        t += ramp_time(v, p.speed, accel, decel);
        push_point(&mut samples, t, p.speed);
        t += p.hold_s;
        push_point(&mut samples, t, p.speed);
        v = p.speed;
    }
    t += ramp_time(v, v0, accel, decel);
    push_point(&mut samples, t, v0);
    t += dwell_s;
    push_point(&mut samples, t, v0);
    DriveCycle::new(samples)
}

pub fn gen_cycle(spec: &CycleSpec) -> Result<DriveCycle> {
    match spec {
        &CycleSpec::Trapezoid {
            v0,
            v_cruise,
            accel,
            decel,
            cruise_s,
            dwell_s,
        } => plateau_profile(
            v0,
            accel,
            decel,
            dwell_s,
            &[Plateau {
                speed: v_cruise,
                hold_s: cruise_s,
            }],
        ),
        CycleSpec::MultiTrapezoid {
            v0,
            accel,
            decel,
            plateaus,
            dwell_s,
        } => plateau_profile(*v0, *accel, *decel, *dwell_s, plateaus),
        &CycleSpec::Constant { speed, duration_s } => {
            if speed < 0.0 {
                return Err(Error::Cycle(format!("parameters produce negative speed {speed}")));
            }
            DriveCycle::constant(speed, duration_s)
        }
        CycleSpec::Csv { path } => DriveCycle::read_csv(path),
    }
}
