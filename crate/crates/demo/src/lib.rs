//! Browser front end: each export takes a TOML config (empty for defaults)
//! and returns JSON for the page in `www/` to draw.

use std::path::Path;

use aci_core::config::Config;
use aci_core::cycle::gen_cycle;
use aci_core::cycle::DriveCycle;
use aci_core::gains::{validate_actor_critic_conditions, validate_identifier_conditions};
use aci_core::runner::{riccati_oracle, LQR_TOLERANCE};
use aci_core::sim::{self, Baseline, ComparisonReport, PlantSelector, TrajectoryLog};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn parse(config_toml: &str) -> Result<Config, String> {
    Config::from_toml(config_toml, Path::new("<page>")).map_err(|e| e.to_string())
}

/// Every `stride`-th row plus the last one.
fn decimate(log: &TrajectoryLog, points: usize) -> Vec<usize> {
    let n = log.len();
    let stride = n.div_ceil(points.max(2)).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

#[derive(Serialize)]
struct Trace {
    t: Vec<f64>,
    v_d: Vec<f64>,
    v: Vec<f64>,
    u: Vec<f64>,
    p_batt: Vec<f64>,
}

impl Trace {
    fn sample(log: &TrajectoryLog, idx: &[usize]) -> Self {
        let pick = |f: fn(&sim::TrajectoryRow) -> f64| idx.iter().map(|&i| f(&log.rows[i])).collect();
        Trace {
            t: pick(|r| r.t),
            v_d: pick(|r| r.v_d),
            v: pick(|r| r.v_v),
            u: pick(|r| r.u),
            p_batt: pick(|r| r.p_batt),
        }
    }
}

#[derive(Serialize)]
struct CompareResult {
    report: ComparisonReport,
    aci: Trace,
    pid: Trace,
}

/// ACI against the PID baseline on the configured EV cycle.
pub fn compare_json(config_toml: &str, seed: u64, points: usize) -> Result<String, String> {
    let cfg = parse(config_toml)?;
    let cycle = gen_cycle(&cfg.cycle).map_err(|e| e.to_string())?;
    let scenario = cfg.scenario(Some(PlantSelector::Ev));
    let cmp = sim::compare(&cycle, &cfg.gains(), &scenario, seed, Baseline::Pid).map_err(|e| e.to_string())?;
    let idx = decimate(&cmp.aci_log, points);
    let out = CompareResult {
        report: cmp.report,
        aci: Trace::sample(&cmp.aci_log, &idx),
        pid: Trace::sample(&cmp.baseline_log, &idx),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct LqrResult {
    t: Vec<f64>,
    /// Critic weights, one `[w1, w2, w3]` per sample.
    w_c: Vec<[f64; 3]>,
    oracle: [f64; 3],
    relative_error: f64,
    tolerance: f64,
    resets: usize,
}

/// Critic weights learned on the linear test plant, sampled over time, with the Riccati target.
pub fn lqr_json(config_toml: &str, duration: f64, seed: u64, points: usize) -> Result<String, String> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(format!("duration must be > 0, got {duration}"));
    }
    let cfg = parse(config_toml)?;
    let oracle = riccati_oracle(&cfg).map_err(|e| e.to_string())?.critic_weights();
    let scenario = cfg.scenario(Some(PlantSelector::Lqr));
    let cycle = DriveCycle::constant(0.0, duration).map_err(|e| e.to_string())?;
    let gains = cfg.gains();
    let steps = (duration / gains.dt).round() as usize;
    let stride = steps.div_ceil(points.max(2)).max(1);
    let (mut t, mut w_c) = (Vec::new(), Vec::new());
    let out = sim::run_aci_observed(&cycle, &gains, &scenario, seed, |k, time, c| {
        if k % stride == 0 || k == steps {
            t.push(time);
            w_c.push(c.critic.w_hat.into());
        }
    })
    .map_err(|e| e.to_string())?;
    let learned = out.controller.critic.w_hat;
    let result = LqrResult {
        t,
        w_c,
        oracle: oracle.into(),
        relative_error: (learned - oracle).norm() / oracle.norm(),
        tolerance: LQR_TOLERANCE,
        resets: out.controller.critic.reset_count,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

/// Both sufficient-condition reports for the configured gains and `[analysis]` constants.
pub fn validate_json(config_toml: &str) -> Result<String, String> {
    let cfg = parse(config_toml)?;
    let (g, c) = (cfg.gains(), cfg.constants());
    let reports = [
        validate_identifier_conditions(&g, &c).map_err(|e| e.to_string())?,
        validate_actor_critic_conditions(&g, &c).map_err(|e| e.to_string())?,
    ];
    serde_json::to_string(&reports).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn compare(config_toml: &str, seed: u32, points: u32) -> Result<String, JsError> {
    compare_json(config_toml, seed.into(), points as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lqr(config_toml: &str, duration: f64, seed: u32, points: u32) -> Result<String, JsError> {
    lqr_json(config_toml, duration, seed.into(), points as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn validate(config_toml: &str) -> Result<String, JsError> {
    validate_json(config_toml).map_err(|e| JsError::new(&e))
}
