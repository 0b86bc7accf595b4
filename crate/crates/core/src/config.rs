//! TOML configuration: every gain, plant parameter and harness policy.
//!
//! All keys are optional. An empty file yields the published gains and the
//! documented defaults.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::cycle::CycleSpec;
use crate::error::{Error, Result};
use crate::gains::{GainConstants, GainSet, SignMode};
use crate::plant::{EvParams, LinearPlant};
use crate::sim::{
    Exploration, LqrScenario, PidGains, PlantSelector, Scenario, SignalScale, EV_W0, TEST_PLANT_W0,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub cost: CostSection,
    pub actor: ActorSection,
    pub critic: CriticSection,
    pub ident: IdentSection,
    pub proj: ProjSection,
    pub sim: SimSection,
    pub plant: EvParams,
    pub ev: EvSection,
    pub lqr: LqrSection,
    pub nltest: NltestSection,
    pub explore: ExploreSection,
    pub pid: PidGains,
    pub cycle: CycleSpec,
    pub analysis: GainConstants,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            cost: CostSection::default(),
            actor: ActorSection::default(),
            critic: CriticSection::default(),
            ident: IdentSection::default(),
            proj: ProjSection::default(),
            sim: SimSection::default(),
            plant: EvParams::default(),
            ev: EvSection::default(),
            lqr: LqrSection::default(),
            nltest: NltestSection::default(),
            explore: ExploreSection::default(),
            pid: PidGains::default(),
            cycle: CycleSpec::default(),
            analysis: GainConstants::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSection {
    pub q1: f64,
    pub q2: f64,
    pub beta: f64,
}

impl Default for CostSection {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            q1: g.q1,
            q2: g.q2,
            beta: g.beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActorSection {
    pub k_a1: f64,
    pub k_a2: f64,
}

impl Default for ActorSection {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            k_a1: g.k_a1,
            k_a2: g.k_a2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticSection {
    pub k_c1: f64,
    pub k_c2: f64,
    pub kappa: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    /// Initial critic weights on the test plants; the actor starts from the
    /// same values. The EV plant uses `ev.w0`.
    pub w0: [f64; 3],
}

impl Default for CriticSection {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            k_c1: g.k_c1,
            k_c2: g.k_c2,
            kappa: g.kappa,
            p0: g.cov_lower,
            p1: g.cov_upper,
            w0: TEST_PLANT_W0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentSection {
    pub p1: f64,
    pub p2: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub upsilon_scale: f64,
    #[serde(rename = "Lg")]
    pub lg: usize,
    pub sgn_eps: f64,
    pub pure_sgn: bool,
}

impl Default for IdentSection {
    fn default() -> Self {
        let g = GainSet::default();
        Self {
            p1: g.p1,
            p2: g.p2,
            alpha: g.alpha,
            gamma: g.gamma,
            upsilon_scale: 0.1,
            lg: g.hidden,
            sgn_eps: 1e-3,
            pure_sgn: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjSection {
    pub w_bar_a: f64,
    pub w_bar_c: f64,
    pub w_bar_g: f64,
    pub v_bar_g: f64,
}

impl Default for ProjSection {
    fn default() -> Self {
        Self {
            w_bar_a: 100.0,
            w_bar_c: 100.0,
            w_bar_g: 100.0,
            v_bar_g: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub plant: PlantSelector,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            plant: PlantSelector::Ev,
        }
    }
}

/// Linear verification plant `ẋ = A x + B u` with state cost `xᵀ Q x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrSection {
    /// Row-major.
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    /// Row-major, symmetric.
    pub q: [[f64; 2]; 2],
    pub x0: [f64; 2],
}

impl Default for LqrSection {
    fn default() -> Self {
        let s = LqrScenario::default();
        Self {
            a: [[s.plant.a[(0, 0)], s.plant.a[(0, 1)]], [s.plant.a[(1, 0)], s.plant.a[(1, 1)]]],
            b: [s.plant.b[0], s.plant.b[1]],
            q: [[1.0, 0.0], [0.0, 1.0]],
            x0: [s.x0[0], s.x0[1]],
        }
    }
}

/// Controller-side units and initialization on the EV plant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvSection {
    /// m/s per controller unit of x1.
    pub speed_scale: f64,
    /// W per controller unit of x2.
    pub power_scale: f64,
    /// N·m per controller unit of u.
    pub torque_scale: f64,
    pub w0: [f64; 3],
}

impl Default for EvSection {
    fn default() -> Self {
        let s = SignalScale::ev();
        Self {
            speed_scale: s.speed,
            power_scale: s.power,
            torque_scale: s.torque,
            w0: EV_W0,
        }
    }
}

impl EvSection {
    fn scale(&self) -> SignalScale {
        SignalScale {
            speed: self.speed_scale,
            power: self.power_scale,
            torque: self.torque_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NltestSection {
    pub x0: [f64; 2],
}

impl Default for NltestSection {
    fn default() -> Self {
        Self { x0: [0.5, -0.5] }
    }
}

pub type ExploreSection = Exploration;

fn matrix(rows: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
}

impl Config {
    /// Parses TOML text. `path` is only used in error messages.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::ConfigSyntax {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("config serialization: {e}")))
    }

    /// Checks every section; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        self.gains().validate()?;
        self.analysis.validate()?;
        self.plant.validate()?;
        self.pid.validate()?;
        self.explore.validate("explore")?;
        self.ev.scale().validate("ev")?;
        let finite = |key: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::invalid(key, "must be finite"))
            }
        };
        finite("critic.w0", &self.critic.w0)?;
        finite("ev.w0", &self.ev.w0)?;
        finite("lqr.a", self.lqr.a.as_flattened())?;
        finite("lqr.b", &self.lqr.b)?;
        finite("lqr.q", self.lqr.q.as_flattened())?;
        finite("lqr.x0", &self.lqr.x0)?;
        finite("nltest.x0", &self.nltest.x0)?;
        let q = matrix(&self.lqr.q);
        if (q - q.transpose()).amax() > 0.0 {
            return Err(Error::invalid("lqr.q", "must be symmetric"));
        }
        if q.symmetric_eigenvalues().min() < 0.0 {
            return Err(Error::invalid("lqr.q", "must be positive semi-definite"));
        }
        Ok(())
    }

    pub fn gains(&self) -> GainSet {
        let mut g = GainSet {
            q1: self.cost.q1,
            q2: self.cost.q2,
            beta: self.cost.beta,
            k_a1: self.actor.k_a1,
            k_a2: self.actor.k_a2,
            k_c1: self.critic.k_c1,
            k_c2: self.critic.k_c2,
            kappa: self.critic.kappa,
            cov_lower: self.critic.p0,
            cov_upper: self.critic.p1,
            p1: self.ident.p1,
            p2: self.ident.p2,
            alpha: self.ident.alpha,
            gamma: self.ident.gamma,
            hidden: self.ident.lg,
            upsilon_w: DMatrix::zeros(0, 0),
            upsilon_v: Matrix2::zeros(),
            w_bar_a: self.proj.w_bar_a,
            w_bar_c: self.proj.w_bar_c,
            w_bar_g: self.proj.w_bar_g,
            v_bar_g: self.proj.v_bar_g,
            sign: if self.ident.pure_sgn {
                SignMode::Pure
            } else {
                SignMode::Smooth {
                    width: self.ident.sgn_eps,
                }
            },
            dt: self.sim.dt,
        };
        g.set_upsilon_scale(self.ident.upsilon_scale);
        g
    }

    pub fn constants(&self) -> GainConstants {
        self.analysis
    }

    /// Scenario for the configured plant, or for `plant` when given.
    pub fn scenario(&self, plant: Option<PlantSelector>) -> Scenario {
        let plant = plant.unwrap_or(self.sim.plant);
        let lqr = LqrScenario {
            plant: LinearPlant {
                a: matrix(&self.lqr.a),
                b: Vector2::new(self.lqr.b[0], self.lqr.b[1]),
            },
            q: matrix(&self.lqr.q),
            x0: Vector2::from(self.lqr.x0),
        };
        let (w0, scale) = match plant {
            PlantSelector::Ev => (self.ev.w0, self.ev.scale()),
            _ => (self.critic.w0, SignalScale::identity()),
        };
        Scenario {
            plant,
            ev: self.plant,
            lqr,
            nltest_x0: Vector2::from(self.nltest.x0),
            explore: self.explore,
            critic_w0: Vector3::from(w0),
            scale,
            pid: self.pid,
        }
    }
}

/// Reads and validates a config file. Missing files, TOML syntax errors and
/// out-of-range values are reported as distinct errors.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::ConfigNotFound {
            path: PathBuf::from(path),
        },
        _ => Error::io(path, e),
    })?;
    Config::from_toml(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config> {
        Config::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_config_gives_published_gains() {
        let g = parse("").unwrap().gains();
        assert_eq!(g, GainSet::default());
        assert_eq!((g.k_a1, g.k_a2, g.k_c1, g.k_c2, g.kappa), (10.0, 50.0, 11.0, 30.0, 0.005));
        assert_eq!((g.p1, g.p2, g.alpha, g.gamma), (80.0, 0.2, 300.0, 5.0));
    }

    #[test]
    fn single_override() {
        let cfg = parse("[critic]\nkappa = 0.01\n").unwrap();
        let g = cfg.gains();
        assert_eq!(g.kappa, 0.01);
        assert_eq!(GainSet { kappa: 0.005, ..g }, GainSet::default());
    }

    #[test]
    fn zero_dt_names_key() {
        match parse("[sim]\ndt = 0.0\n") {
            Err(Error::InvalidValue { key, .. }) => assert_eq!(key, "sim.dt"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_and_unknown_keys_are_syntax_errors() {
        assert!(matches!(parse("[critic\n"), Err(Error::ConfigSyntax { .. })));
        assert!(matches!(parse("[critic]\nkapa = 1.0\n"), Err(Error::ConfigSyntax { .. })));
    }

    #[test]
    fn missing_file_is_distinct() {
        let err = load_config("/definitely/not/here.toml").unwrap_err();
        assert!(matches!(err, Error::ConfigNotFound { .. }));
        assert!(err.to_string().contains("/definitely/not/here.toml"));
    }

    #[test]
    fn renamed_keys() {
        let cfg = parse("[critic]\nP0 = 0.1\nP1 = 2.0\n[ident]\nLg = 7\nupsilon_scale = 0.0\npure_sgn = true\n").unwrap();
        let g = cfg.gains();
        assert_eq!((g.cov_lower, g.cov_upper, g.hidden), (0.1, 2.0, 7));
        assert_eq!(g.upsilon_w.nrows(), 8);
        assert_eq!(g.upsilon_w.norm(), 0.0);
        assert_eq!(g.sign, SignMode::Pure);
    }

    #[test]
    fn round_trip_default_and_customised() {
        let base = Config::default();
        let text = base.to_toml().unwrap();
        assert_eq!(parse(&text).unwrap(), base);

        let mut custom = Config {
            seed: 42,
            ..Config::default()
        };
        custom.cost.q2 = 3.3e-9;
        custom.ev.w0 = [1.0, 0.5, 0.25];
        custom.explore = Exploration::off();
        custom.cycle = CycleSpec::Constant {
            speed: 3.0,
            duration_s: 12.5,
        };
        custom.analysis = GainConstants::uniform(0.001);
        let text = custom.to_toml().unwrap();
        assert_eq!(parse(&text).unwrap(), custom);
    }

    #[test]
    fn scenario_picks_plant_specific_units_and_weights() {
        let cfg = parse("[critic]\nw0 = [1.0, 1.0, 1.0]\n[ev]\npower_scale = 5e4\n").unwrap();
        let s = cfg.scenario(Some(PlantSelector::Lqr));
        assert_eq!(s.critic_w0, Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(s.scale, SignalScale::identity());
        let ev = cfg.scenario(None);
        assert_eq!(ev.plant, PlantSelector::Ev);
        assert_eq!(ev.critic_w0, Vector3::from(EV_W0));
        assert_eq!(ev.scale.power, 5e4);
        assert_eq!(ev.scale.torque, 250.0);
    }

    #[test]
    fn default_scenarios_match_library_defaults() {
        let cfg = Config::default();
        for p in [PlantSelector::Ev, PlantSelector::Lqr, PlantSelector::Nltest] {
            assert_eq!(cfg.scenario(Some(p)), Scenario::new(p));
        }
    }

    #[test]
    fn zero_scale_rejected() {
        let err = parse("[ev]\ntorque_scale = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("ev.torque_scale"));
    }

    #[test]
    fn asymmetric_q_rejected() {
        let err = parse("[lqr]\nq = [[1.0, 0.5], [0.0, 1.0]]\n").unwrap_err();
        assert!(err.to_string().contains("lqr.q"));
    }
}
