//! Controller gains and the sufficient gain conditions for identifier
//! convergence and actor-critic boundedness.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use crate::error::{Error, Result};

/// Treatment of the discontinuous sign term in the RISE integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignMode {
    /// `tanh(s / width)`.
    Smooth { width: f64 },
    /// Exact signum, 0 at 0.
    Pure,
}

impl SignMode {
    pub fn apply(&self, s: f64) -> f64 {
        match *self {
            SignMode::Smooth { width } => (s / width).tanh(),
            SignMode::Pure => {
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Every tunable constant of the actor-critic-identifier loop.
///
/// Defaults reproduce the published NN structure and gains; cost weights,
/// covariance bounds and projection radii have no published values and use
/// the documented defaults instead.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    pub q1: f64,
    pub q2: f64,
    pub beta: f64,
    pub k_a1: f64,
    pub k_a2: f64,
    pub k_c1: f64,
    pub k_c2: f64,
    pub kappa: f64,
    /// Covariance reset floor P0.
    pub cov_lower: f64,
    /// Covariance reset value and ceiling P1.
    pub cov_upper: f64,
    pub p1: f64,
    pub p2: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Number of hidden identifier units L_g.
    pub hidden: usize,
    /// (L_g+1)×(L_g+1) output-weight adaptation matrix.
    pub upsilon_w: DMatrix<f64>,
    /// 2×2 input-weight adaptation matrix.
    pub upsilon_v: Matrix2<f64>,
    pub w_bar_a: f64,
    pub w_bar_c: f64,
    pub w_bar_g: f64,
    pub v_bar_g: f64,
    pub sign: SignMode,
    pub dt: f64,
}

impl Default for GainSet {
    fn default() -> Self {
        let hidden = 5;
        Self {
            q1: 1.0,
            q2: 1e-8,
            beta: 1.0,
            k_a1: 10.0,
            k_a2: 50.0,
            k_c1: 11.0,
            k_c2: 30.0,
            kappa: 0.005,
            cov_lower: 0.05,
            cov_upper: 1.0,
            p1: 80.0,
            p2: 0.2,
            alpha: 300.0,
            gamma: 5.0,
            hidden,
            upsilon_w: DMatrix::identity(hidden + 1, hidden + 1) * 0.1,
            upsilon_v: Matrix2::identity() * 0.1,
            w_bar_a: 100.0,
            w_bar_c: 100.0,
            w_bar_g: 100.0,
            v_bar_g: 100.0,
            sign: SignMode::Smooth { width: 1e-3 },
            dt: 1e-3,
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(key, format!("must be finite and >= 0, got {v}")))
    }
}

/// Symmetric and positive semi-definite; the zero matrix freezes adaptation.
fn adaptation_matrix(key: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(key, "must be a finite square matrix"));
    }
    if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::invalid(key, "must be symmetric"));
    }
    let min_eig = m.clone().symmetric_eigenvalues().min();
    if min_eig < 0.0 {
        return Err(Error::invalid(key, format!("must be positive semi-definite, min eigenvalue {min_eig}")));
    }
    Ok(())
}

impl GainSet {
    /// Uniform scaling of both adaptation matrices, Υ = scale·I.
    pub fn set_upsilon_scale(&mut self, scale: f64) {
        self.upsilon_w = DMatrix::identity(self.hidden + 1, self.hidden + 1) * scale;
        self.upsilon_v = Matrix2::identity() * scale;
    }

    /// Checks the invariants. Learning rates may be zero (adaptation frozen);
    /// every structural gain must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        non_negative("cost.q1", self.q1)?;
        non_negative("cost.q2", self.q2)?;
        positive("cost.beta", self.beta)?;
        non_negative("actor.k_a1", self.k_a1)?;
        non_negative("actor.k_a2", self.k_a2)?;
        non_negative("critic.k_c1", self.k_c1)?;
        non_negative("critic.k_c2", self.k_c2)?;
        positive("critic.kappa", self.kappa)?;
        positive("critic.P0", self.cov_lower)?;
        positive("critic.P1", self.cov_upper)?;
        if self.cov_lower >= self.cov_upper {
            return Err(Error::invalid(
                "critic.P0",
                format!("must be < critic.P1 ({} >= {})", self.cov_lower, self.cov_upper),
            ));
        }
        positive("ident.p1", self.p1)?;
        positive("ident.p2", self.p2)?;
        positive("ident.alpha", self.alpha)?;
        positive("ident.gamma", self.gamma)?;
        if self.hidden == 0 {
            return Err(Error::invalid("ident.Lg", "must be >= 1"));
        }
        if self.upsilon_w.nrows() != self.hidden + 1 {
            return Err(Error::invalid(
                "ident.upsilon_scale",
                format!("Υ_w must be {0}×{0}", self.hidden + 1),
            ));
        }
        adaptation_matrix("ident.upsilon_scale", &self.upsilon_w)?;
        let uv = DMatrix::from_iterator(2, 2, self.upsilon_v.iter().copied());
        adaptation_matrix("ident.upsilon_scale", &uv)?;
        positive("proj.w_bar_a", self.w_bar_a)?;
        positive("proj.w_bar_c", self.w_bar_c)?;
        positive("proj.w_bar_g", self.w_bar_g)?;
        positive("proj.v_bar_g", self.v_bar_g)?;
        if let SignMode::Smooth { width } = self.sign {
            positive("ident.sgn_eps", width)?;
        }
        positive("sim.dt", self.dt)?;
        Ok(())
    }
}

/// Bounding constants that appear only in the stability analysis. They cannot
/// be derived from data, so the caller supplies them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainConstants {
    pub c: [f64; 12],
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub p3: f64,
}

impl Default for GainConstants {
    fn default() -> Self {
        Self {
            c: [1.0; 12],
            eps1: 1.0,
            eps2: 1.0,
            eps3: 1.0,
            p3: 1.0,
        }
    }
}

impl GainConstants {
    /// Every constant set to `v`, including the Young's-inequality constants and p3.
    pub fn uniform(v: f64) -> Self {
        Self {
            c: [v; 12],
            eps1: v,
            eps2: v,
            eps3: v,
            p3: v,
        }
    }

    /// Bounding constants c1..c12 set to `v`; eps1..eps3 and p3 keep their defaults.
    pub fn with_bounds(v: f64) -> Self {
        Self {
            c: [v; 12],
            ..Self::default()
        }
    }

    /// c_i with 1-based indexing to match the analysis numbering.
    pub fn ci(&self, i: usize) -> f64 {
        self.c[i - 1]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &v) in self.c.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("analysis.c{} must be > 0, got {v}", i + 1)));
            }
        }
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps3", self.eps3), ("p3", self.p3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("analysis.{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// One inequality `lhs > rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; positive iff the inequality holds.
    pub slack: f64,
    pub passed: bool,
}

impl InequalityCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack: lhs - rhs,
            passed: lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub condition: String,
    pub checks: Vec<InequalityCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Identifier gain conditions that guarantee x̃, dx̃/dt → 0.
pub fn validate_identifier_conditions(g: &GainSet, c: &GainConstants) -> Result<ValidationReport> {
    g.validate().map_err(|e| Error::InvalidInput(e.to_string()))?;
    c.validate()?;
    let checks = vec![
        InequalityCheck::new("p1 > 2*c3", g.p1, 2.0 * c.ci(3)),
        InequalityCheck::new(
            "p2 > max(c1 + c4, c1 + c5/alpha)",
            g.p2,
            (c.ci(1) + c.ci(4)).max(c.ci(1) + c.ci(5) / g.alpha),
        ),
        InequalityCheck::new("p3 > c6", c.p3, c.ci(6)),
        InequalityCheck::new("gamma > 2*c2/alpha", g.gamma, 2.0 * c.ci(2) / g.alpha),
    ];
    Ok(ValidationReport {
        condition: "identifier asymptotic tracking".into(),
        checks,
    })
}

/// Actor-critic gain conditions for uniform ultimate boundedness of the
/// state and weight errors.
pub fn validate_actor_critic_conditions(g: &GainSet, c: &GainConstants) -> Result<ValidationReport> {
    g.validate().map_err(|e| Error::InvalidInput(e.to_string()))?;
    c.validate()?;
    let (c7, c8, c9) = (c.ci(7), c.ci(8), c.ci(9));
    let first_rhs = g.k_a1 / 4.0 * c8 * c9 + g.k_a2 * c.eps1 / 2.0 + g.k_c2 / (2.0 * c.eps2);
    let second_lhs = g.k_c2 + g.k_c2 * c.eps2 / 2.0 + g.k_a2 / (2.0 * c.eps1);
    let second_rhs = c.eps3 / 2.0 + g.k_a1 * c7 * c8 + g.k_c1 * g.cov_upper / (g.kappa * g.cov_lower);
    let checks = vec![
        InequalityCheck::new("k_a2 > k_a1*c8*c9/4 + k_a2*eps1/2 + k_c2/(2*eps2)", g.k_a2, first_rhs),
        InequalityCheck::new(
            "k_c2 + k_c2*eps2/2 + k_a2/(2*eps1) > eps3/2 + k_a1*c7*c8 + k_c1*P1/(kappa*P0)",
            second_lhs,
            second_rhs,
        ),
    ];
    Ok(ValidationReport {
        condition: "actor-critic uniform ultimate boundedness".into(),
        checks,
    })
}
