//! Continuous-time algebraic Riccati solution for the linear verification
//! plant, used as the optimal-value oracle for the critic.

use nalgebra::{Matrix2, Matrix4, RowVector2, Vector2, Vector3, Vector4};

use crate::error::{Error, Result};
use crate::plant::LinearPlant;

/// Solves `A_cᵀ S + S A_c + M = 0` for symmetric S.
pub fn solve_lyapunov(ac: &Matrix2<f64>, m: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    // column-major vec(S) = [S00, S10, S01, S11]
    let at = ac.transpose();
    let mut k = Matrix4::zeros();
    for col in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                // (A_cᵀ S)[i, col] = Σ_j A_cᵀ[i, j] S[j, col]
                k[(2 * col + i, 2 * col + j)] += at[(i, j)];
                // (S A_c)[i, col] = Σ_j S[i, j] A_c[j, col]
                k[(2 * col + i, 2 * j + i)] += ac[(j, col)];
            }
        }
    }
    let rhs = -Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)]);
    let s = k.lu().solve(&rhs)?;
    let s = Matrix2::new(s[0], s[2], s[1], s[3]);
    Some((s + s.transpose()) * 0.5)
}

/// Riccati solution and the optimal feedback `u = −K x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiSolution {
    pub s: Matrix2<f64>,
    pub gain: RowVector2<f64>,
    pub iterations: usize,
}

impl RiccatiSolution {
    /// Critic weights that represent xᵀSx in the basis [x1², x1x2, x2²].
    pub fn critic_weights(&self) -> Vector3<f64> {
        Vector3::new(self.s[(0, 0)], 2.0 * self.s[(0, 1)], self.s[(1, 1)])
    }

    pub fn control(&self, x: &Vector2<f64>) -> f64 {
        -(self.gain * x)[0]
    }
}

/// Residual of `AᵀS + SA − S B β⁻¹ Bᵀ S + Q`, max-abs.
pub fn riccati_residual(plant: &LinearPlant, q: &Matrix2<f64>, beta: f64, s: &Matrix2<f64>) -> f64 {
    let b = plant.b;
    (plant.a.transpose() * s + s * plant.a - s * b * b.transpose() * s / beta + q).amax()
}

fn is_hurwitz(a: &Matrix2<f64>) -> bool {
    a.complex_eigenvalues().iter().all(|e| e.re < 0.0)
}

/// A gain K with A − BK Hurwitz: zero if A already is, otherwise Ackermann
/// placement of both poles at −(1 + spectral radius of A). `None` if (A, B)
/// is not controllable.
pub fn stabilizing_gain(plant: &LinearPlant) -> Option<RowVector2<f64>> {
    let a = plant.a;
    if is_hurwitz(&a) {
        return Some(RowVector2::zeros());
    }
    let ctrb = Matrix2::from_columns(&[plant.b, a * plant.b]);
    let inv = ctrb.try_inverse().filter(|_| ctrb.determinant().abs() > 1e-12)?;
    let radius = a.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max);
    let pole = 1.0 + radius;
    let char_poly = a * a + a * (2.0 * pole) + Matrix2::identity() * (pole * pole);
    let gain = RowVector2::new(0.0, 1.0) * inv * char_poly;
    is_hurwitz(&(a - plant.b * gain)).then_some(gain)
}

/// Newton-Kleinman policy iteration. `initial_gain` must stabilize the plant;
/// if `None` the open-loop A is used and must be Hurwitz.
pub fn solve_riccati(
    plant: &LinearPlant,
    q: &Matrix2<f64>,
    beta: f64,
    initial_gain: Option<RowVector2<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiSolution> {
    if !(beta > 0.0) {
        return Err(Error::invalid("cost.beta", "must be > 0"));
    }
    let b = plant.b;
    let mut gain = initial_gain.unwrap_or_else(RowVector2::zeros);
    let mut s_prev: Option<Matrix2<f64>> = None;
    for it in 1..=max_iter {
        let ac = plant.a - b * gain;
        if !is_hurwitz(&ac) {
            return Err(Error::InvalidInput(format!(
                "riccati iteration {it}: feedback gain {gain} does not stabilize the plant"
            )));
        }
        let m = q + gain.transpose() * gain * beta;
        let s = solve_lyapunov(&ac, &m).ok_or(Error::RiccatiNonConvergence {
            iterations: it,
            residual: f64::INFINITY,
        })?;
        gain = b.transpose() * s / beta;
        if let Some(prev) = s_prev {
            if (s - prev).amax() <= tol * (1.0 + s.amax()) {
                return Ok(RiccatiSolution {
                    s,
                    gain,
                    iterations: it,
                });
            }
        }
        s_prev = Some(s);
    }
    let residual = s_prev.map(|s| riccati_residual(plant, q, beta, &s)).unwrap_or(f64::INFINITY);
    Err(Error::RiccatiNonConvergence {
        iterations: max_iter,
        residual,
    })
}
