//! Quadratic value-function approximation Ĵ = ŵ_cᵀφ(x) with normalized
//! gradient adaptation and covariance resetting.

use nalgebra::{Matrix3, Matrix3x2, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::gains::GainSet;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticState {
    pub w_hat: Vector3<f64>,
    /// Adaptation gain matrix, kept within [P0·I, P1·I].
    pub p: Matrix3<f64>,
    pub reset_count: usize,
}

impl CriticState {
    /// Starts with P = P1·I.
    pub fn new(w0: Vector3<f64>, g: &GainSet) -> Self {
        Self {
            w_hat: w0,
            p: Matrix3::identity() * g.cov_upper,
            reset_count: 0,
        }
    }

    pub fn lambda_min(&self) -> f64 {
        symmetric_eigenvalues(&self.p).min()
    }

    pub fn lambda_max(&self) -> f64 {
        symmetric_eigenvalues(&self.p).max()
    }
}

pub fn symmetric_eigenvalues(p: &Matrix3<f64>) -> Vector3<f64> {
    p.symmetric_eigenvalues()
}

/// φ(x) = [x1², x1·x2, x2²].
pub fn basis(x: &Vector2<f64>) -> Vector3<f64> {
    Vector3::new(x[0] * x[0], x[0] * x[1], x[1] * x[1])
}

/// ∂φ/∂x.
pub fn basis_jacobian(x: &Vector2<f64>) -> Matrix3x2<f64> {
    Matrix3x2::new(2.0 * x[0], 0.0, x[1], x[0], 0.0, 2.0 * x[1])
}

pub fn value(c: &CriticState, x: &Vector2<f64>) -> f64 {
    c.w_hat.dot(&basis(x))
}

/// Value gradient ∂Ĵ/∂x as a column vector.
pub fn value_gradient(w: &Vector3<f64>, x: &Vector2<f64>) -> Vector2<f64> {
    basis_jacobian(x).transpose() * w
}

/// Regressor φ'(x)·F̂.
pub fn regressor(x: &Vector2<f64>, f_hat: &Vector2<f64>) -> Vector3<f64> {
    basis_jacobian(x) * f_hat
}

/// One Euler step of the critic weight and gain-matrix laws.
///
/// P is re-symmetrized after the step and reset to P1·I if its smallest
/// eigenvalue falls below P0. The weights are clamped to the radius w̄_c.
pub fn update(
    c: &CriticState,
    actor_weights: &Vector3<f64>,
    phi: &Vector3<f64>,
    delta_hjb: f64,
    g: &GainSet,
    dt: f64,
) -> Result<CriticState> {
    if !delta_hjb.is_finite() {
        return Err(Error::non_finite("critic delta_hjb"));
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("critic regressor"));
    }
    let p_phi = c.p * phi;
    let norm = 1.0 + g.kappa * phi.dot(&p_phi);
    let w_dot = -p_phi * (g.k_c1 * delta_hjb / norm) + (actor_weights - c.w_hat) * g.k_c2;
    let p_dot = -(p_phi * p_phi.transpose()) * (g.k_c1 / norm);

    let mut w_hat = c.w_hat + w_dot * dt;
    let n = w_hat.norm();
    if n > g.w_bar_c {
        w_hat *= g.w_bar_c / n;
    }

    let p = c.p + p_dot * dt;
    let mut p = (p + p.transpose()) * 0.5;
    let mut reset_count = c.reset_count;
    if symmetric_eigenvalues(&p).min() < g.cov_lower {
        p = Matrix3::identity() * g.cov_upper;
        reset_count += 1;
    }
    Ok(CriticState { w_hat, p, reset_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn basis_examples() {
        assert_eq!(basis(&Vector2::zeros()), Vector3::zeros());
        assert_eq!(basis(&Vector2::new(1.0, 2.0)), Vector3::new(1.0, 2.0, 4.0));
        assert_eq!(basis(&Vector2::new(-1.0, 2.0)), basis(&Vector2::new(1.0, -2.0)));
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(basis_jacobian(&Vector2::zeros()), Matrix3x2::zeros());
        assert_eq!(
            basis_jacobian(&Vector2::new(1.0, 2.0)),
            Matrix3x2::new(2.0, 0.0, 2.0, 1.0, 0.0, 4.0)
        );
    }

    #[test]
    fn value_examples() {
        let g = GainSet::default();
        let zero = CriticState::new(Vector3::zeros(), &g);
        assert_eq!(value(&zero, &Vector2::new(3.0, -7.0)), 0.0);
        let c = CriticState::new(Vector3::new(1.0, 0.0, 1.0), &g);
        assert_eq!(value(&c, &Vector2::new(3.0, 4.0)), 25.0);
        let c2 = CriticState::new(Vector3::new(2.0, 0.0, 2.0), &g);
        assert_eq!(value(&c2, &Vector2::new(3.0, 4.0)), 50.0);
    }

    #[test]
    fn regressor_examples() {
        assert_eq!(regressor(&Vector2::new(1.0, 2.0), &Vector2::zeros()), Vector3::zeros());
        assert_eq!(
            regressor(&Vector2::new(1.0, 2.0), &Vector2::new(1.0, 1.0)),
            Vector3::new(2.0, 3.0, 4.0)
        );
        assert_eq!(regressor(&Vector2::zeros(), &Vector2::new(9.0, -4.0)), Vector3::zeros());
    }

    #[test]
    fn stationary_point() {
        let g = GainSet::default();
        let c = CriticState::new(Vector3::new(0.1, 0.2, 0.3), &g);
        let next = update(&c, &c.w_hat.clone(), &Vector3::zeros(), 3.0, &g, 1e-3).unwrap();
        assert_eq!(next, c);
    }

    #[test]
    fn consensus_term_in_isolation() {
        let g = GainSet::default();
        let c = CriticState::new(Vector3::zeros(), &g);
        let a = Vector3::new(1.0, -1.0, 2.0);
        let next = update(&c, &a, &Vector3::zeros(), 0.0, &g, 1e-3).unwrap();
        assert_relative_eq!(next.w_hat, a * 30.0 * 1e-3, epsilon = 1e-15);
    }

    #[test]
    fn single_gradient_step() {
        let g = GainSet::default();
        let c = CriticState::new(Vector3::zeros(), &g);
        let next = update(&c, &Vector3::zeros(), &Vector3::new(1.0, 0.0, 0.0), 1.0, &g, 1e-3).unwrap();
        assert_relative_eq!(next.w_hat[0], -11.0 / 1.005 * 1e-3, epsilon = 1e-15);
        assert_relative_eq!(next.w_hat[0], -0.010945, epsilon = 1e-6);
        assert_eq!(next.w_hat[1], 0.0);
        // P shrinks only along φ
        assert_relative_eq!(next.p[(0, 0)], 1.0 - 11.0 / 1.005 * 1e-3, epsilon = 1e-15);
        assert_eq!(next.p[(1, 1)], 1.0);
    }

    #[test]
    fn covariance_reset_restores_upper_bound() {
        let g = GainSet::default();
        let c = CriticState::new(Vector3::zeros(), &g);
        let next = update(&c, &Vector3::zeros(), &Vector3::new(1e3, 0.0, 0.0), 0.0, &g, 1e-1).unwrap();
        assert_eq!(next.reset_count, 1);
        assert_eq!(next.p, Matrix3::identity() * g.cov_upper);
    }

    #[test]
    fn rejects_non_finite_residual() {
        let g = GainSet::default();
        let c = CriticState::new(Vector3::zeros(), &g);
        assert!(update(&c, &Vector3::zeros(), &Vector3::zeros(), f64::NAN, &g, 1e-3).is_err());
    }

    proptest! {
        #[test]
        fn jacobian_matches_central_difference(x1 in -10.0..10.0f64, x2 in -10.0..10.0f64) {
            let x = Vector2::new(x1, x2);
            let j = basis_jacobian(&x);
            let h = 1e-5;
            for k in 0..2 {
                let mut e = Vector2::zeros();
                e[k] = h;
                let fd = (basis(&(x + e)) - basis(&(x - e))) / (2.0 * h);
                for r in 0..3 {
                    let scale = j[(r, k)].abs().max(1.0);
                    prop_assert!((fd[r] - j[(r, k)]).abs() / scale < 1e-6);
                }
            }
        }

        #[test]
        fn covariance_stays_bounded_and_nonincreasing(
            phis in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..200),
        ) {
            let g = GainSet::default();
            let mut c = CriticState::new(Vector3::zeros(), &g);
            for (a, b, d) in phis {
                let before = c.lambda_max();
                let next = update(&c, &Vector3::zeros(), &Vector3::new(a, b, d), 0.5, &g, 1e-3).unwrap();
                let eig = symmetric_eigenvalues(&next.p);
                prop_assert!(eig.min() >= g.cov_lower - 1e-9);
                prop_assert!(eig.max() <= g.cov_upper + 1e-9);
                prop_assert!((next.p - next.p.transpose()).amax() <= 1e-12);
                if next.reset_count == c.reset_count {
                    prop_assert!(eig.max() <= before + 1e-12);
                }
                c = next;
            }
        }
    }
}
