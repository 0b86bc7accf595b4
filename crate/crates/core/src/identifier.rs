//! Online neural identifier of the unknown drift with RISE feedback.
//!
//! The network is `ŵ_gᵀ σ(v̂_gᵀ x̂)` with a constant bias unit prepended to the
//! hidden layer, so σ has L_g+1 entries and its Jacobian has a zero bias row.

use nalgebra::{DMatrix, DVector, Vector2};
use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::gains::GainSet;
use crate::state::input_gain;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifierState {
    /// Output weights, (L_g+1)×2.
    pub w_hat: DMatrix<f64>,
    /// Input weights, 2×L_g.
    pub v_hat: DMatrix<f64>,
    /// State estimate x̂.
    pub x_hat: Vector2<f64>,
    /// RISE integral state ν.
    pub nu: Vector2<f64>,
    /// Estimation error at start-up, x̃(0).
    pub x_tilde_0: Vector2<f64>,
}

impl IdentifierState {
    /// Zero output weights, input weights i.i.d. uniform on [−0.5, 0.5], and
    /// the estimate started at `x_hat0` against the first measurement `x0`.
    pub fn new<R: Rng>(hidden: usize, x0: Vector2<f64>, x_hat0: Vector2<f64>, rng: &mut R) -> Self {
        let v_hat = DMatrix::from_fn(2, hidden, |_, _| rng.random_range(-0.5..=0.5));
        Self::with_weights(DMatrix::zeros(hidden + 1, 2), v_hat, x0, x_hat0)
    }

    pub fn with_weights(w_hat: DMatrix<f64>, v_hat: DMatrix<f64>, x0: Vector2<f64>, x_hat0: Vector2<f64>) -> Self {
        assert_eq!(w_hat.ncols(), 2, "w_hat must have 2 columns");
        assert_eq!(v_hat.nrows(), 2, "v_hat must have 2 rows");
        assert_eq!(w_hat.nrows(), v_hat.ncols() + 1, "w_hat needs L_g+1 rows");
        Self {
            w_hat,
            v_hat,
            x_hat: x_hat0,
            nu: Vector2::zeros(),
            x_tilde_0: x0 - x_hat0,
        }
    }

    pub fn hidden(&self) -> usize {
        self.v_hat.ncols()
    }

    /// Network output ŵ_gᵀ σ̂_g, the current drift estimate.
    pub fn drift_estimate(&self) -> Vector2<f64> {
        let act = activate(&self.v_hat, &self.x_hat);
        let out = self.w_hat.transpose() * act.sigma;
        Vector2::new(out[0], out[1])
    }

    /// Forward-Euler advance of x̂ along the identifier dynamics.
    pub fn advance_estimate(&mut self, x_hat_dot: &Vector2<f64>, dt: f64) {
        self.x_hat += x_hat_dot * dt;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivationOutput {
    /// `[1, σ(z_1), …, σ(z_L)]`.
    pub sigma: DVector<f64>,
    /// ∂σ/∂z, (L_g+1)×L_g; row 0 (bias) is zero.
    pub sigma_prime: DMatrix<f64>,
}

/// Bipolar sigmoid `2/(1+e^{−z}) − 1`, evaluated as `tanh(z/2)` so it saturates
/// instead of overflowing.
pub fn bipolar_sigmoid(z: f64) -> f64 {
    (0.5 * z).tanh()
}

pub fn activate(v_hat: &DMatrix<f64>, x_hat: &Vector2<f64>) -> ActivationOutput {
    let hidden = v_hat.ncols();
    let z = v_hat.transpose() * x_hat;
    let mut sigma = DVector::zeros(hidden + 1);
    let mut sigma_prime = DMatrix::zeros(hidden + 1, hidden);
    sigma[0] = 1.0;
    for j in 0..hidden {
        let s = bipolar_sigmoid(z[j]);
        sigma[j + 1] = s;
        sigma_prime[(j + 1, j)] = 0.5 * (1.0 - s * s);
    }
    ActivationOutput { sigma, sigma_prime }
}

/// F̂ = ŵ_gᵀσ̂_g + h·u + r_t.
pub fn f_hat(id: &IdentifierState, u: f64, r_t: &Vector2<f64>) -> Vector2<f64> {
    id.drift_estimate() + input_gain() * u + r_t
}

/// RISE feedback `r_t = p1 (x̃ − x̃(0)) + ν` and the Euler-advanced ν using
/// `ν̇ = (p1 α + γ) x̃ + p2 sgn(x̃)`.
pub fn rise_feedback(
    id: &IdentifierState,
    x_tilde: &Vector2<f64>,
    g: &GainSet,
    dt: f64,
) -> Result<(Vector2<f64>, Vector2<f64>)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("sim.dt", format!("must be finite and > 0, got {dt}")));
    }
    let r_t = (x_tilde - id.x_tilde_0) * g.p1 + id.nu;
    let nu_dot = x_tilde * (g.p1 * g.alpha + g.gamma) + x_tilde.map(|e| g.sign.apply(e)) * g.p2;
    Ok((r_t, id.nu + nu_dot * dt))
}

/// Rescales `m` onto the Frobenius ball of `radius` if it lies outside.
pub fn project_frobenius(m: &mut DMatrix<f64>, radius: f64) {
    let n = m.norm();
    if n > radius {
        *m *= radius / n;
    }
}

/// Time derivatives of the identifier weights, `(ŵ̇_g, v̂̇_g)`, before projection.
pub fn weight_rates(
    id: &IdentifierState,
    x_tilde: &Vector2<f64>,
    x_hat_dot: &Vector2<f64>,
    g: &GainSet,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let act = activate(&id.v_hat, &id.x_hat);
    let xt = DMatrix::from_column_slice(1, 2, x_tilde.as_slice());
    let xd = DMatrix::from_column_slice(2, 1, x_hat_dot.as_slice());
    // (L+1)×(L+1) · (L+1)×L · L×2 · 2×1 · 1×2
    let w_dot = &g.upsilon_w * &act.sigma_prime * id.v_hat.transpose() * &xd * &xt;
    let upsilon_v = DMatrix::from_column_slice(2, 2, g.upsilon_v.as_slice());
    // 2×2 · 2×1 · 1×2 · 2×(L+1) · (L+1)×L
    let v_dot = upsilon_v * &xd * (&xt * id.w_hat.transpose() * &act.sigma_prime);
    (w_dot, v_dot)
}

/// Euler step of both weight laws followed by projection onto the configured balls.
pub fn update_weights(
    id: &IdentifierState,
    x_tilde: &Vector2<f64>,
    x_hat_dot: &Vector2<f64>,
    g: &GainSet,
    dt: f64,
) -> Result<IdentifierState> {
    let (w_dot, v_dot) = weight_rates(id, x_tilde, x_hat_dot, g);
    ensure_finite("identifier w_hat_g rate", w_dot.iter())?;
    ensure_finite("identifier v_hat_g rate", v_dot.iter())?;
    let mut next = id.clone();
    next.w_hat += w_dot * dt;
    next.v_hat += v_dot * dt;
    project_frobenius(&mut next.w_hat, g.w_bar_g);
    project_frobenius(&mut next.v_hat, g.v_bar_g);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::SignMode;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state(hidden: usize) -> IdentifierState {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        IdentifierState::new(hidden, Vector2::zeros(), Vector2::zeros(), &mut rng)
    }

    #[test]
    fn origin_activation() {
        let act = activate(&DMatrix::from_element(2, 5, 0.3), &Vector2::zeros());
        assert_eq!(act.sigma[0], 1.0);
        assert!(act.sigma.rows(1, 5).iter().all(|&s| s == 0.0));
        for j in 0..5 {
            assert_eq!(act.sigma_prime[(j + 1, j)], 0.5);
            assert_eq!(act.sigma_prime[(0, j)], 0.0);
        }
    }

    #[test]
    fn activation_saturates() {
        let v = DMatrix::from_element(2, 3, 1.0);
        let act = activate(&v, &Vector2::new(1e6, 1e6));
        assert!(act.sigma.iter().all(|s| s.is_finite()));
        assert_relative_eq!(act.sigma[1], 1.0);
        assert_eq!(act.sigma_prime[(1, 0)], 0.0);
        assert_eq!(bipolar_sigmoid(f64::MAX), 1.0);
        assert_eq!(bipolar_sigmoid(-f64::MAX), -1.0);
    }

    #[test]
    fn sigmoid_matches_logistic_form() {
        for z in [-8.0, -1.3, 0.0, 0.2, 4.5] {
            assert_relative_eq!(bipolar_sigmoid(z), 2.0 / (1.0 + (-z as f64).exp()) - 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn f_hat_examples() {
        let id = state(5);
        assert_eq!(f_hat(&id, 0.0, &Vector2::zeros()), Vector2::zeros());
        assert_eq!(f_hat(&id, 5.0, &Vector2::zeros()), Vector2::new(0.0, 5.0));
        let ones = IdentifierState::with_weights(
            DMatrix::from_element(6, 2, 1.0),
            id.v_hat.clone(),
            Vector2::zeros(),
            Vector2::zeros(),
        );
        assert_eq!(f_hat(&ones, 0.0, &Vector2::zeros()), Vector2::new(1.0, 1.0));
    }

    #[test]
    fn rise_starts_at_zero() {
        let x0 = Vector2::new(0.4, -1.0);
        let id = IdentifierState::with_weights(DMatrix::zeros(6, 2), DMatrix::zeros(2, 5), x0, Vector2::zeros());
        let (r, _) = rise_feedback(&id, &id.x_tilde_0.clone(), &GainSet::default(), 1e-3).unwrap();
        assert_eq!(r, Vector2::zeros());
    }

    #[test]
    fn rise_holds_under_zero_error() {
        let mut id = IdentifierState::with_weights(
            DMatrix::zeros(6, 2),
            DMatrix::zeros(2, 5),
            Vector2::new(0.2, 0.0),
            Vector2::zeros(),
        );
        id.nu = Vector2::new(0.7, -0.1);
        let g = GainSet::default();
        let mut first = None;
        for _ in 0..1000 {
            let (r, nu) = rise_feedback(&id, &Vector2::zeros(), &g, 1e-3).unwrap();
            assert_eq!(nu, id.nu);
            assert_eq!(*first.get_or_insert(r), r);
            id.nu = nu;
        }
        assert_eq!(first.unwrap(), Vector2::new(-80.0 * 0.2 + 0.7, -0.1));
    }

    #[test]
    fn rise_single_euler_step() {
        let id = state(5);
        let g = GainSet::default();
        let (_, nu) = rise_feedback(&id, &Vector2::new(0.1, 0.0), &g, 1e-3).unwrap();
        let expected = (80.0 * 300.0 + 5.0) * 0.1 * 1e-3 + 0.2 * (0.1f64 / 1e-3).tanh() * 1e-3;
        assert_relative_eq!(nu[0], expected, epsilon = 1e-15);
        assert_relative_eq!(nu[0], 2.4007, epsilon = 1e-4);
        assert_eq!(nu[1], 0.0);
    }

    #[test]
    fn pure_sign_mode_is_discontinuous_law() {
        let id = state(5);
        let g = GainSet {
            sign: SignMode::Pure,
            ..GainSet::default()
        };
        let e = Vector2::new(1e-9, -1e-9);
        let (_, nu) = rise_feedback(&id, &e, &g, 1e-3).unwrap();
        let lin = (80.0 * 300.0 + 5.0) * 1e-9 * 1e-3;
        assert_relative_eq!(nu[0], lin + 0.2e-3, epsilon = 1e-18);
        assert_relative_eq!(nu[1], -lin - 0.2e-3, epsilon = 1e-18);
    }

    #[test]
    fn rise_rejects_bad_dt() {
        assert!(rise_feedback(&state(5), &Vector2::zeros(), &GainSet::default(), 0.0).is_err());
    }

    #[test]
    fn zero_error_leaves_weights() {
        let id = state(5);
        let next = update_weights(&id, &Vector2::zeros(), &Vector2::new(3.0, -2.0), &GainSet::default(), 1e-3).unwrap();
        assert_eq!(next.w_hat, id.w_hat);
        assert_eq!(next.v_hat, id.v_hat);
    }

    #[test]
    fn projection_holds_radius() {
        let g = GainSet {
            w_bar_g: 2.0,
            v_bar_g: 1.5,
            upsilon_w: DMatrix::identity(6, 6) * 1e3,
            upsilon_v: nalgebra::Matrix2::identity() * 1e3,
            ..GainSet::default()
        };
        let mut w = DMatrix::from_element(6, 2, 1.0);
        w *= 2.0 / w.norm();
        let mut v = DMatrix::from_element(2, 5, 1.0);
        v *= 1.5 / v.norm();
        let id = IdentifierState::with_weights(w, v, Vector2::zeros(), Vector2::new(0.3, 0.2));
        let next = update_weights(&id, &Vector2::new(1.0, 1.0), &Vector2::new(5.0, 5.0), &g, 1e-2).unwrap();
        assert_relative_eq!(next.w_hat.norm(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(next.v_hat.norm(), 1.5, epsilon = 1e-12);
    }

    /// Straight-line index loops for the two weight-rate product chains.
    fn rates_by_loops(
        w: &DMatrix<f64>,
        v: &DMatrix<f64>,
        x_hat: [f64; 2],
        xt: [f64; 2],
        xd: [f64; 2],
        uw: f64,
        uv: f64,
    ) -> (Vec<[f64; 2]>, Vec<Vec<f64>>) {
        let l = v.ncols();
        let mut sp = vec![vec![0.0; l]; l + 1];
        for j in 0..l {
            let z = v[(0, j)] * x_hat[0] + v[(1, j)] * x_hat[1];
            let s = 2.0 / (1.0 + (-z).exp()) - 1.0;
            sp[j + 1][j] = (1.0 - s * s) / 2.0;
        }
        // s = vᵀ ẋ̂ (length l)
        let s: Vec<f64> = (0..l).map(|j| v[(0, j)] * xd[0] + v[(1, j)] * xd[1]).collect();
        let mut w_dot = vec![[0.0; 2]; l + 1];
        for i in 0..=l {
            let a: f64 = (0..l).map(|j| sp[i][j] * s[j]).sum();
            for c in 0..2 {
                w_dot[i][c] = uw * a * xt[c];
            }
        }
        // q = x̃ᵀ ŵᵀ σ' (length l)
        let q: Vec<f64> = (0..l)
            .map(|j| (0..=l).map(|i| (xt[0] * w[(i, 0)] + xt[1] * w[(i, 1)]) * sp[i][j]).sum())
            .collect();
        let v_dot = (0..2).map(|r| (0..l).map(|j| uv * xd[r] * q[j]).collect()).collect();
        (w_dot, v_dot)
    }

    #[test]
    fn weight_step_matches_loop_oracle() {
        let w = DMatrix::from_element(6, 2, 1.0);
        let v = DMatrix::from_element(2, 5, 1.0);
        let x_hat = [0.3, -0.2];
        let xt = [0.05, -0.02];
        let xd = [1.5, 2.0];
        let id = IdentifierState::with_weights(w.clone(), v.clone(), Vector2::zeros(), Vector2::from(x_hat));
        let dt = 1e-3;
        let next = update_weights(&id, &Vector2::from(xt), &Vector2::from(xd), &GainSet::default(), dt).unwrap();
        let (wd, vd) = rates_by_loops(&w, &v, x_hat, xt, xd, 0.1, 0.1);
        for i in 0..6 {
            for c in 0..2 {
                assert!((next.w_hat[(i, c)] - (1.0 + dt * wd[i][c])).abs() < 1e-12);
            }
        }
        for r in 0..2 {
            for j in 0..5 {
                assert!((next.v_hat[(r, j)] - (1.0 + dt * vd[r][j])).abs() < 1e-12);
            }
        }
        assert_ne!(next.w_hat, w);
    }

    proptest! {
        #[test]
        fn activation_derivative_matches_central_difference(
            vs in proptest::collection::vec(-2.0..2.0f64, 10),
            x1 in -3.0..3.0f64, x2 in -3.0..3.0f64,
        ) {
            let v = DMatrix::from_row_slice(2, 5, &vs);
            let x = Vector2::new(x1, x2);
            let act = activate(&v, &x);
            let z = v.transpose() * x;
            let h = 1e-5;
            for j in 0..5 {
                let fd = (bipolar_sigmoid(z[j] + h) - bipolar_sigmoid(z[j] - h)) / (2.0 * h);
                prop_assert!((fd - act.sigma_prime[(j + 1, j)]).abs() < 1e-6);
                prop_assert!(act.sigma[j + 1].abs() < 1.0);
            }
        }

        #[test]
        fn projection_survives_random_updates(
            seed in 0u64..1000, xt in -50.0..50.0f64, xd in -1e3..1e3f64
        ) {
            let g = GainSet { w_bar_g: 3.0, v_bar_g: 2.0, ..GainSet::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut id = IdentifierState::new(5, Vector2::zeros(), Vector2::new(0.5, -0.5), &mut rng);
            for _ in 0..20 {
                id = update_weights(&id, &Vector2::new(xt, -xt), &Vector2::new(xd, xd * 0.5), &g, 1e-2).unwrap();
                prop_assert!(id.w_hat.norm() <= 3.0 + 1e-12);
                prop_assert!(id.v_hat.norm() <= 2.0 + 1e-12);
            }
        }
    }
}
