use aci_core::actor::{self, ActorState};
use aci_core::cost::QuadraticCost;
use aci_core::critic::{self, CriticState};
use aci_core::cycle::DriveCycle;
use aci_core::gains::GainSet;
use aci_core::hjb;
use aci_core::identifier::{self, IdentifierState};
use aci_core::plant::LinearPlant;
use aci_core::sim::{self, AciController, Exploration, PlantSelector, Scenario};
use aci_core::state::input_gain;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cost() -> QuadraticCost {
    QuadraticCost {
        q: Matrix2::identity(),
        beta: 1.0,
    }
}

struct Manual {
    critic: CriticState,
    actor: ActorState,
    ident: IdentifierState,
}

/// Hand-rolled controller step. With `stale_actor_input = false` the actor
/// sees the already-updated critic weights, which the real loop must not do.
fn manual_step(m: &mut Manual, x: &Vector2<f64>, g: &GainSet, cost: &QuadraticCost, stale_actor_input: bool) -> f64 {
    let dt = g.dt;
    let x_tilde = x - m.ident.x_hat;
    let (r_t, nu_next) = identifier::rise_feedback(&m.ident, &x_tilde, g, dt).unwrap();
    let u = actor::control(&m.actor, x, g.beta);
    let f = identifier::f_hat(&m.ident, 0.0, &r_t) + input_gain() * u;
    let phi = critic::regressor(x, &f);
    let delta = hjb::residual(&m.critic.w_hat, &phi, x, u, cost).delta_hjb;
    let critic_next = critic::update(&m.critic, &m.actor.w_hat, &phi, delta, g, dt).unwrap();
    let wc_for_actor = if stale_actor_input { m.critic.w_hat } else { critic_next.w_hat };
    let actor_next = actor::update(&m.actor, &wc_for_actor, &phi, x, delta, g, dt).unwrap();
    let mut ident_next = identifier::update_weights(&m.ident, &x_tilde, &f, g, dt).unwrap();
    ident_next.nu = nu_next;
    ident_next.advance_estimate(&f, dt);
    m.critic = critic_next;
    m.actor = actor_next;
    m.ident = ident_next;
    u
}

fn run_manual(steps: usize, stale: bool) -> (Vector3<f64>, Vector3<f64>) {
    let g = GainSet::default();
    let plant = LinearPlant::default();
    let w0 = Vector3::new(0.1, 0.1, 0.1);
    let mut x = Vector2::new(1.0, -1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut m = Manual {
        critic: CriticState::new(w0, &g),
        actor: ActorState::new(w0),
        ident: IdentifierState::new(g.hidden, x, x, &mut rng),
    };
    for _ in 0..steps {
        let u = manual_step(&mut m, &x, &g, &cost(), stale);
        x = plant.step(&x, u, g.dt).unwrap();
    }
    (m.critic.w_hat, m.actor.w_hat)
}

fn run_controller(steps: usize) -> (Vector3<f64>, Vector3<f64>) {
    let g = GainSet::default();
    let plant = LinearPlant::default();
    let mut x = Vector2::new(1.0, -1.0);
    let mut c = AciController::new(g.clone(), cost(), Vector3::new(0.1, 0.1, 0.1), x, 3);
    for _ in 0..steps {
        let s = c.step(&x, 0.0).unwrap();
        x = plant.step(&x, s.u_applied, g.dt).unwrap();
    }
    (c.critic.w_hat, c.actor.w_hat)
}

#[test]
fn controller_matches_independent_step_ordering() {
    let steps = 5000;
    let reference = run_controller(steps);
    assert_eq!(run_manual(steps, true), reference);
    assert_ne!(run_manual(steps, false), reference);
}

#[test]
fn zero_learning_rates_freeze_weights() {
    let mut g = GainSet::default();
    g.k_a1 = 0.0;
    g.k_a2 = 0.0;
    g.k_c1 = 0.0;
    g.k_c2 = 0.0;
    g.upsilon_w.fill(0.0);
    g.upsilon_v.fill(0.0);
    let scenario = Scenario::new(PlantSelector::Lqr);
    let cycle = DriveCycle::constant(0.0, 5.0).unwrap();
    let out = sim::run_aci_detailed(&cycle, &g, &scenario, 1).unwrap();
    assert_eq!(out.controller.critic.w_hat, scenario.critic_w0);
    assert_eq!(out.controller.actor.w_hat, scenario.critic_w0);
    assert_eq!(out.controller.critic.p, Matrix3::identity() * g.cov_upper);
    assert_eq!(out.controller.critic.reset_count, 0);
    let x0 = scenario.lqr.x0;
    let initial = IdentifierState::new(g.hidden, x0, x0, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(out.controller.identifier.w_hat, initial.w_hat);
    assert_eq!(out.controller.identifier.v_hat, initial.v_hat);
}

#[test]
fn energy_report_agrees_with_logged_power() {
    let cycle = aci_core::cycle::gen_cycle(&Default::default()).unwrap();
    let (log, report) = sim::run_aci(&cycle, &GainSet::default(), &Scenario::default(), 0).unwrap();
    let power = log.column(|r| r.p_batt);
    let net = sim::trapezoid(&power, log.dt);
    assert!((report.energy_consumed - report.energy_recovered - report.net_energy).abs() < 1e-6);
    assert!((report.net_energy - net).abs() <= 1e-9 * net.abs().max(1.0));
    assert!(report.energy_consumed > 0.0 && report.energy_recovered > 0.0);
    assert_eq!(log.len(), (cycle.duration() / log.dt).round() as usize + 1);
}

#[test]
fn car_at_rest_stays_at_rest() {
    let cycle = DriveCycle::constant(0.0, 20.0).unwrap();
    let mut scenario = Scenario::default();
    scenario.explore = Exploration::off();
    let (aci, report) = sim::run_aci(&cycle, &GainSet::default(), &scenario, 0).unwrap();
    assert!(aci.rows.iter().all(|r| r.v_v == 0.0 && r.u == 0.0));
    assert_eq!(report.net_energy, 0.0);
    let (pid, report) = sim::run_pid(&cycle, &scenario.pid, &scenario, 1e-3).unwrap();
    assert!(pid.rows.iter().all(|r| r.v_v == 0.0 && r.p_batt == 0.0));
    assert_eq!(report.net_energy, 0.0);
}
