//! Random parameter sets, integrated to T = 200, never leave the physical
//! domain.
//!
//! Box: alpha_H, alpha_A in [0, 1]; delta_K in [0, 0.1]; q_H in [0, 1];
//! delta_q in [0, 0.01]; eta's in [0, 0.6]; theta_max in [0.1, 2];
//! theta_mid in [-2, 2]; K_max in [1e6, 1e7]; Q_half in [1, 1e4];
//! beta_K, beta_A in [0, 0.3]; gamma_H in [0.01, 0.2]; H_inf in [1, 200];
//! hill_beta in [0.5, 5]; K_half in [1, 1e4]; Q_sat in [1, 1e4];
//! xi_0 in [0, 2]; kappa_H in [0, 1]; T_difficulty in [0, 20];
//! rho_Q in [0.01, 0.1]; a_0 in [0, 1]; kappa_gate in [0, 50].
//!
//! These bounds keep Q below 4200 and H below about 230, so K stays under
//! 1e6 <= K_max through T = 200. The face theta = theta_max is only
//! invariant while K <= K_max.

use kdyn_core::integrator::DOMAIN_BAND;
use kdyn_core::{integrate, IntegratorConfig, ModelParams, ParamValues, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn draw(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut u = |lo: f64, hi: f64| rng.random_range(lo..=hi);
    ModelParams::new(ParamValues {
        alpha_h: u(0.0, 1.0),
        alpha_a: u(0.0, 1.0),
        delta_k: u(0.0, 0.1),
        q_h: u(0.0, 1.0),
        delta_q: u(0.0, 0.01),
        eta_sup: u(0.0, 0.6),
        eta_rlhf: u(0.0, 0.6),
        theta_max: u(0.1, 2.0),
        theta_mid: u(-2.0, 2.0),
        k_max: u(1e6, 1e7),
        q_half: u(1.0, 1e4),
        beta_k: u(0.0, 0.3),
        beta_a: u(0.0, 0.3),
        gamma_h: u(0.01, 0.2),
        h_inf: u(1.0, 200.0),
        hill_beta: u(0.5, 5.0),
        k_half: u(1.0, 1e4),
        q_sat: u(1.0, 1e4),
        xi_0: u(0.0, 2.0),
        kappa_h: u(0.0, 1.0),
        t_difficulty: u(0.0, 20.0),
        rho_q: u(0.01, 0.1),
        a_0: u(0.0, 1.0),
        kappa_gate: u(0.0, 50.0),
    })
    .unwrap()
}

#[test]
fn thousand_random_parameter_sets_stay_in_domain() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = IntegratorConfig::new(200);
    for i in 0..1000 {
        let p = draw(&mut rng);
        let y0 = State::new(
            rng.random_range(1.0..1e4),
            rng.random(),
            rng.random::<f64>() * p.theta_max,
            rng.random_range(0.0..100.0),
            rng.random_range(0.0..1e3),
        );
        let traj = integrate(&y0, &p, &cfg).unwrap_or_else(|e| panic!("set {i}: {e}\n{p:?}"));
        for s in &traj.states {
            s.check_domain(&p, DOMAIN_BAND).unwrap_or_else(|e| panic!("set {i}: {e}"));
            assert!(s.archive > 0.0 && s.archive <= p.k_max, "set {i}: K = {}", s.archive);
        }
    }
}
