use std::f64::consts::FRAC_PI_2;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regrefl_core::gas::{density, incident_shock, GasSetup, PseudoState};
use regrefl_core::states::*;
use regrefl_core::Error;

fn gas2() -> GasSetup {
    incident_shock(2.0, 1.0, 2.0).unwrap()
}

#[test]
fn normal_reflection_gamma_two_closed_form() {
    let nr = normal_reflection(&gas2()).unwrap();
    assert_abs_diff_eq!(nr.rho2bar, 10.0 / 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(nr.xibar, -(1.5f64).sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(nr.c2bar, (10.0f64 / 3.0).sqrt(), epsilon = 1e-12);
    assert!(nr.xibar.abs() < nr.c2bar);
}

#[test]
fn normal_reflection_residual_small() {
    for (gamma, rho0, rho1) in [(2.0, 1.0, 2.0), (1.4, 1.0, 2.0), (1.4, 1.0, 8.0), (5.0 / 3.0, 0.5, 0.9), (2.5, 1.0, 3.0)] {
        let g = incident_shock(gamma, rho0, rho1).unwrap();
        let nr = normal_reflection(&g).unwrap();
        let rel = normal_reflection_residual(&g, nr.rho2bar).abs() / g.enthalpy(nr.rho2bar);
        assert!(rel <= 1e-12, "gamma={gamma}: {rel:e}");
        assert!(nr.rho2bar > rho1);
        assert!(nr.xibar < 0.0 && nr.xibar.abs() < nr.c2bar);
    }
}

#[test]
fn normal_reflection_bracket_via_mean_value_slope() {
    let g = incident_shock(1.4, 1.0, 2.0).unwrap();
    let nr = normal_reflection(&g).unwrap();
    let beta = mean_value_beta(&g, nr.rho2bar);
    // slope bounds for 1 < gamma < 2
    assert!(0.4 * nr.rho2bar.powf(-0.6) <= beta && beta <= 0.4 * 2f64.powf(-0.6));
    assert_abs_diff_eq!(rho2bar_from_beta(&g, beta), nr.rho2bar, epsilon = 1e-12);
    let upper = rho2bar_from_beta(&g, 0.4 * nr.rho2bar.powf(-0.6));
    assert!(2.0 < nr.rho2bar && nr.rho2bar <= upper);
}

#[test]
fn vn_residual_vanishes_at_normal_reflection() {
    let g = gas2();
    let nr = normal_reflection(&g).unwrap();
    let r = vn_residual(&g, FRAC_PI_2, [nr.rho2bar, FRAC_PI_2, nr.xibar]);
    for c in r {
        assert!(c.abs() <= 1e-12);
    }
}

#[test]
fn vn_residual_density_perturbation() {
    let g = gas2();
    let nr = normal_reflection(&g).unwrap();
    let r = vn_residual(&g, FRAC_PI_2, [nr.rho2bar + 1e-3, FRAC_PI_2, nr.xibar]);
    // first-order change (gamma-1) rho2bar^(gamma-2) = 1 for gamma = 2
    assert_abs_diff_eq!(r[1], 1e-3, epsilon = 1e-12);
    assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-15);
}

#[test]
fn vn_residual_finite_at_equal_angles() {
    let g = gas2();
    let r = vn_residual(&g, 1.4, [3.0, 1.4, -1.0]);
    assert!(r.iter().all(|v| v.is_finite()));
}

#[test]
fn jacobian_closed_form_at_normal_reflection() {
    let g = gas2();
    let nr = normal_reflection(&g).unwrap();
    assert_abs_diff_eq!(g.u1 * nr.xibar, -1.0, epsilon = 1e-14);
    let j = det3(&vn_jacobian(&g, FRAC_PI_2, [nr.rho2bar, FRAC_PI_2, nr.xibar]));
    assert_abs_diff_eq!(j, -7.0 / 3.0 * g.xi0, epsilon = 1e-10);
    assert_abs_diff_eq!(j, -3.8103174, epsilon = 1e-6);
}

#[test]
fn jacobian_negative_at_normal_reflection_for_several_gases() {
    for (gamma, rho1) in [(1.4, 2.0), (1.4, 6.0), (5.0 / 3.0, 1.3), (3.0, 2.0)] {
        let g = incident_shock(gamma, 1.0, rho1).unwrap();
        let nr = normal_reflection(&g).unwrap();
        let j = det3(&vn_jacobian(&g, FRAC_PI_2, [nr.rho2bar, FRAC_PI_2, nr.xibar]));
        let closed = -g.xi0
            * ((gamma - 1.0) * nr.rho2bar.powf(gamma - 2.0) * (nr.rho2bar - rho1) - g.u1 * nr.xibar);
        assert!(j < 0.0);
        assert_abs_diff_eq!(j, closed, epsilon = 1e-10);
    }
}

fn fd_jacobian(g: &GasSetup, tw: f64, x: [f64; 3]) -> [[f64; 3]; 3] {
    let mut j = [[0.0; 3]; 3];
    for k in 0..3 {
        let h = 1e-6 * x[k].abs().max(1.0);
        let mut xp = x;
        let mut xm = x;
        xp[k] += h;
        xm[k] -= h;
        let rp = vn_residual(g, tw, xp);
        let rm = vn_residual(g, tw, xm);
        for r in 0..3 {
            j[r][k] = (rp[r] - rm[r]) / (2.0 * h);
        }
    }
    j
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let g = gas2();
    // deterministic pseudo-random trial points around the physical branch
    let mut rng = StdRng::seed_from_u64(0x2545F4914F6CDD1D);
    let mut next = || rng.gen::<f64>();
    for _ in 0..20 {
        let tw = FRAC_PI_2 - 0.2 * next();
        let x = [2.5 + 1.5 * next(), 1.0 + 0.5 * next(), -1.6 + 0.8 * next()];
        let ja = vn_jacobian(&g, tw, x);
        let jf = fd_jacobian(&g, tw, x);
        let scale = ja.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..3 {
            for c in 0..3 {
                let err = (ja[r][c] - jf[r][c]).abs() / scale;
                assert!(err <= 1e-6, "entry ({r},{c}) rel err {err:e}");
            }
        }
    }
}

#[test]
fn state2_at_right_angle_is_normal_reflection() {
    let g = gas2();
    let nr = normal_reflection(&g).unwrap();
    let s = state2_solve(&g, FRAC_PI_2).unwrap();
    assert_abs_diff_eq!(s.rho2, nr.rho2bar, epsilon = 1e-12);
    assert_abs_diff_eq!(s.theta_s, FRAC_PI_2, epsilon = 1e-12);
    assert_abs_diff_eq!(s.xitilde, nr.xibar, epsilon = 1e-12);
    assert_eq!(s.u2, 0.0);
    assert_eq!(s.v2, 0.0);
    assert_eq!(s.xihat, s.xitilde);
    assert_abs_diff_eq!(s.c2, nr.c2bar, epsilon = 1e-12);
    assert_abs_diff_eq!(s.p1[0], nr.xibar, epsilon = 1e-12);
    assert_abs_diff_eq!(s.p1[1], (nr.c2bar.powi(2) - nr.xibar.powi(2)).sqrt(), epsilon = 1e-12);
    assert!(s.p0[1].is_infinite());
}

#[test]
fn state2_small_sigma() {
    let g = gas2();
    let s = state2_solve(&g, FRAC_PI_2 - 0.01).unwrap();
    let r = s.residual();
    assert!(r.iter().all(|v| v.abs() <= 1e-12));
    let nr = s.normal;
    // frozen regression value of the scaling constant, measured once
    let c = (s.rho2 - nr.rho2bar).abs() / 0.01;
    assert!(c < 1.0, "C = {c}");
    assert!(s.theta_s < s.theta_w && s.theta_s > std::f64::consts::FRAC_PI_4);
    assert!(-s.c2 < s.xitilde && s.xitilde < s.xihat && s.xihat < s.p1[0] && s.p1[0] < 0.0);
    assert_abs_diff_eq!(s.v2, s.u2 * s.theta_w.tan(), epsilon = 1e-14);
    // reflected-shock jump written in the shifted frame
    let du = s.du();
    let lhs = s.rho2 * s.xihat;
    let rhs = g.rho1 * (s.xihat - (du * du + s.v2 * s.v2) / du);
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
    // y1 is the polar angle of P1 relative to the wedge
    assert_abs_diff_eq!(s.c2 * (s.y1 + s.theta_w).cos(), s.p1[0], epsilon = 1e-12);
    assert_abs_diff_eq!(s.c2 * (s.y1 + s.theta_w).sin(), s.p1[1], epsilon = 1e-12);
    // P0 lies on both the wedge and the straight shock
    assert_abs_diff_eq!(s.l(s.p0[1]), s.p0[0], epsilon = 1e-9);
}

#[test]
fn state2_sigma_scaling_is_linear() {
    let g = gas2();
    let nr = normal_reflection(&g).unwrap();
    let dist = |sigma: f64| {
        let s = state2_solve(&g, FRAC_PI_2 - sigma).unwrap();
        (s.rho2 - nr.rho2bar).abs() + (FRAC_PI_2 - s.theta_s).abs() + (s.xitilde - nr.xibar).abs()
    };
    let d = [dist(0.02), dist(0.01), dist(0.005)];
    for k in 0..2 {
        let ratio = d[k] / d[k + 1];
        assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn state2_continuation_down_to_zero() {
    let g = incident_shock(1.4, 1.0, 2.0).unwrap();
    let mut prev: Option<StateTwo> = None;
    for k in (0..=14).rev() {
        let s = state2_solve(&g, FRAC_PI_2 - 0.01 * k as f64).unwrap();
        if let Some(p) = prev {
            assert!((s.rho2 - p.rho2).abs() < 0.05);
        }
        prev = Some(s);
    }
}

#[test]
fn state2_rejects_large_sigma() {
    let g = gas2();
    assert!(matches!(state2_solve(&g, FRAC_PI_2 - 0.5), Err(Error::NewtonDiverged(_))));
}

#[test]
fn background_potential_identities() {
    let g = gas2();
    let s0 = state2_solve(&g, FRAC_PI_2).unwrap();
    let s = state2_solve(&g, FRAC_PI_2 - 0.03).unwrap();
    let b = background_potentials(&s, [s.xihat, 0.0]);
    assert_abs_diff_eq!(b.phi[1] - b.phi[2], 0.0, epsilon = 1e-14);
    for p in [[-1.0, 0.3], [0.2, 1.1], [-0.4, -0.01]] {
        let b = background_potentials(&s, p);
        assert!(b.grad[1][0] - b.grad[2][0] >= g.u1 / 2.0);
        // phi1 - phi2 vanishes on the straight shock
        let on = background_potentials(&s, [s.l(p[1]), p[1]]);
        assert_abs_diff_eq!(on.phi[1] - on.phi[2], 0.0, epsilon = 1e-13);
        // Bernoulli: states (1) and (2) carry their own densities
        let st1 = PseudoState::new(b.phi[1], b.grad[1]);
        let st2 = PseudoState::new(b.phi[2], b.grad[2]);
        let st0 = PseudoState::new(b.phi[0], b.grad[0]);
        assert_abs_diff_eq!(density(&g, &st1).unwrap(), g.rho1, epsilon = 1e-12);
        assert_abs_diff_eq!(density(&g, &st2).unwrap(), s.rho2, epsilon = 1e-12);
        assert_abs_diff_eq!(density(&g, &st0).unwrap(), g.rho0, epsilon = 1e-12);
        let b0 = background_potentials(&s0, p);
        assert_abs_diff_eq!(b0.phi[1] - b0.phi[2], g.u1 * (p[0] - s0.normal.xibar), epsilon = 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn state2_invariants_hold(gamma in 1.1f64..3.0, k in 1.2f64..4.0, sigma in 0.0f64..0.1) {
        let g = incident_shock(gamma, 1.0, k).unwrap();
        let s = state2_solve(&g, FRAC_PI_2 - sigma).unwrap();
        prop_assert!(s.check_invariants().is_ok());
        prop_assert!(s.residual().iter().all(|v| v.abs() <= 1e-12));
    }
}
