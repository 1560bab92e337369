//! One line per acceptance criterion. Exits nonzero if any criterion fails.

use std::f64::consts::FRAC_PI_2;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use regrefl_core::assembly::{BcKind, BoundaryConditionRow};
use regrefl_core::curve::FreeBoundaryCurve;
use regrefl_core::gas::{incident_shock, GasSetup};
use regrefl_core::geometry::{build_domain, default_epsilon, reference_curve, BoundaryTag, Mesh, ReflectionDomain};
use regrefl_core::iteration::{run_to_fixed_point, IterationConfig, ReflectionSolution};
use regrefl_core::solver::solve_linear_bvp;
use regrefl_core::states::{det3, normal_reflection, state2_solve, vn_jacobian, vn_residual};
use regrefl_core::verification::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn gas() -> GasSetup {
    incident_shock(2.0, 1.0, 2.0).unwrap()
}

fn solve(sigma: f64, n: usize) -> ReflectionSolution {
    let cfg = IterationConfig { sigma, resolution: (n, n), ..Default::default() };
    run_to_fixed_point(&gas(), FRAC_PI_2 - sigma, &cfg).unwrap()
}

fn closed_form_algebra() -> Outcome {
    let nr = normal_reflection(&gas()).unwrap();
    let e = [
        (nr.rho2bar - 10.0 / 3.0).abs(),
        (nr.xibar + 1.5f64.sqrt()).abs(),
        (nr.c2bar - (10.0f64 / 3.0).sqrt()).abs(),
    ];
    let err = e.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: err <= 1e-12 && nr.xibar.abs() < nr.c2bar,
        detail: format!("max error {err:.2e}, |xibar|={:.6} < c2bar={:.6}", nr.xibar.abs(), nr.c2bar),
    }
}

fn von_neumann_reduction() -> Outcome {
    let g = gas();
    let nr = normal_reflection(&g).unwrap();
    let s = state2_solve(&g, FRAC_PI_2).unwrap();
    let e0 = [(s.rho2 - nr.rho2bar).abs(), (s.theta_s - FRAC_PI_2).abs(), (s.xitilde - nr.xibar).abs(), s.u2.abs(), s.v2.abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let mut rng = StdRng::seed_from_u64(7);
    let mut jac_err = 0.0f64;
    for _ in 0..20 {
        let tw = FRAC_PI_2 - 0.2 * rng.gen::<f64>();
        let x = [2.5 + 1.5 * rng.gen::<f64>(), 1.0 + 0.5 * rng.gen::<f64>(), -1.6 + 0.8 * rng.gen::<f64>()];
        let ja = vn_jacobian(&g, tw, x);
        let scale = ja.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for c in 0..3 {
            let h = 1e-6 * x[c].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let (rp, rm) = (vn_residual(&g, tw, xp), vn_residual(&g, tw, xm));
            for r in 0..3 {
                jac_err = jac_err.max(((rp[r] - rm[r]) / (2.0 * h) - ja[r][c]).abs() / scale);
            }
        }
    }
    let j = det3(&vn_jacobian(&g, FRAC_PI_2, [nr.rho2bar, FRAC_PI_2, nr.xibar]));
    let j_err = (j + 7.0 / 3.0 * g.xi0).abs();
    Outcome {
        pass: e0 <= 1e-12 && jac_err <= 1e-6 && j < 0.0 && j_err <= 1e-10,
        detail: format!("state error {e0:.2e}, jacobian rel error {jac_err:.2e}, J={j:.7} (closed form error {j_err:.2e})"),
    }
}

fn sigma_scaling() -> Outcome {
    let g = gas();
    let nr = normal_reflection(&g).unwrap();
    let d: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&s| {
            let st = state2_solve(&g, FRAC_PI_2 - s).unwrap();
            (st.rho2 - nr.rho2bar).abs() + (FRAC_PI_2 - st.theta_s).abs() + (st.xitilde - nr.xibar).abs()
        })
        .collect();
    let r = [d[0] / d[1], d[1] / d[2]];
    Outcome {
        pass: r.iter().all(|r| (1.5..=2.5).contains(r)),
        detail: format!("distances {:.4e} {:.4e} {:.4e}, ratios {:.4} {:.4}", d[0], d[1], d[2], r[0], r[1]),
    }
}

fn mms_error(n: usize) -> f64 {
    let mut pts = Vec::new();
    let mut tags = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            pts.push([i as f64 / n as f64, j as f64 / n as f64]);
            tags.push(if i == 0 || i == n || j == n {
                BoundaryTag::Sonic
            } else if j == 0 {
                BoundaryTag::Wedge
            } else {
                BoundaryTag::Interior
            });
        }
    }
    let mesh = Mesh::new(n, n, pts, tags).unwrap();
    let exact = |p: [f64; 2]| p[0].cos() * p[1].cosh();
    let bc: Vec<_> = (0..mesh.n_nodes())
        .map(|k| match mesh.tags[k] {
            BoundaryTag::Interior => None,
            BoundaryTag::Wedge => {
                Some(BoundaryConditionRow { kind: BcKind::Neumann, b: [0.0, 1.0, 0.0], rhs: 0.0, normal: [0.0, 1.0] })
            }
            _ => Some(BoundaryConditionRow::dirichlet(exact(mesh.pts[k]))),
        })
        .collect();
    let u = solve_linear_bvp(&mesh, &vec![[1.0, 0.0, 1.0]; mesh.n_nodes()], &bc, &vec![0.0; mesh.n_nodes()]).unwrap();
    mesh.pts.iter().zip(&u).map(|(&p, &v)| (v - exact(p)).abs()).fold(0.0, f64::max)
}

fn solver_order() -> Outcome {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| mms_error(n)).collect();
    let r = [e[0] / e[1], e[1] / e[2]];
    Outcome {
        pass: r.iter().all(|r| (3.5..=4.5).contains(r)),
        detail: format!("errors {:.3e} {:.3e} {:.3e}, ratios {:.3} {:.3}", e[0], e[1], e[2], r[0], r[1]),
    }
}

fn exact_fixed_point() -> Outcome {
    let sol = solve(0.0, 64);
    let psi = sol.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xibar = sol.state.normal.xibar;
    let shock = sol.curve.xi().iter().fold(0.0f64, |m, x| m.max((x - xibar).abs()));
    let n = sol.diagnostics.outer_iterations;
    let res = sol.fixed_point_residual;
    Outcome {
        pass: n == 1 && psi <= 1e-10 && shock <= 1e-10 && res <= 1e-10,
        detail: format!("outer iterations {n}, |psi| {psi:.2e}, shock offset {shock:.2e}, residual {res:.2e}"),
    }
}

fn regular_reflection_run() -> Outcome {
    let sol = solve(0.01, 64);
    let v = &sol.verification;
    let names = [
        "cutoff_inactive",
        "quadratic_sonic_bound",
        "monotone_eta",
        "nonnegative",
        "shock_rh_residual",
        "shock_entropy",
        "ellipticity",
    ];
    let required = names.iter().all(|n| v.get(n).is_some_and(|c| c.pass));
    let failing: Vec<_> = v.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    Outcome {
        pass: sol.converged && required && v.all_pass(),
        detail: format!(
            "converged in {} outer steps, residual {:.2e}, {} checks, failing {:?}",
            sol.diagnostics.outer_iterations,
            sol.fixed_point_residual,
            v.checks.len(),
            failing
        ),
    }
}

fn normal_limit() -> Outcome {
    let cfg = IterationConfig { resolution: (64, 64), ..Default::default() };
    let t = normal_reflection_limit(&gas(), &[0.02, 0.01, 0.005], &cfg).unwrap();
    let rows: Vec<String> =
        t.rows.iter().map(|r| format!("sigma={:.4} sup={:.4e} w11={:.4e}", r.sigma, r.shock_distance, r.w11)).collect();
    let notes: Vec<_> = t.checks.iter().filter(|c| !c.note.is_empty()).map(|c| c.note.clone()).collect();
    Outcome { pass: t.checks.iter().all(|c| c.pass), detail: format!("{}; {}", rows.join("; "), notes.join(" ")) }
}

fn refinement() -> Outcome {
    let c: Vec<FreeBoundaryCurve> = [32, 64, 128].iter().map(|&n| solve(0.01, n).curve).collect();
    let d1 = c[0].sup_distance(&c[1]);
    let d2 = c[1].sup_distance(&c[2]);
    let r = d1 / d2;
    Outcome {
        pass: d2 < d1 && (3.5..=4.5).contains(&r),
        detail: format!("|f32-f64|={d1:.3e} |f64-f128|={d2:.3e} ratio {r:.3}"),
    }
}

fn field(d: &ReflectionDomain, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..d.n_nodes()).map(f).collect()
}

fn fault_injection() -> Outcome {
    let g = gas();
    let st = state2_solve(&g, FRAC_PI_2 - 0.01).unwrap();
    let dom = |n: usize| {
        let fb = reference_curve(&st, n + 1).unwrap();
        build_domain(&st, &fb, (n, n), default_epsilon(&st)).unwrap()
    };
    let d32 = dom(32);
    let d64 = dom(64);
    let gm = g.gamma;
    let sol = solve(0.01, 32);
    let sd = &sol.domain;
    let mut red: Vec<(&str, bool)> = Vec::new();

    red.push(("cutoff_inactive", !check_cutoff_inactive(&d32, &field(&d32, |k| d32.x[k].powi(2) / (gm + 1.0))).pass));
    red.push(("quadratic_sonic_bound", !check_quadratic_sonic_bound(&d64, &field(&d64, |k| d64.x[k].powi(2))).pass));
    red.push(("monotone_eta", !check_monotone_eta(&d32, &field(&d32, |k| d32.mesh.pts[k][1])).pass));
    red.push(("nonnegative", !check_nonnegative(&d32, &vec![-0.5; d32.n_nodes()]).pass));

    let shock = sd.shock_nodes();
    let mut bumped = sol.psi.clone();
    bumped[shock[shock.len() / 2]] += 1e-3;
    red.push(("shock_continuity", !check_shock_conditions(sd, &bumped)[0].pass));
    // same values on the shock, wrong normal derivative
    let tilted: Vec<f64> = sol
        .psi
        .iter()
        .zip(&sd.mesh.pts)
        .map(|(&v, p)| v + 0.1 * (p[0] - sol.curve.eval(p[1])))
        .collect();
    let c = check_shock_conditions(sd, &tilted);
    red.push(("shock_rh_residual", c[0].pass && !c[1].pass));
    red.push(("shock_entropy", !check_shock_conditions(&d32, &field(&d32, |k| 2.0 * d32.mesh.pts[k][1]))[2].pass));
    red.push(("ellipticity", !check_ellipticity_and_sonic_match(&d32, &field(&d32, |k| 3.0 * d32.mesh.pts[k][0]))[0].pass));
    let nan = field(&d32, |k| if d32.mesh.is_interior(k) && d32.x[k] < d32.epsilon { f64::NAN } else { 0.0 });
    red.push(("sonic_match", !check_ellipticity_and_sonic_match(&d32, &nan)[1].pass));

    let l = reference_curve(&st, 33).unwrap();
    let (lo, hi) = l.eta_range();
    let kinked =
        FreeBoundaryCurve::from_fn(lo, hi, 33, l.end_slope(), |e| st.l(e) + (hi - e) * (-(hi - e) / 0.1).exp()).unwrap();
    let dk = build_domain(&st, &kinked, (32, 32), default_epsilon(&st)).unwrap();
    red.push(("slope_match_p1", !check_slope_match(&dk).pass));

    let row = |sigma: f64, s: f64, w: f64| LimitRow { sigma, shock_distance: s, w11: w, p1_error: 0.0, outer_iterations: 1 };
    let lim = evaluate_limit(&[row(0.02, 0.04, 0.002), row(0.01, 0.05, 0.004), row(0.005, 0.001, 0.008)]);
    red.push(("limit_shock_monotone", !lim[0].pass));
    red.push(("limit_w11_monotone", !lim[1].pass));
    red.push(("limit_shock_ratio", !lim[2].pass));

    let missed: Vec<_> = red.iter().filter(|r| !r.1).map(|r| r.0).collect();
    Outcome {
        pass: missed.is_empty(),
        detail: format!("{} of {} checks red on their counterexamples, missed {:?}", red.len() - missed.len(), red.len(), missed),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("closed-form normal reflection", closed_form_algebra, 1),
        ("von Neumann reduction at right angle", von_neumann_reduction, 10),
        ("sigma-scaling of state (2)", sigma_scaling, 1000),
        ("elliptic solver second order", solver_order, 30_000),
        ("exact fixed point at right angle", exact_fixed_point, 10_000),
        ("regular-reflection run and verification", regular_reflection_run, 300_000),
        ("convergence to normal reflection", normal_limit, 900_000),
        ("refinement stability of the shock", refinement, 1_800_000),
        ("fault injection", fault_injection, 10_000),
    ];
    let mut all = true;
    for (i, (name, f, limit_ms)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let in_time = el <= Duration::from_millis(*limit_ms);
        let pass = out.pass && in_time;
        all &= pass;
        println!(
            "criterion {} {} {}: {} [{:.3} s, limit {} s{}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            out.detail,
            el.as_secs_f64(),
            *limit_ms as f64 / 1000.0,
            if in_time { "" } else { ", over time" }
        );
    }
    if !all {
        std::process::exit(1);
    }
}
