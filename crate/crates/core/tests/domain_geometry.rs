use std::f64::consts::FRAC_PI_2;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use regrefl_core::curve::FreeBoundaryCurve;
use regrefl_core::gas::incident_shock;
use regrefl_core::geometry::*;
use regrefl_core::norms::{discrete_norms, parabolic_norm, weighted_norm, NormSample};
use regrefl_core::states::{state2_solve, StateTwo};
use regrefl_core::Error;

fn state(sigma: f64) -> StateTwo {
    state2_solve(&incident_shock(2.0, 1.0, 2.0).unwrap(), FRAC_PI_2 - sigma).unwrap()
}

fn straight_domain(st: &StateTwo, n: usize) -> ReflectionDomain {
    let fb = reference_curve(st, n + 1).unwrap();
    build_domain(st, &fb, (n, n), default_epsilon(st)).unwrap()
}

fn shoelace(p: &[[f64; 2]]) -> f64 {
    let n = p.len();
    0.5 * (0..n).map(|k| p[k][0] * p[(k + 1) % n][1] - p[(k + 1) % n][0] * p[k][1]).sum::<f64>().abs()
}

fn exact_area(st: &StateTwo) -> f64 {
    let p2 = [st.l(-st.v2), -st.v2];
    shoelace(&[p2, st.p3, st.p4, st.p1]) + 0.5 * st.c2 * st.c2 * (st.y1 - st.y1.sin())
}

#[test]
fn sonic_frame_examples() {
    let st = state(0.02);
    let q = to_sonic_frame(&st, [0.0, st.c2]).unwrap();
    assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-14);
    assert_abs_diff_eq!(q[1], FRAC_PI_2 - st.theta_w, epsilon = 1e-14);
    let q1 = to_sonic_frame(&st, st.p1).unwrap();
    assert_abs_diff_eq!(q1[0], 0.0, epsilon = 1e-13);
    assert_abs_diff_eq!(q1[1], st.y1, epsilon = 1e-13);
    assert_abs_diff_eq!(st.c2 * (q1[1] + st.theta_w).cos(), st.p1[0], epsilon = 1e-13);
    assert!(matches!(to_sonic_frame(&st, [0.0, 0.0]), Err(Error::OriginSingularity)));
}

#[test]
fn sonic_frame_round_trip() {
    let st = state(0.05);
    let mut seed = 0x9e3779b97f4a7c15u64;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        let a = (seed >> 11) as f64 / (1u64 << 53) as f64;
        let b = (seed & 0xffff) as f64 / 65536.0;
        let p = [(a - 0.5) * 3.0, (b - 0.2) * 3.0];
        let back = from_sonic_frame(&st, to_sonic_frame(&st, p).unwrap());
        worst = worst.max((back[0] - p[0]).abs()).max((back[1] - p[1]).abs());
    }
    assert!(worst <= 1e-13, "{worst:e}");
}

#[test]
fn reference_shock_forms() {
    let st = state(0.0);
    assert_eq!(reference_shock(&st, 0.3), st.normal.xibar);
    assert_eq!(reference_shock(&st, -0.1), st.normal.xibar);
    for sigma in [0.0, 0.01, 0.05] {
        let st = state(sigma);
        assert_abs_diff_eq!(reference_shock_sonic(&st, 0.0).unwrap(), st.y1, epsilon = 1e-12);
        let kappa0 = 0.5 * (st.normal.c2bar - st.normal.xibar.abs());
        let h = 1e-6;
        for k in 0..50 {
            let x = kappa0 * k as f64 / 49.0;
            let d = (reference_shock_sonic(&st, x + h).unwrap() - reference_shock_sonic(&st, (x - h).max(0.0)).unwrap())
                / (x + h - (x - h).max(0.0));
            assert!(d > 0.0, "sigma={sigma} x={x}: {d}");
        }
    }
    assert!(matches!(reference_shock_sonic(&state(0.01), 0.99 * state(0.01).c2), Err(Error::ArcsineDomain { .. })));
}

#[test]
fn normal_reflection_mesh_is_valid() {
    let st = state(0.0);
    let fb = FreeBoundaryCurve::from_fn(0.0, st.eta1(), 17, 0.0, |_| st.normal.xibar).unwrap();
    let d = build_domain(&st, &fb, (16, 16), default_epsilon(&st)).unwrap();
    assert!(d.mesh.cell_jac.iter().all(|&j| j > 0.0));
    // shock side is the vertical line, symmetry side the xi axis
    for k in d.shock_nodes() {
        assert_eq!(d.mesh.pts[k][0], st.normal.xibar);
    }
    for j in 0..=16 {
        assert_eq!(d.mesh.pts[d.mesh.idx(16, j)][1], 0.0);
    }
    let count = |t: BoundaryTag| d.mesh.tags.iter().filter(|&&x| x == t).count();
    for t in [BoundaryTag::P1, BoundaryTag::P2, BoundaryTag::P3, BoundaryTag::P4] {
        assert_eq!(count(t), 1);
    }
    assert_eq!(count(BoundaryTag::Sonic), 15);
    assert_eq!(count(BoundaryTag::Shock), 15);
    assert_eq!(count(BoundaryTag::Wedge), 15);
    assert_eq!(count(BoundaryTag::Symmetry), 15);
    assert_eq!(count(BoundaryTag::Interior), 15 * 15);
}

#[test]
fn straight_shock_area_converges_second_order() {
    for sigma in [0.0, 0.03, 0.1] {
        let st = state(sigma);
        let exact = exact_area(&st);
        let e1 = (straight_domain(&st, 16).mesh.area() - exact).abs();
        let e2 = (straight_domain(&st, 32).mesh.area() - exact).abs();
        let e3 = (straight_domain(&st, 64).mesh.area() - exact).abs();
        assert!(e3 < 1e-3 * exact, "sigma={sigma}: {e3:e}");
        assert!(e1 / e2 > 3.5 && e2 / e3 > 3.5, "sigma={sigma}: {e1:e} {e2:e} {e3:e}");
    }
}

#[test]
fn perimeter_converges_second_order() {
    let st = state(0.04);
    let p2 = [st.l(-st.v2), -st.v2];
    let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let exact = d(p2, st.p3) + d(st.p3, st.p4) + st.c2 * st.y1 + d(st.p1, p2);
    let e: Vec<f64> = [16, 32, 64].iter().map(|&n| (straight_domain(&st, n).mesh.perimeter() - exact).abs()).collect();
    assert!(e[0] / e[1] > 3.5 && e[1] / e[2] > 3.5, "{e:?}");
}

#[test]
fn curve_below_reference_is_rejected() {
    let st = state(0.03);
    let fb = reference_curve(&st, 17).unwrap();
    let mut xi = fb.xi().to_vec();
    xi[5] -= 1e-3;
    let bad = FreeBoundaryCurve::new(fb.eta().to_vec(), xi, fb.end_slope()).unwrap();
    assert!(matches!(build_domain(&st, &bad, (16, 16), 0.05), Err(Error::MeshFold(_))));
}

#[test]
fn reference_curve_end_slope_matches() {
    let st = state(0.05);
    let fb = reference_curve(&st, 33).unwrap();
    assert!(fb.end_slope_mismatch().abs() < 1e-10);
    assert_eq!(fb.xi()[32], st.p1[0]);
}

#[test]
fn region_tags_follow_thresholds() {
    let st = state(0.02);
    let d = straight_domain(&st, 32);
    let eps = d.epsilon;
    for k in 0..d.n_nodes() {
        let x = d.x[k];
        let expect = if x <= eps {
            RegionTag::SonicStrip
        } else if x < 2.0 * eps {
            RegionTag::Overlap
        } else if x < 4.0 * eps {
            RegionTag::Blend
        } else {
            RegionTag::Outer
        };
        assert_eq!(d.region[k], expect);
    }
    assert!(d.region.contains(&RegionTag::Outer));
    assert!(d.region.contains(&RegionTag::SonicStrip));
}

#[test]
fn extract_zero_and_constant() {
    for sigma in [0.0, 0.02, 0.08] {
        let st = state(sigma);
        let d = straight_domain(&st, 24);
        let zero = vec![0.0; d.n_nodes()];
        let f0 = extract_free_boundary(&d, &zero, &st).unwrap();
        for (&e, &x) in f0.eta().iter().zip(f0.xi()) {
            assert_abs_diff_eq!(x, st.l(e), epsilon = 1e-14);
            if sigma == 0.0 {
                assert_eq!(x, st.normal.xibar);
            }
        }
        let c = 0.01;
        let mut cst = vec![c; d.n_nodes()];
        let f1 = extract_free_boundary(&d, &cst, &st).unwrap();
        let n = f1.len();
        for m in 0..n - 1 {
            assert_abs_diff_eq!(f1.xi()[m], st.l(f1.eta()[m]) + c / st.du(), epsilon = 1e-13);
        }
        assert_eq!(f1.xi()[n - 1], st.l(st.eta1()));
        cst.iter_mut().for_each(|v| *v = -1.0);
        assert!(matches!(extract_free_boundary(&d, &cst, &st), Err(Error::NonMonotone(_))));
    }
}

#[test]
fn mesh_gradient_exact_on_linear_functions() {
    let st = state(0.06);
    let d = straight_domain(&st, 20);
    let f: Vec<f64> = d.mesh.pts.iter().map(|p| 0.3 - 1.7 * p[0] + 2.2 * p[1]).collect();
    for k in 0..d.n_nodes() {
        let g = d.mesh.gradient(&f, k);
        assert_abs_diff_eq!(g[0], -1.7, epsilon = 1e-10);
        assert_abs_diff_eq!(g[1], 2.2, epsilon = 1e-10);
        if d.mesh.is_interior(k) {
            let h = d.mesh.hessian(&f, k);
            assert!(h.iter().all(|v| v.abs() < 1e-8), "{h:?}");
        }
    }
}

#[test]
fn mesh_hessian_converges() {
    let st = state(0.06);
    let u = |p: [f64; 2]| (1.3 * p[0]).sin() * (0.7 * p[1]).cos();
    let exact = |p: [f64; 2]| {
        let (a, b) = (1.3 * p[0], 0.7 * p[1]);
        [-1.69 * a.sin() * b.cos(), -0.91 * a.cos() * b.sin(), -0.49 * a.sin() * b.cos()]
    };
    let err = |n: usize| {
        let d = straight_domain(&st, n);
        let f: Vec<f64> = d.mesh.pts.iter().map(|&p| u(p)).collect();
        let mut e = 0.0f64;
        for k in 0..d.n_nodes() {
            if d.mesh.is_interior(k) {
                let h = d.mesh.hessian(&f, k);
                let x = exact(d.mesh.pts[k]);
                for c in 0..3 {
                    e = e.max((h[c] - x[c]).abs());
                }
            }
        }
        e
    };
    let (e1, e2) = (err(16), err(32));
    assert!(e1 / e2 > 3.0, "{e1:e} {e2:e}");
}

#[test]
fn locate_and_interpolate() {
    let st = state(0.03);
    let d = straight_domain(&st, 16);
    let f: Vec<f64> = d.mesh.pts.iter().map(|p| 2.0 * p[0] - p[1] + 0.5).collect();
    for j in 0..16 {
        for i in 0..16 {
            let c = d.mesh.corners(i, j);
            let p = [0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]), 0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1])];
            let loc = d.mesh.locate(p, None);
            assert!(loc.inside);
            assert_eq!(loc.cell, (i, j));
            assert_abs_diff_eq!(d.mesh.interpolate(&f, &loc), 2.0 * p[0] - p[1] + 0.5, epsilon = 1e-12);
            let g = d.mesh.interpolate_gradient(&f, &loc);
            assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-10);
            assert_abs_diff_eq!(g[1], -1.0, epsilon = 1e-10);
            let walked = d.mesh.locate(p, Some((0, 0)));
            assert_eq!(walked.cell, (i, j));
        }
    }
    let far = d.mesh.locate([-5.0, -5.0], None);
    assert!(!far.inside);
}

#[test]
fn norms_examples() {
    let mut strip = Vec::new();
    for a in 1..40 {
        for b in 0..5 {
            let x = a as f64 / 40.0;
            strip.push(NormSample { p: [x, b as f64 * 0.1], d: [x * x, 2.0 * x, 0.0, 2.0, 0.0, 0.0], w: x });
        }
    }
    assert_abs_diff_eq!(parabolic_norm(&strip, 0.25), 5.0, epsilon = 1e-12);
    let ones: Vec<NormSample> =
        strip.iter().map(|s| NormSample { d: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], ..*s }).collect();
    assert_abs_diff_eq!(weighted_norm(&ones, 0.25, -1.25), 1.0, epsilon = 1e-14);
    let st = state(0.02);
    let d = straight_domain(&st, 16);
    let (a, b) = discrete_norms(&d, &vec![0.0; d.n_nodes()], 0.25);
    assert_eq!((a, b), (0.0, 0.0));
}

#[test]
fn sonic_derivative_transform_matches_polar_function() {
    // u = (c2 - r)^2 in Cartesian form; in sonic frame u = x^2
    let c2 = 1.7;
    let p = [-0.9f64, 1.1];
    let r = p[0].hypot(p[1]);
    let x = c2 - r;
    let (ex, ey) = (p[0] / r, p[1] / r);
    let ux = -2.0 * x * ex;
    let uy = -2.0 * x * ey;
    let uxx = 2.0 * ex * ex - 2.0 * x * (1.0 - ex * ex) / r;
    let uyy = 2.0 * ey * ey - 2.0 * x * (1.0 - ey * ey) / r;
    let uxy = 2.0 * ex * ey + 2.0 * x * ex * ey / r;
    let q = regrefl_core::norms::to_sonic_derivatives(p, [x * x, ux, uy, uxx, uxy, uyy]);
    let want = [x * x, 2.0 * x, 0.0, 2.0, 0.0, 0.0];
    for c in 0..6 {
        assert_abs_diff_eq!(q[c], want[c], epsilon = 1e-12);
    }
}

proptest! {
    #[test]
    fn extraction_is_monotone_in_psi(
        sigma in 0.0f64..0.1, base in 0.0f64..0.02, bump in 0.0f64..0.02, seed in 0u64..1000,
    ) {
        let st = state(sigma);
        let d = straight_domain(&st, 12);
        let n = d.n_nodes();
        let a: Vec<f64> = (0..n).map(|k| base * (((k as u64 * 2654435761 + seed) % 97) as f64 / 97.0)).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(k, v)| v + bump * ((k % 5) as f64 / 5.0)).collect();
        let fa = extract_free_boundary(&d, &a, &st).unwrap();
        let fb = extract_free_boundary(&d, &b, &st).unwrap();
        for (x, y) in fa.xi().iter().zip(fb.xi()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn pchip_preserves_monotone_data(d1 in 0.01f64..1.0, d2 in 0.0f64..1.0, d3 in 0.01f64..1.0, frac in 0.0f64..1.0) {
        // within the monotone range for the last interval
        let slope = frac * 3.0 * d3 / 0.5;
        let eta = vec![0.0, 0.3, 0.5, 1.0];
        let xi = vec![0.0, d1, d1 + d2, d1 + d2 + d3];
        let c = FreeBoundaryCurve::new(eta, xi, slope).unwrap();
        let mut prev = c.eval(0.0);
        for k in 1..=200 {
            let v = c.eval(k as f64 / 200.0);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
