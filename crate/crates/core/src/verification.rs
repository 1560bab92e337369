//! Post-solve checks on a computed solution, and the normal-reflection
//! limit study.

use std::fmt;

use crate::assembly::assemble_coefficients;
use crate::error::Result;
use crate::gas::{density, ellipticity_margin, entropy_check, rh_residual, GasSetup, PseudoState};
use crate::geometry::{BoundaryTag, ReflectionDomain};
use crate::iteration::{run_to_fixed_point, GlobalEvaluator, GlobalRegion, IterationConfig, ReflectionSolution};
use crate::solver::barrier_tolerance;
use crate::states::{background_potentials, normal_reflection};

/// Continuity tolerance on the shock; tight enough to catch a 1e-3 defect.
pub const CONTINUITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    /// location of the worst node, shifted coordinates
    pub worst: Option<[f64; 2]>,
    pub note: String,
}

impl Check {
    fn upper(name: &str, measured: f64, threshold: f64, worst: Option<[f64; 2]>) -> Self {
        Check { name: name.into(), pass: measured <= threshold, measured, threshold, worst, note: String::new() }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} measured={:.6e} threshold={:.6e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )?;
        if let Some([x, y]) = self.worst {
            write!(f, " at=({x:.6},{y:.6})")?;
        }
        if !self.note.is_empty() {
            write!(f, " {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `psi_x = -psi_r` at node `k`.
fn psi_x(domain: &ReflectionDomain, psi: &[f64], k: usize) -> f64 {
    let p = domain.mesh.pts[k];
    let g = domain.mesh.gradient(psi, k);
    -(p[0] * g[0] + p[1] * g[1]) / p[0].hypot(p[1])
}

fn on_sonic(domain: &ReflectionDomain, k: usize) -> bool {
    matches!(domain.tag(k), BoundaryTag::Sonic | BoundaryTag::P1 | BoundaryTag::P4)
}

/// `a` is worse than `b` when larger; NaN is worst.
fn worse(a: f64, b: f64) -> bool {
    !b.is_nan() && (a.is_nan() || a > b)
}

fn worst_of(domain: &ReflectionDomain, it: impl Iterator<Item = (usize, f64)>) -> (f64, Option<[f64; 2]>) {
    let mut best = (f64::NEG_INFINITY, None);
    for (k, v) in it {
        if worse(v, best.0) {
            best = (v, Some(domain.mesh.pts[k]));
        }
    }
    best
}

/// `|psi_x| <= 4x/(3(gamma+1))` where `x < 4 eps`, and no node engaging the
/// cutoff in the final assembly.
pub fn check_cutoff_inactive(domain: &ReflectionDomain, psi: &[f64]) -> Check {
    let g = domain.state.gas.gamma;
    let tol = barrier_tolerance(domain.h());
    let eps = domain.epsilon;
    let nodes = (0..domain.n_nodes()).filter(|&k| !on_sonic(domain, k) && domain.x[k] > 0.0 && domain.x[k] < 4.0 * eps);
    let (m, at) = worst_of(domain, nodes.map(|k| (k, psi_x(domain, psi, k).abs() - 4.0 * domain.x[k] / (3.0 * (g + 1.0)))));
    let flagged = assemble_coefficients(domain, psi, psi, 0.0).map(|c| c.cutoff_count()).unwrap_or(usize::MAX);
    let mut c = Check::upper("cutoff_inactive", m, tol, at).with_note(format!("flagged={flagged}"));
    c.pass &= flagged == 0;
    c
}

/// `0 <= psi <= 3x^2/(5(gamma+1))` in the inner strip.
pub fn check_quadratic_sonic_bound(domain: &ReflectionDomain, psi: &[f64]) -> Check {
    let g = domain.state.gas.gamma;
    let tol = barrier_tolerance(domain.h());
    let nodes = (0..domain.n_nodes()).filter(|&k| domain.x[k] > 0.0 && domain.x[k] < 2.0 * domain.epsilon);
    let (m, at) = worst_of(
        domain,
        nodes.map(|k| {
            let x = domain.x[k];
            (k, (psi[k] - 3.0 * x * x / (5.0 * (g + 1.0))).max(-psi[k]))
        }),
    );
    let ratio = (0..domain.n_nodes())
        .filter(|&k| domain.mesh.is_interior(k) && domain.x[k] < 2.0 * domain.epsilon)
        .map(|k| psi[k] * 5.0 * (g + 1.0) / (3.0 * domain.x[k].powi(2)))
        .fold(0.0f64, |a, b| if worse(b, a) { b } else { a });
    Check::upper("quadratic_sonic_bound", m, tol, at).with_note(format!("max_ratio={ratio:.4}"))
}

/// `psi_eta <= 0`.
pub fn check_monotone_eta(domain: &ReflectionDomain, psi: &[f64]) -> Check {
    let tol = 10.0 * domain.h().powi(2);
    let (m, at) = worst_of(domain, (0..domain.n_nodes()).map(|k| (k, domain.mesh.gradient(psi, k)[1])));
    Check::upper("monotone_eta", m, tol, at)
}

/// Lower barrier `psi >= -tol`.
pub fn check_nonnegative(domain: &ReflectionDomain, psi: &[f64]) -> Check {
    let tol = barrier_tolerance(domain.h());
    let (m, at) = worst_of(domain, (0..domain.n_nodes()).map(|k| (k, -psi[k])));
    Check::upper("nonnegative", m, tol, at)
}

/// Continuity with state (1), mass-flux balance and entropy at shock nodes.
pub fn check_shock_conditions(domain: &ReflectionDomain, psi: &[f64]) -> Vec<Check> {
    let st = &domain.state;
    let gas = &st.gas;
    let tol = barrier_tolerance(domain.h());
    let mut cont = (f64::NEG_INFINITY, None);
    let mut rh = (f64::NEG_INFINITY, None);
    let mut entropy_fail = 0usize;
    let mut entropy_at = None;
    let mut rho_min = f64::INFINITY;
    for k in domain.shock_nodes() {
        let p = domain.mesh.pts[k];
        let bg = background_potentials(st, p);
        let g = domain.mesh.gradient(psi, k);
        let phi = bg.phi[2] + psi[k];
        let grad = [bg.grad[2][0] + g[0], bg.grad[2][1] + g[1]];
        let c = (phi - bg.phi[1]).abs();
        if worse(c, cont.0) {
            cont = (c, Some(p));
        }
        let n = [bg.grad[1][0] - grad[0], bg.grad[1][1] - grad[1]];
        let nn = n[0].hypot(n[1]);
        let nu = [n[0] / nn, n[1] / nn];
        let left = PseudoState::new(bg.phi[1], bg.grad[1]);
        let right = PseudoState::new(phi, grad);
        let r = rh_residual(gas, &left, &right, nu).map(f64::abs).unwrap_or(f64::INFINITY);
        if worse(r, rh.0) {
            rh = (r, Some(p));
        }
        let rho = density(gas, &right).unwrap_or(f64::NAN);
        rho_min = rho_min.min(rho);
        if !entropy_check(gas.rho1, rho) {
            entropy_fail += 1;
            entropy_at.get_or_insert(p);
        }
    }
    let mut ent = Check::upper("shock_entropy", entropy_fail as f64, 0.0, entropy_at)
        .with_note(format!("min_rho={rho_min:.6} rho1={}", gas.rho1));
    ent.pass = entropy_fail == 0;
    vec![
        Check::upper("shock_continuity", cont.0, CONTINUITY_TOL, cont.1),
        Check::upper("shock_rh_residual", rh.0, tol, rh.1),
        ent,
    ]
}

/// Ellipticity inside the domain and the `|D psi| <= C x` sonic matching.
pub fn check_ellipticity_and_sonic_match(domain: &ReflectionDomain, psi: &[f64]) -> Vec<Check> {
    let st = &domain.state;
    let mut margin = (f64::INFINITY, None);
    let mut ratio = (0.0f64, None);
    for k in 0..domain.n_nodes() {
        if !domain.mesh.is_interior(k) {
            continue;
        }
        let p = domain.mesh.pts[k];
        let bg = background_potentials(st, p);
        let g = domain.mesh.gradient(psi, k);
        let s = PseudoState::new(bg.phi[2] + psi[k], [bg.grad[2][0] + g[0], bg.grad[2][1] + g[1]]);
        let m = ellipticity_margin(&st.gas, &s);
        if worse(-m, -margin.0) {
            margin = (m, Some(p));
        }
        let x = domain.x[k];
        if x > 0.0 && x < 2.0 * domain.epsilon {
            let q = g[0].hypot(g[1]) / x;
            if worse(q, ratio.0) {
                ratio = (q, Some(p));
            }
        }
    }
    let mut ell = Check::upper("ellipticity", -margin.0, 0.0, margin.1).with_note(format!("min_margin={:.6e}", margin.0));
    ell.pass = margin.0 > 0.0;
    let mut son = Check::upper("sonic_match", ratio.0, f64::INFINITY, ratio.1).with_note("max |D psi|/x near the arc");
    son.pass = ratio.0.is_finite();
    vec![ell, son]
}

/// Divided-difference slope of the shock at `P1` against the straight shock.
pub fn check_slope_match(domain: &ReflectionDomain) -> Check {
    let m = domain.curve.end_slope_mismatch().abs();
    Check::upper("slope_match_p1", m, domain.h(), Some(domain.state.p1))
}

/// The full battery on a solution.
pub fn verify(sol: &ReflectionSolution) -> VerificationReport {
    verify_field(&sol.domain, &sol.psi)
}

pub fn verify_field(domain: &ReflectionDomain, psi: &[f64]) -> VerificationReport {
    let mut checks = vec![
        check_cutoff_inactive(domain, psi),
        check_quadratic_sonic_bound(domain, psi),
        check_monotone_eta(domain, psi),
        check_nonnegative(domain, psi),
    ];
    checks.extend(check_shock_conditions(domain, psi));
    checks.extend(check_ellipticity_and_sonic_match(domain, psi));
    checks.push(check_slope_match(domain));
    VerificationReport { checks }
}

/// `sum |D(phi_sigma - phi_normal)|` by midpoint rule over
/// `[-c2bar/2, 0] x [0, c2bar/2]` in original coordinates.
pub fn w11_distance(sol: &ReflectionSolution, n: usize) -> f64 {
    let st = &sol.state;
    let nr = st.normal;
    let half = 0.5 * nr.c2bar;
    let ev = GlobalEvaluator::new(sol);
    let cell = (half / n as f64).powi(2);
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let x = -half + half * (i as f64 + 0.5) / n as f64;
            let y = half * (j as f64 + 0.5) / n as f64;
            let s = ev.sample([x, y]);
            if s.region == GlobalRegion::Outside {
                continue;
            }
            // pseudo-velocity plus position is the velocity
            let v = [s.grad[0] + x, s.grad[1] + y];
            let v_inf = if x < nr.xibar { [st.gas.u1, 0.0] } else { [0.0, 0.0] };
            total += (v[0] - v_inf[0]).hypot(v[1] - v_inf[1]) * cell;
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub sigma: f64,
    /// `sup |f - xibar|` in original coordinates
    pub shock_distance: f64,
    pub w11: f64,
    /// distance of `P1` from its normal-reflection position
    pub p1_error: f64,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
    pub checks: Vec<Check>,
}

pub fn limit_row(sol: &ReflectionSolution) -> LimitRow {
    let st = &sol.state;
    let nr = st.normal;
    let shock_distance = sol.curve.xi().iter().fold(0.0f64, |m, &x| m.max((x + st.u2 - nr.xibar).abs()));
    let p1o = [st.p1[0] + st.u2, st.p1[1] + st.v2];
    let p1n = [nr.xibar, (nr.c2bar * nr.c2bar - nr.xibar * nr.xibar).sqrt()];
    LimitRow {
        sigma: st.sigma,
        shock_distance,
        w11: w11_distance(sol, 128),
        p1_error: (p1o[0] - p1n[0]).hypot(p1o[1] - p1n[1]),
        outer_iterations: sol.diagnostics.outer_iterations,
    }
}

/// Monotone decrease of both distances along decreasing `sigma`, and
/// halving ratios of the shock distance in `[1.5, 2.5]`.
pub fn evaluate_limit(rows: &[LimitRow]) -> Vec<Check> {
    let mut mono_s = true;
    let mut mono_w = true;
    let mut worst_ratio: f64 = 2.0;
    let mut ratios = Vec::new();
    for w in rows.windows(2) {
        mono_s &= w[1].shock_distance < w[0].shock_distance;
        mono_w &= w[1].w11 < w[0].w11;
        if w[1].shock_distance > 0.0 && (w[0].sigma / w[1].sigma - 2.0).abs() < 1e-9 {
            let r = w[0].shock_distance / w[1].shock_distance;
            ratios.push(r);
            if (r - 2.0).abs() > (worst_ratio - 2.0).abs() {
                worst_ratio = r;
            }
        }
    }
    let fmt_r = ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(",");
    let mut a = Check::upper("limit_shock_monotone", if mono_s { 0.0 } else { 1.0 }, 0.0, None);
    a.pass = mono_s;
    let mut b = Check::upper("limit_w11_monotone", if mono_w { 0.0 } else { 1.0 }, 0.0, None);
    b.pass = mono_w;
    let mut c = Check::upper("limit_shock_ratio", worst_ratio, 2.5, None).with_note(format!("ratios=[{fmt_r}]"));
    c.pass = (1.5..=2.5).contains(&worst_ratio);
    vec![a, b, c]
}

/// Runs each `sigma` to its fixed point and tabulates the distances to
/// normal reflection.
pub fn normal_reflection_limit(gas: &GasSetup, sigmas: &[f64], cfg: &IterationConfig) -> Result<LimitTable> {
    normal_reflection(gas)?;
    let mut rows = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        let c = IterationConfig { sigma: s, ..cfg.clone() };
        let sol = run_to_fixed_point(gas, std::f64::consts::FRAC_PI_2 - s, &c)?;
        rows.push(limit_row(&sol));
    }
    let checks = evaluate_limit(&rows);
    Ok(LimitTable { rows, checks })
}
