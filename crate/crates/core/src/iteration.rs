//! Outer free-boundary iteration and assembly of the global solution.

use crate::curve::FreeBoundaryCurve;
use crate::error::{Error, Result};
use crate::gas::GasSetup;
use crate::geometry::{build_domain, default_epsilon, extract_free_boundary, reference_curve, ReflectionDomain};
use crate::norms::discrete_norms;
use crate::solver::{solve_nonlinear_bvp, SolveReport, SolverConfig};
use crate::states::{background_potentials, state2_solve, StateTwo};
use crate::verification::{verify, VerificationReport};

pub const NORM_ALPHA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct IterationConfig {
    pub sigma: f64,
    /// strip width; `None` uses `0.1 (c2bar - |xibar|)`
    pub epsilon: Option<f64>,
    pub resolution: (usize, usize),
    pub solver: SolverConfig,
    pub omega: f64,
    /// `None` uses `1e-8 c2bar`
    pub tol_fb: Option<f64>,
    pub max_outer: usize,
    /// after the first outer step, start directly at zero viscosity
    pub warm_skip_continuation: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            sigma: 0.01,
            epsilon: None,
            resolution: (64, 64),
            solver: SolverConfig::default(),
            omega: 0.7,
            tol_fb: None,
            max_outer: 100,
            warm_skip_continuation: true,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Config(format!("omega={} outside (0, 1]", self.omega)));
        }
        if let Some(t) = self.tol_fb {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tol_fb={t} must be positive")));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return Err(Error::Config(format!("epsilon={e} must be positive")));
            }
        }
        if self.resolution.0 < 8 || self.resolution.1 < 8 {
            return Err(Error::Config("resolution must be at least 8x8".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::Config(format!("sigma={} must be non-negative", self.sigma)));
        }
        Ok(())
    }

    pub fn epsilon_for(&self, st: &StateTwo) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(st))
    }

    pub fn tol_fb_for(&self, st: &StateTwo) -> f64 {
        self.tol_fb.unwrap_or(1e-8 * st.normal.c2bar)
    }
}

/// Result of one outer step.
#[derive(Debug, Clone)]
pub struct OuterStep {
    /// domain built from the incoming curve
    pub domain: ReflectionDomain,
    /// solution on `domain`
    pub psi: Vec<f64>,
    pub report: SolveReport,
    pub extracted: FreeBoundaryCurve,
    pub fb_new: FreeBoundaryCurve,
    /// solution carried onto the domain of `fb_new`
    pub psi_new: Vec<f64>,
    /// sup of the relaxed boundary change
    pub residual: f64,
}

/// Bilinear transfer of `psi` from `from` onto the nodes of `to`.
pub fn regrid(from: &ReflectionDomain, psi: &[f64], to: &ReflectionDomain) -> Vec<f64> {
    let mut out = Vec::with_capacity(to.n_nodes());
    let mut hint = None;
    for &p in &to.mesh.pts {
        let loc = from.mesh.locate(p, hint);
        hint = Some(loc.cell);
        out.push(from.mesh.interpolate(psi, &loc));
    }
    out
}

fn relax(old: &FreeBoundaryCurve, new: &FreeBoundaryCurve, omega: f64) -> Result<FreeBoundaryCurve> {
    let xi: Vec<f64> = old.xi().iter().zip(new.xi()).map(|(a, b)| (1.0 - omega) * a + omega * b).collect();
    let mut xi = xi;
    let n = xi.len();
    xi[n - 1] = new.xi()[n - 1];
    FreeBoundaryCurve::new(new.eta().to_vec(), xi, new.end_slope())
}

/// Solve on the domain of `fb` with frozen iterate `psi`, extract the new
/// shock, relax it, and carry the solution over to the new domain.
pub fn outer_step(
    st: &StateTwo,
    fb: &FreeBoundaryCurve,
    psi: &[f64],
    cfg: &IterationConfig,
    warm: bool,
) -> Result<OuterStep> {
    let eps = cfg.epsilon_for(st);
    let domain = build_domain(st, fb, cfg.resolution, eps)?;
    if psi.len() != domain.n_nodes() {
        return Err(Error::InvariantViolated("iterate does not match the domain".into()));
    }
    let (sol, report) = if warm && cfg.warm_skip_continuation && cfg.solver.try_delta_zero {
        let quick = SolverConfig { deltas: Vec::new(), ..cfg.solver.clone() };
        match solve_nonlinear_bvp(&domain, psi, Some(psi), &quick) {
            Ok((s, r)) if r.delta_zero_converged => (s, r),
            _ => solve_nonlinear_bvp(&domain, psi, Some(psi), &cfg.solver)?,
        }
    } else {
        solve_nonlinear_bvp(&domain, psi, Some(psi), &cfg.solver)?
    };
    let extracted = extract_free_boundary(&domain, &sol, st)?;
    let fb_new = relax(&domain.curve, &extracted, cfg.omega)?;
    let residual = domain.curve.sup_distance(&fb_new);
    let new_domain = build_domain(st, &fb_new, cfg.resolution, eps)?;
    let psi_new = regrid(&domain, &sol, &new_domain);
    Ok(OuterStep { domain, psi: sol, report, extracted, fb_new, psi_new, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub outer_iterations: usize,
    pub residual_history: Vec<f64>,
    pub reports: Vec<SolveReport>,
    /// parabolic norm over the inner strip
    pub m1: f64,
    /// weighted norm over the outer part
    pub m2: f64,
    /// `max psi / sigma`
    pub barrier_upper: f64,
    /// `max |psi| / (x sigma / eps)` near the sonic arc
    pub barrier_sonic: f64,
    /// `sup |f - l| / sigma`
    pub shock_constant: f64,
    /// `(M1 eps^(1-alpha) + M2 sigma)` reference scale and the implied constant
    pub norm_constant: f64,
}

#[derive(Debug, Clone)]
pub struct ReflectionSolution {
    pub state: StateTwo,
    pub domain: ReflectionDomain,
    pub curve: FreeBoundaryCurve,
    pub psi: Vec<f64>,
    /// `phi2 + psi` at the nodes
    pub phi: Vec<f64>,
    pub converged: bool,
    pub fixed_point_residual: f64,
    pub diagnostics: Diagnostics,
    pub verification: VerificationReport,
}

/// Iterates from the straight shock and `psi = 0` to a fixed point, then
/// verifies the result.
pub fn run_to_fixed_point(gas: &GasSetup, theta_w: f64, cfg: &IterationConfig) -> Result<ReflectionSolution> {
    cfg.validate()?;
    let st = state2_solve(gas, theta_w)?;
    let tol = cfg.tol_fb_for(&st);
    let mut fb = reference_curve(&st, cfg.resolution.0 + 1)?;
    let mut psi = vec![0.0; (cfg.resolution.0 + 1) * (cfg.resolution.1 + 1)];
    let mut history = Vec::new();
    let mut reports = Vec::new();
    for k in 0..cfg.max_outer {
        let step = outer_step(&st, &fb, &psi, cfg, k > 0)?;
        history.push(step.residual);
        reports.push(step.report.clone());
        if step.residual <= tol {
            return Ok(finish(st, step, history, reports, cfg));
        }
        fb = step.fb_new;
        psi = step.psi_new;
    }
    Err(Error::MaxOuterExceeded { iterations: cfg.max_outer, residual: *history.last().unwrap_or(&f64::NAN) })
}

fn finish(
    st: StateTwo,
    step: OuterStep,
    history: Vec<f64>,
    reports: Vec<SolveReport>,
    _cfg: &IterationConfig,
) -> ReflectionSolution {
    let domain = step.domain;
    let psi = step.psi;
    let phi: Vec<f64> =
        domain.mesh.pts.iter().zip(&psi).map(|(&p, &v)| background_potentials(&st, p).phi[2] + v).collect();
    let (m1, m2) = discrete_norms(&domain, &psi, NORM_ALPHA);
    let sigma = st.sigma;
    let eps = domain.epsilon;
    let max_psi = psi.iter().cloned().fold(0.0f64, f64::max);
    let mut sonic = 0.0f64;
    for k in 0..domain.n_nodes() {
        let x = domain.x[k];
        if x > 0.0 && x < 2.0 * eps && domain.mesh.is_interior(k) {
            sonic = sonic.max(psi[k].abs() / x);
        }
    }
    let shock_dev = domain.curve.eta().iter().zip(domain.curve.xi()).fold(0.0f64, |m, (&e, &x)| m.max((x - st.l(e)).abs()));
    let per_sigma = |v: f64| if sigma > 0.0 { v / sigma } else { 0.0 };
    let phi_sup = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = m1 * eps.powf(1.0 - NORM_ALPHA) + m2 * sigma;
    let diagnostics = Diagnostics {
        outer_iterations: history.len(),
        residual_history: history,
        reports,
        m1,
        m2,
        barrier_upper: per_sigma(max_psi),
        barrier_sonic: per_sigma(sonic * eps),
        shock_constant: per_sigma(shock_dev),
        norm_constant: if scale > 0.0 { phi_sup / scale } else { 0.0 },
    };
    let mut sol = ReflectionSolution {
        state: st,
        curve: domain.curve.clone(),
        domain,
        psi,
        phi,
        converged: true,
        fixed_point_residual: step.residual,
        diagnostics,
        verification: VerificationReport::default(),
    };
    sol.verification = verify(&sol);
    sol
}

/// Region of the full flow field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalRegion {
    /// ahead of the incident shock
    State0,
    /// between the incident and reflected shocks
    State1,
    /// behind the straight part of the reflected shock
    State2,
    /// the subsonic region, `phi2 + psi`
    Omega,
    /// inside the wedge or below the symmetry line
    Outside,
}

impl GlobalRegion {
    pub fn code(self) -> u8 {
        match self {
            GlobalRegion::State0 => 0,
            GlobalRegion::State1 => 1,
            GlobalRegion::State2 => 2,
            GlobalRegion::Omega => 3,
            GlobalRegion::Outside => 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalSample {
    /// point in the original (unshifted) coordinates
    pub point: [f64; 2],
    pub region: GlobalRegion,
    pub phi: f64,
    pub grad: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    pub xi: (f64, f64),
    pub eta: (f64, f64),
    pub n: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalField {
    pub samples: Vec<GlobalSample>,
    /// reflected shock in original coordinates, from the symmetry line through `P1` to `P0`
    pub polyline: Vec<[f64; 2]>,
}

/// Evaluation of the assembled solution at arbitrary points.
pub struct GlobalEvaluator<'a> {
    sol: &'a ReflectionSolution,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl<'a> GlobalEvaluator<'a> {
    pub fn new(sol: &'a ReflectionSolution) -> Self {
        let m = &sol.domain.mesh;
        let (gx, gy) = (0..m.n_nodes()).map(|k| {
            let g = m.gradient(&sol.psi, k);
            (g[0], g[1])
        }).unzip();
        GlobalEvaluator { sol, gx, gy }
    }

    /// Reflected shock position `xi` (shifted) at shifted height `eta`.
    pub fn shock_xi(&self, eta: f64) -> f64 {
        let st = &self.sol.state;
        if eta <= st.eta1() {
            self.sol.curve.eval(eta)
        } else {
            st.l(eta)
        }
    }

    pub fn sample(&self, point: [f64; 2]) -> GlobalSample {
        let st = &self.sol.state;
        let gas = &st.gas;
        let [xo, yo] = point;
        let p = [xo - st.u2, yo - st.v2];
        let bg = background_potentials(st, p);
        let outside = GlobalSample { point, region: GlobalRegion::Outside, phi: f64::NAN, grad: [f64::NAN; 2] };
        let in_wedge = xo > 0.0 && (st.sigma == 0.0 || yo < xo * st.theta_w.tan());
        if yo < 0.0 || in_wedge {
            return outside;
        }
        let pick = |i: usize, region| GlobalSample { point, region, phi: bg.phi[i], grad: bg.grad[i] };
        if xo >= gas.xi0 {
            return pick(0, GlobalRegion::State0);
        }
        if p[0] < self.shock_xi(p[1]) {
            return pick(1, GlobalRegion::State1);
        }
        if p[0].hypot(p[1]) < st.c2 {
            let m = &self.sol.domain.mesh;
            let loc = m.locate(p, None);
            let psi = m.interpolate(&self.sol.psi, &loc);
            let gx = m.interpolate(&self.gx, &loc);
            let gy = m.interpolate(&self.gy, &loc);
            return GlobalSample {
                point,
                region: GlobalRegion::Omega,
                phi: bg.phi[2] + psi,
                grad: [bg.grad[2][0] + gx, bg.grad[2][1] + gy],
            };
        }
        pick(2, GlobalRegion::State2)
    }
}

/// Samples the composite solution on a rectangular grid of cell midpoints
/// in original coordinates.
pub fn assemble_global(sol: &ReflectionSolution, grid: &SamplingGrid) -> GlobalField {
    let ev = GlobalEvaluator::new(sol);
    let (nx, ny) = grid.n;
    let mut samples = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = grid.xi.0 + (grid.xi.1 - grid.xi.0) * (i as f64 + 0.5) / nx as f64;
            let y = grid.eta.0 + (grid.eta.1 - grid.eta.0) * (j as f64 + 0.5) / ny as f64;
            samples.push(ev.sample([x, y]));
        }
    }
    GlobalField { samples, polyline: shock_polyline(sol) }
}

/// Reflected shock in original coordinates.
pub fn shock_polyline(sol: &ReflectionSolution) -> Vec<[f64; 2]> {
    let st = &sol.state;
    let mut out: Vec<[f64; 2]> =
        sol.curve.eta().iter().zip(sol.curve.xi()).map(|(&e, &x)| [x + st.u2, e + st.v2]).collect();
    if st.p0[1].is_finite() && st.p0[1] > st.eta1() {
        out.push([st.p0[0] + st.u2, st.p0[1] + st.v2]);
    }
    out
}
