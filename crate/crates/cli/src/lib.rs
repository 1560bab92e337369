//! Commands behind the `regrefl` binary.

pub mod config;
pub mod output;

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use regrefl_core::gas::GasSetup;
use regrefl_core::geometry::build_domain;
use regrefl_core::iteration::{run_to_fixed_point, ReflectionSolution};
use regrefl_core::states::{normal_reflection, state2_solve};
use regrefl_core::verification::{evaluate_limit, limit_row, verify_field, LimitRow, VerificationReport};
use regrefl_core::{Error, FreeBoundaryCurve, Result};

pub use config::{Angle, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::DegenerateShock { .. } => EXIT_USAGE,
        _ => EXIT_SOLVER,
    }
}

/// `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        format!("{:.*}", (11 - mag) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

pub fn cmd_state2(gas: &GasSetup, angle: Angle) -> Result<String> {
    let nr = normal_reflection(gas)?;
    let st = state2_solve(gas, angle.theta_w())?;
    let orig = |p: [f64; 2]| [p[0] + st.u2, p[1] + st.v2];
    let (p0, p1) = (orig(st.p0), orig(st.p1));
    let rows = [
        ("rho2bar", nr.rho2bar),
        ("xibar", nr.xibar),
        ("c2bar", nr.c2bar),
        ("theta_w", st.theta_w),
        ("sigma", st.sigma),
        ("rho2", st.rho2),
        ("theta_s", st.theta_s),
        ("xitilde", st.xitilde),
        ("u2", st.u2),
        ("v2", st.v2),
        ("c2", st.c2),
        ("xihat", st.xihat),
        ("p0_xi", p0[0]),
        ("p0_eta", p0[1]),
        ("p1_xi", p1[0]),
        ("p1_eta", p1[1]),
    ];
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<8} = {}", sig12(v));
    }
    Ok(s)
}

fn gas_of(cfg: &RunConfig) -> Result<GasSetup> {
    regrefl_core::gas::incident_shock(cfg.gamma, cfg.rho0, cfg.rho1)
}

/// Solves one configuration and writes every output into `out`. Returns
/// the solution so callers can inspect the verdict.
pub fn cmd_solve(cfg: &RunConfig, out: &Path) -> Result<ReflectionSolution> {
    let angle = cfg.require_angle()?;
    let gas = gas_of(cfg)?;
    let sol = run_to_fixed_point(&gas, angle.theta_w(), &cfg.iteration(angle.sigma()))?;
    output::write_run(&sol, cfg, out)?;
    Ok(sol)
}

pub struct SweepOutcome {
    pub rows: Vec<LimitRow>,
    pub pass: bool,
}

fn sigma_dir(out: &Path, sigma: f64) -> PathBuf {
    out.join(format!("sigma_{sigma}"))
}

/// One run per `sigma`, concurrently, each into its own subdirectory, then
/// the convergence table.
pub fn cmd_sweep(cfg: &RunConfig, sigmas: &[f64], out: &Path) -> Result<SweepOutcome> {
    if sigmas.is_empty() {
        return Err(Error::Config("empty sigma list".into()));
    }
    let gas = gas_of(cfg)?;
    fs::create_dir_all(out)?;
    let results: Vec<Result<(LimitRow, bool)>> = std::thread::scope(|s| {
        let handles: Vec<_> = sigmas
            .iter()
            .map(|&sigma| {
                let gas = &gas;
                s.spawn(move || {
                    let run_cfg = RunConfig { angle: Some(Angle::Sigma(sigma)), ..cfg.clone() };
                    let sol = run_to_fixed_point(gas, FRAC_PI_2 - sigma, &run_cfg.iteration(sigma))?;
                    output::write_run(&sol, &run_cfg, &sigma_dir(out, sigma))?;
                    let row = limit_row(&sol);
                    Ok((LimitRow { sigma, ..row }, sol.verification.all_pass()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::InvariantViolated("sweep worker panicked".into())))).collect()
    });
    let mut rows = Vec::new();
    let mut verified = true;
    for r in results {
        let (row, ok) = r?;
        rows.push(row);
        verified &= ok;
    }
    let checks = evaluate_limit(&rows);
    output::write_sweep(cfg, &rows, &checks, out)?;
    Ok(SweepOutcome { pass: verified && checks.iter().all(|c| c.pass), rows })
}

/// Re-runs the verification battery on the fields written by `solve`.
pub fn cmd_verify(dir: &Path) -> Result<VerificationReport> {
    let cfg = RunConfig::parse(&fs::read_to_string(dir.join(output::CONFIG_FILE))?)?;
    let angle = cfg.require_angle()?;
    let st = state2_solve(&gas_of(&cfg)?, angle.theta_w())?;
    let field = output::read_psi_field(&dir.join(output::PSI_FILE), &cfg.hash())?;
    let (ni, nj) = (field.ni, field.nj);
    if (ni, nj) != cfg.resolution {
        return Err(Error::Config(format!("field is {ni}x{nj}, config says {:?}", cfg.resolution)));
    }
    // shock node i carries curve sample ni - i
    let mut eta = Vec::with_capacity(ni + 1);
    let mut xi = Vec::with_capacity(ni + 1);
    for i in (0..=ni).rev() {
        let p = field.pts[nj * (ni + 1) + i];
        eta.push(p[1]);
        xi.push(p[0]);
    }
    let curve = FreeBoundaryCurve::new(eta, xi, st.cot_s())?;
    let eps = cfg.iteration(st.sigma).epsilon_for(&st);
    let domain = build_domain(&st, &curve, (ni, nj), eps)?;
    let off = domain.mesh.pts.iter().zip(&field.pts).fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs())));
    if off > 1e-12 {
        return Err(Error::Config(format!("field nodes do not match the rebuilt mesh (offset {off:e})")));
    }
    Ok(verify_field(&domain, &field.psi))
}
