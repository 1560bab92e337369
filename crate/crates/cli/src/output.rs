//! Files written by `solve` and `sweep`. Every file starts with a
//! `# config_hash=...` line; CSV files follow it with a column header.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::Write as _;
use std::path::Path;

use regrefl_core::assembly::assemble_coefficients;
use regrefl_core::geometry::SonicFrame;
use regrefl_core::iteration::{assemble_global, shock_polyline, GlobalRegion, ReflectionSolution};
use regrefl_core::verification::{Check, LimitRow};
use regrefl_core::{Error, Result};

use crate::config::RunConfig;

pub const CONFIG_FILE: &str = "config.txt";
pub const PSI_FILE: &str = "psi_field.csv";
pub const SHOCK_FILE: &str = "shock.csv";
pub const GLOBAL_FILE: &str = "global_field.csv";
pub const COEFF_FILE: &str = "coefficients.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.txt";

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or large magnitudes.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

fn write_csv(path: &Path, hash: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(hash_line(hash).as_bytes())?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn region_name(r: GlobalRegion) -> &'static str {
    match r {
        GlobalRegion::State0 => "state0",
        GlobalRegion::State1 => "state1",
        GlobalRegion::State2 => "state2",
        GlobalRegion::Omega => "omega",
        GlobalRegion::Outside => "outside",
    }
}

fn check_line(c: &Check) -> String {
    let mut s = format!(
        "{} measured={:e} threshold={:e}",
        if c.pass { "PASS" } else { "FAIL" },
        c.measured,
        c.threshold
    );
    if let Some([x, y]) = c.worst {
        let _ = write!(s, " at={x},{y}");
    }
    if !c.note.is_empty() {
        let _ = write!(s, " {}", c.note);
    }
    s
}

fn summary(sol: &ReflectionSolution, cfg: &RunConfig) -> String {
    let st = &sol.state;
    let d = &sol.diagnostics;
    let mut s = hash_line(&cfg.hash());
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("config_hash", cfg.hash());
    kv("converged", sol.converged.to_string());
    kv("verification", if sol.verification.all_pass() { "PASS" } else { "FAIL" }.into());
    for (k, v) in [
        ("gamma", st.gas.gamma),
        ("rho0", st.gas.rho0),
        ("rho1", st.gas.rho1),
        ("u1", st.gas.u1),
        ("xi0", st.gas.xi0),
        ("theta_w", st.theta_w),
        ("sigma", st.sigma),
        ("rho2bar", st.normal.rho2bar),
        ("xibar", st.normal.xibar),
        ("c2bar", st.normal.c2bar),
        ("rho2", st.rho2),
        ("theta_s", st.theta_s),
        ("xitilde", st.xitilde),
        ("u2", st.u2),
        ("v2", st.v2),
        ("c2", st.c2),
        ("xihat", st.xihat),
        ("epsilon", sol.domain.epsilon),
        ("h", sol.domain.h()),
        ("fixed_point_residual", sol.fixed_point_residual),
        ("m1", d.m1),
        ("m2", d.m2),
        ("barrier_upper_constant", d.barrier_upper),
        ("barrier_sonic_constant", d.barrier_sonic),
        ("shock_constant", d.shock_constant),
        ("norm_constant", d.norm_constant),
    ] {
        kv(k, num(v));
    }
    kv("resolution", format!("{},{}", sol.domain.mesh.ni, sol.domain.mesh.nj));
    kv("outer_iterations", d.outer_iterations.to_string());
    kv("residual_history", d.residual_history.iter().map(|r| format!("{r:e}")).collect::<Vec<_>>().join(","));
    kv("picard_per_outer", d.reports.iter().map(|r| r.total_picard().to_string()).collect::<Vec<_>>().join(","));
    kv("factorizations", d.reports.iter().map(|r| r.factorizations).sum::<usize>().to_string());
    kv("delta_zero_converged", d.reports.iter().all(|r| r.delta_zero_converged).to_string());
    if let Some(r) = d.reports.last() {
        kv("final_delta", num(r.final_delta));
        kv("min_ellipticity", num(r.min_ellipticity));
        kv("linear_residual", format!("{:e}", r.linear_residual));
        kv("cutoff_nodes", r.cutoff_nodes.to_string());
    }
    let (lo, hi) = sol.psi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    kv("min_psi", num(lo));
    kv("max_psi", num(hi));
    for c in &sol.verification.checks {
        kv(&format!("check.{}", c.name), check_line(c));
    }
    s
}

pub fn write_run(sol: &ReflectionSolution, cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let hash = cfg.hash();
    fs::write(dir.join(CONFIG_FILE), format!("{}{}", hash_line(&hash), cfg.numerics_text()))?;
    let dom = &sol.domain;
    let mesh = &dom.mesh;

    if cfg.emit_psi {
        let frame = SonicFrame::new(&sol.state);
        write_csv(
            &dir.join(PSI_FILE),
            &hash,
            &["i", "j", "xi", "eta", "x", "y", "psi", "phi"],
            (0..mesh.n_nodes()).map(|k| {
                let (i, j) = mesh.ij(k);
                let p = mesh.pts[k];
                let y = frame.to_sonic(p).map(|q| q[1]).unwrap_or(f64::NAN);
                vec![
                    i.to_string(),
                    j.to_string(),
                    num(p[0]),
                    num(p[1]),
                    num(dom.x[k]),
                    num(y),
                    num(sol.psi[k]),
                    num(sol.phi[k]),
                ]
            }),
        )?;
    }

    write_csv(
        &dir.join(SHOCK_FILE),
        &hash,
        &["eta", "xi"],
        shock_polyline(sol).into_iter().map(|p| vec![num(p[1]), num(p[0])]),
    )?;

    if cfg.emit_global {
        let field = assemble_global(sol, &cfg.sampling_grid(&sol.state));
        write_csv(
            &dir.join(GLOBAL_FILE),
            &hash,
            &["xi", "eta", "region", "phi", "phi_xi", "phi_eta"],
            field.samples.iter().map(|s| {
                vec![
                    num(s.point[0]),
                    num(s.point[1]),
                    region_name(s.region).into(),
                    num(s.phi),
                    num(s.grad[0]),
                    num(s.grad[1]),
                ]
            }),
        )?;
    }

    if cfg.emit_coefficients {
        let c = assemble_coefficients(dom, &sol.psi, &sol.psi, 0.0)?;
        write_csv(
            &dir.join(COEFF_FILE),
            &hash,
            &["i", "j", "xi", "eta", "region", "a11", "a12", "a22", "cutoff_active"],
            (0..mesh.n_nodes()).map(|k| {
                let (i, j) = mesh.ij(k);
                let e = &c.entries[k];
                vec![
                    i.to_string(),
                    j.to_string(),
                    num(mesh.pts[k][0]),
                    num(mesh.pts[k][1]),
                    dom.region[k].name().into(),
                    num(e.a[0]),
                    num(e.a[1]),
                    num(e.a[2]),
                    e.cutoff_active.to_string(),
                ]
            }),
        )?;
    }

    fs::write(dir.join(SUMMARY_FILE), summary(sol, cfg))?;
    Ok(())
}

pub fn write_sweep(cfg: &RunConfig, rows: &[LimitRow], checks: &[Check], dir: &Path) -> Result<()> {
    let hash = cfg.hash();
    write_csv(
        &dir.join(SWEEP_FILE),
        &hash,
        &["sigma", "shock_distance", "w11", "p1_error", "outer_iterations"],
        rows.iter().map(|r| {
            vec![
                num(r.sigma),
                num(r.shock_distance),
                num(r.w11),
                num(r.p1_error),
                r.outer_iterations.to_string(),
            ]
        }),
    )?;
    let mut s = hash_line(&hash);
    let _ = writeln!(s, "config_hash={hash}");
    let _ = writeln!(s, "runs={}", rows.len());
    let _ = writeln!(s, "verdict={}", if checks.iter().all(|c| c.pass) { "PASS" } else { "FAIL" });
    for c in checks {
        let _ = writeln!(s, "check.{}={}", c.name, check_line(c));
    }
    fs::write(dir.join(SWEEP_SUMMARY_FILE), s)?;
    Ok(())
}

pub struct PsiField {
    pub ni: usize,
    pub nj: usize,
    pub pts: Vec<[f64; 2]>,
    pub psi: Vec<f64>,
}

/// Reads a field written by [`write_run`], checking its config hash.
pub fn read_psi_field(path: &Path, hash: &str) -> Result<PsiField> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().next().unwrap_or("");
    if first.trim() != hash_line(hash).trim() {
        return Err(Error::Config(format!("{} was written for a different configuration", path.display())));
    }
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let head = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| head.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("missing column {name}")));
    let (ci, cj, cx, ce, cp) = (col("i")?, col("j")?, col("xi")?, col("eta")?, col("psi")?);
    let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", path.display()));
    let mut recs = Vec::new();
    for r in rd.records() {
        let r = r.map_err(csv_err)?;
        let f = |c: usize| -> Result<f64> { r[c].parse::<f64>().map_err(|e| bad(&e)) };
        let u = |c: usize| -> Result<usize> { r[c].parse::<usize>().map_err(|e| bad(&e)) };
        recs.push((u(ci)?, u(cj)?, [f(cx)?, f(ce)?], f(cp)?));
    }
    let ni = recs.iter().map(|r| r.0).max().ok_or_else(|| bad(&"empty field"))?;
    let nj = recs.iter().map(|r| r.1).max().unwrap_or(0);
    let n = (ni + 1) * (nj + 1);
    if recs.len() != n {
        return Err(bad(&format!("{} rows for a {ni}x{nj} grid", recs.len())));
    }
    let mut pts = vec![[f64::NAN; 2]; n];
    let mut psi = vec![f64::NAN; n];
    for (i, j, p, v) in recs {
        let k = j * (ni + 1) + i;
        pts[k] = p;
        psi[k] = v;
    }
    Ok(PsiField { ni, nj, pts, psi })
}
