//! Discrete oblique-derivative problem, its Krylov solve, and the
//! frozen-coefficient Picard loop with viscosity continuation.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::MatMut;

use crate::assembly::{
    assemble_coefficients, fixed_bc_rows, rh_condition_row, shock_normal, BcKind, BoundaryConditionRow,
    CoefficientSet,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh, ReflectionDomain, Taps};

pub const LINEAR_TOL: f64 = 1e-10;
const RESTART: usize = 40;
const STALE_MAX_ITERS: usize = 80;

/// Sparse operator in compressed rows plus right-hand side.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for m in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.val[m] * x[self.col[m]];
            }
            *yr = s;
        }
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut ax = vec![0.0; self.n];
        self.matvec(x, &mut ax);
        self.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect()
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        let bn = norm(&self.rhs);
        let rn = norm(&self.residual(x));
        if bn == 0.0 {
            rn
        } else {
            rn / bn
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |m| (self.col[m], self.val[m]))
    }

    fn factor(&self) -> Result<Lu<usize, f64>> {
        let mut trip = Vec::with_capacity(self.val.len());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &trip)
            .map_err(|e| Error::IllPosedRow { row: 0, reason: format!("{e:?}") })?;
        mat.sp_lu().map_err(|e| Error::IllPosedRow { row: 0, reason: format!("LU failed: {e:?}") })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Assembles `sum A_ab D_ab psi = source` at interior nodes and the given
/// boundary rows elsewhere.
pub fn assemble_linear_system(
    mesh: &Mesh,
    coeffs: &[[f64; 3]],
    bc: &[Option<BoundaryConditionRow>],
    source: &[f64],
) -> Result<LinearSystem> {
    let n = mesh.n_nodes();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col = Vec::with_capacity(10 * n);
    let mut val = Vec::with_capacity(10 * n);
    let mut rhs = vec![0.0; n];
    row_ptr.push(0);
    for k in 0..n {
        let mut t = Taps::default();
        if mesh.is_interior(k) {
            let h = mesh.hess_taps(k);
            let a = coeffs[k];
            t.add_scaled(&h[0], a[0]);
            t.add_scaled(&h[1], 2.0 * a[1]);
            t.add_scaled(&h[2], a[2]);
            rhs[k] = source[k];
        } else {
            let row = bc[k].ok_or_else(|| Error::IllPosedRow { row: k, reason: "boundary node without a condition".into() })?;
            match row.kind {
                BcKind::Dirichlet => t.push(k, 1.0),
                BcKind::Neumann | BcKind::Oblique => {
                    let g = mesh.grad_taps(k);
                    t.add_scaled(&g[0], row.b[0]);
                    t.add_scaled(&g[1], row.b[1]);
                    t.push(k, row.b[2]);
                }
            }
            rhs[k] = row.rhs;
        }
        let diag = t.iter().find(|&(c, _)| c == k).map(|(_, v)| v).unwrap_or(0.0);
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::IllPosedRow { row: k, reason: format!("diagonal {diag}") });
        }
        let mut entries: Vec<(usize, f64)> = t.iter().collect();
        entries.sort_by_key(|e| e.0);
        for (c, v) in entries {
            col.push(c);
            val.push(v);
        }
        row_ptr.push(col.len());
    }
    Ok(LinearSystem { n, row_ptr, col, val, rhs })
}

/// LU-preconditioned restarted GMRES. The factorisation is kept between
/// calls and refreshed only when a stale one stops being effective.
#[derive(Default)]
pub struct LinearSolver {
    lu: Option<Lu<usize, f64>>,
    pub factorizations: usize,
    pub iterations: usize,
    pub last_residual: f64,
}

impl LinearSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn invalidate(&mut self) {
        self.lu = None;
    }

    pub fn solve(&mut self, sys: &LinearSystem, x0: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; sys.n]);
        if self.lu.is_some() {
            let (ok, it, res) = self.gmres(sys, &mut x, STALE_MAX_ITERS);
            self.iterations += it;
            self.last_residual = res;
            if ok {
                return Ok(x);
            }
        }
        self.lu = Some(sys.factor()?);
        self.factorizations += 1;
        let (ok, it, res) = self.gmres(sys, &mut x, 4 * RESTART);
        self.iterations += it;
        self.last_residual = res;
        if ok {
            Ok(x)
        } else {
            Err(Error::LinearSolveStalled { residual: res, iterations: it })
        }
    }

    fn precond(&self, v: &mut [f64]) {
        let n = v.len();
        let lu = self.lu.as_ref().expect("factorised");
        lu.solve_in_place(MatMut::from_column_major_slice_mut(v, n, 1));
    }

    fn gmres(&self, sys: &LinearSystem, x: &mut [f64], max_iters: usize) -> (bool, usize, f64) {
        let n = sys.n;
        let bn = norm(&sys.rhs);
        let scale = if bn == 0.0 { 1.0 } else { bn };
        let mut total = 0;
        let mut r = sys.residual(x);
        let mut rel = norm(&r) / scale;
        if bn == 0.0 && rel == 0.0 {
            return (true, 0, 0.0);
        }
        while total < max_iters {
            if rel <= LINEAR_TOL {
                return (true, total, rel);
            }
            let beta = norm(&r);
            let mut v: Vec<Vec<f64>> = vec![r.iter().map(|a| a / beta).collect()];
            let mut h = vec![vec![0.0; RESTART]; RESTART + 1];
            let (mut cs, mut sn) = (vec![0.0; RESTART], vec![0.0; RESTART]);
            let mut g = vec![0.0; RESTART + 1];
            g[0] = beta;
            let mut m = 0;
            let mut w = vec![0.0; n];
            while m < RESTART && total < max_iters {
                let mut z = v[m].clone();
                self.precond(&mut z);
                sys.matvec(&z, &mut w);
                for (i, vi) in v.iter().enumerate() {
                    let hij = dot(&w, vi);
                    h[i][m] = hij;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= hij * vk;
                    }
                }
                let hn = norm(&w);
                h[m + 1][m] = hn;
                for i in 0..m {
                    let t = cs[i] * h[i][m] + sn[i] * h[i + 1][m];
                    h[i + 1][m] = -sn[i] * h[i][m] + cs[i] * h[i + 1][m];
                    h[i][m] = t;
                }
                let d = h[m][m].hypot(h[m + 1][m]);
                if d == 0.0 {
                    break;
                }
                cs[m] = h[m][m] / d;
                sn[m] = h[m + 1][m] / d;
                h[m][m] = d;
                h[m + 1][m] = 0.0;
                g[m + 1] = -sn[m] * g[m];
                g[m] *= cs[m];
                m += 1;
                total += 1;
                if g[m].abs() / scale <= 0.1 * LINEAR_TOL || hn == 0.0 {
                    break;
                }
                v.push(w.iter().map(|a| a / hn).collect());
            }
            if m == 0 {
                break;
            }
            let mut y = vec![0.0; m];
            for i in (0..m).rev() {
                let s: f64 = (i + 1..m).map(|j| h[i][j] * y[j]).sum();
                y[i] = (g[i] - s) / h[i][i];
            }
            let mut u = vec![0.0; n];
            for (j, yj) in y.iter().enumerate() {
                for (uk, vk) in u.iter_mut().zip(&v[j]) {
                    *uk += yj * vk;
                }
            }
            self.precond(&mut u);
            for (xk, uk) in x.iter_mut().zip(&u) {
                *xk += uk;
            }
            r = sys.residual(x);
            rel = norm(&r) / scale;
        }
        (rel <= LINEAR_TOL, total, rel)
    }
}

/// One linear solve with explicit coefficients and boundary rows.
pub fn solve_linear_bvp(
    mesh: &Mesh,
    coeffs: &[[f64; 3]],
    bc: &[Option<BoundaryConditionRow>],
    source: &[f64],
) -> Result<Vec<f64>> {
    let sys = assemble_linear_system(mesh, coeffs, bc, source)?;
    LinearSolver::new().solve(&sys, None)
}

/// Viscosity schedule and Picard controls.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub deltas: Vec<f64>,
    pub try_delta_zero: bool,
    pub tol_picard: f64,
    pub max_picard: usize,
    pub damping_after: usize,
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            deltas: default_delta_schedule(),
            try_delta_zero: true,
            tol_picard: 1e-9,
            max_picard: 60,
            damping_after: 20,
            damping: 0.5,
        }
    }
}

/// `0.1 * 2^-k` for `k = 0..=10`.
pub fn default_delta_schedule() -> Vec<f64> {
    (0..=10).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub deltas: Vec<f64>,
    pub picard_iterations: Vec<usize>,
    /// successive-iterate sup norms, all deltas concatenated
    pub picard_history: Vec<f64>,
    pub linear_residual: f64,
    pub linear_iterations: usize,
    pub factorizations: usize,
    pub min_ellipticity: f64,
    pub final_delta: f64,
    pub delta_zero_converged: bool,
    pub delta_zero_failure: Option<String>,
    pub cutoff_nodes: usize,
    pub min_psi: f64,
    pub max_psi: f64,
}

impl SolveReport {
    pub fn total_picard(&self) -> usize {
        self.picard_iterations.iter().sum()
    }
}

/// Lower-barrier tolerance for a mesh of size `h`.
pub fn barrier_tolerance(h: f64) -> f64 {
    (10.0 * h * h).max(1e-8)
}

fn min_eig(a: [f64; 3]) -> f64 {
    0.5 * (a[0] + a[2]) - (0.25 * (a[0] - a[2]).powi(2) + a[1] * a[1]).sqrt()
}

/// Boundary rows at the current iterate: fixed rows plus the linearised
/// shock condition.
pub fn boundary_rows(domain: &ReflectionDomain, psi: &[f64]) -> Result<Vec<Option<BoundaryConditionRow>>> {
    let mut rows = fixed_bc_rows(domain);
    let st = &domain.state;
    for k in domain.shock_nodes() {
        if domain.tag(k) != BoundaryTag::Shock {
            continue;
        }
        let g = domain.mesh.gradient(psi, k);
        let eta = domain.mesh.pts[k][1];
        rows[k] = Some(rh_condition_row(st, psi[k], g, eta, shock_normal(domain, k))?);
    }
    Ok(rows)
}

struct DeltaOutcome {
    psi: Vec<f64>,
    iterations: usize,
}

fn picard(
    domain: &ReflectionDomain,
    phi: &[f64],
    start: &[f64],
    delta: f64,
    cfg: &SolverConfig,
    lin: &mut LinearSolver,
    report: &mut SolveReport,
) -> Result<DeltaOutcome> {
    let n = domain.n_nodes();
    let zero = vec![0.0; n];
    let mut psi = start.to_vec();
    lin.invalidate();
    for it in 1..=cfg.max_picard {
        let coeffs: CoefficientSet = assemble_coefficients(domain, &psi, phi, delta)?;
        let rows = boundary_rows(domain, &psi)?;
        let a: Vec<[f64; 3]> = coeffs.entries.iter().map(|e| e.a).collect();
        for k in 0..n {
            if domain.mesh.is_interior(k) {
                report.min_ellipticity = report.min_ellipticity.min(min_eig(a[k]));
            }
        }
        report.cutoff_nodes = coeffs.cutoff_count();
        let sys = assemble_linear_system(&domain.mesh, &a, &rows, &zero)?;
        let new = lin.solve(&sys, Some(&psi))?;
        report.linear_residual = lin.last_residual;
        let mut upd = 0.0f64;
        let relax = if it > cfg.damping_after { cfg.damping } else { 1.0 };
        for (p, q) in psi.iter_mut().zip(&new) {
            let d = q - *p;
            upd = upd.max(d.abs());
            *p += relax * d;
        }
        if !upd.is_finite() {
            return Err(Error::PicardDiverged { delta, last_update: upd, iterations: it });
        }
        report.picard_history.push(upd);
        if upd <= cfg.tol_picard {
            return Ok(DeltaOutcome { psi, iterations: it });
        }
    }
    let last = *report.picard_history.last().unwrap_or(&f64::NAN);
    Err(Error::PicardDiverged { delta, last_update: last, iterations: cfg.max_picard })
}

/// Solves the cut-off, viscosity-regularised problem for the frozen
/// iterate `phi`, continuing down the viscosity schedule.
pub fn solve_nonlinear_bvp(
    domain: &ReflectionDomain,
    phi: &[f64],
    start: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = domain.n_nodes();
    let mut psi = start.map(|s| s.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut report = SolveReport { min_ellipticity: f64::INFINITY, ..Default::default() };
    let mut lin = LinearSolver::new();
    for &delta in &cfg.deltas {
        let out = picard(domain, phi, &psi, delta, cfg, &mut lin, &mut report)?;
        psi = out.psi;
        report.deltas.push(delta);
        report.picard_iterations.push(out.iterations);
        report.final_delta = delta;
    }
    if cfg.try_delta_zero {
        match picard(domain, phi, &psi, 0.0, cfg, &mut lin, &mut report) {
            Ok(out) => {
                psi = out.psi;
                report.deltas.push(0.0);
                report.picard_iterations.push(out.iterations);
                report.final_delta = 0.0;
                report.delta_zero_converged = true;
            }
            Err(e) if e.is_nonconvergence() || matches!(e, Error::ObliquenessLost { .. }) => {
                report.delta_zero_failure = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    report.linear_iterations = lin.iterations;
    report.factorizations = lin.factorizations;
    report.min_psi = psi.iter().cloned().fold(f64::INFINITY, f64::min);
    report.max_psi = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = barrier_tolerance(domain.h());
    if report.min_psi < -tol {
        return Err(Error::BarrierViolated { min_psi: report.min_psi, tol });
    }
    Ok((psi, report))
}
