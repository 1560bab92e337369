//! Cutoff functions, the coefficient families of the iteration equation and
//! the boundary-condition rows.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, ReflectionDomain};
use crate::states::StateTwo;

fn band(gamma: f64) -> (f64, f64, f64) {
    let g1 = gamma + 1.0;
    (4.0 / (3.0 * g1), 2.0 / g1, 5.0 / (3.0 * g1))
}

/// Elliptic cutoff: identity near 0, saturating at `5/(3(gamma+1))`.
pub fn zeta1(s: f64, gamma: f64) -> f64 {
    let (a, b, m) = band(gamma);
    let t = s.abs();
    let v = if t <= a {
        t
    } else if t >= b {
        m
    } else {
        // g(u) = u - u^3 + u^4/2 on the normalised band: g'(0)=1, g(1)=1/2, g'(1)=0
        let l = b - a;
        let u = (t - a) / l;
        a + l * (u - u * u * u + 0.5 * u.powi(4))
    };
    v.copysign(s)
}

pub fn zeta1_prime(s: f64, gamma: f64) -> f64 {
    let (a, b, _) = band(gamma);
    let t = s.abs();
    if t <= a {
        1.0
    } else if t >= b {
        0.0
    } else {
        let u = (t - a) / (b - a);
        (1.0 - u) * (1.0 - u) * (1.0 + 2.0 * u)
    }
}

/// Smooth step from 0 at `x <= 2 eps` to 1 at `x >= 4 eps`.
pub fn zeta2(x: f64, eps: f64) -> f64 {
    if x <= 2.0 * eps {
        0.0
    } else if x >= 4.0 * eps {
        1.0
    } else {
        let t = (x - 2.0 * eps) / (2.0 * eps);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Local sound speed squared in terms of the perturbation `phi` of state (2).
pub fn sound_speed_sq(st: &StateTwo, phi: f64, grad: [f64; 2], point: [f64; 2]) -> Result<f64> {
    let g1 = st.gas.gamma - 1.0;
    let [xi, eta] = point;
    let c2 = st.c2 * st.c2 + g1 * (xi * grad[0] + eta * grad[1] - 0.5 * (grad[0] * grad[0] + grad[1] * grad[1]) - phi);
    if c2 < 0.0 {
        return Err(Error::VacuumState { radicand: c2 / g1 });
    }
    Ok(c2)
}

/// `[A11, A12, A22]` of the uniformly elliptic family.
pub fn coeffs_uniform(st: &StateTwo, phi: f64, grad: [f64; 2], point: [f64; 2]) -> Result<[f64; 3]> {
    let c2 = sound_speed_sq(st, phi, grad, point)?;
    let a = grad[0] - point[0];
    let b = grad[1] - point[1];
    Ok([c2 - a * a, -a * b, c2 - b * b])
}

/// `[A11, A12, A22]` of the sonic family, and whether the cutoff is engaged.
/// Only the radial trial derivative enters nonlinearly through `zeta1`.
pub fn coeffs_sonic(
    st: &StateTwo,
    trial_grad: [f64; 2],
    phi: f64,
    grad: [f64; 2],
    point: [f64; 2],
) -> Result<([f64; 3], bool)> {
    let [xi, eta] = point;
    let r = xi.hypot(eta);
    if r == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let gamma = st.gas.gamma;
    let x = st.c2 - r;
    let q = xi * trial_grad[0] + eta * trial_grad[1];
    let (zx, active) = if x > 0.0 {
        let s = q / (r * x);
        (x * zeta1(s, gamma), s.abs() > band(gamma).0)
    } else {
        (0.0, q != 0.0)
    };
    let [p1, p2] = grad;
    let w = xi * p2 - eta * p1;
    let common = st.c2 * st.c2 + (gamma - 1.0) * (r * zx - 0.5 * (p1 * p1 + p2 * p2) - phi);
    let r2 = r * r;
    let a11 = common - xi * xi - p1 * p1 + 2.0 * xi * (xi / r * zx - eta / r2 * w);
    let a22 = common - eta * eta - p2 * p2 + 2.0 * eta * (eta / r * zx + xi / r2 * w);
    let a12 = -xi * eta - p1 * p2 + 2.0 * xi * eta / r * zx + (xi * xi - eta * eta) / r2 * w;
    Ok(([a11, a12, a22], active))
}

/// Per-node coefficient entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEntry {
    pub a: [f64; 3],
    pub cutoff_active: bool,
}

/// `zeta2 A1 + (1 - zeta2) A2 + delta I`.
pub fn coeffs_combined(
    st: &StateTwo,
    trial_grad: [f64; 2],
    phi: f64,
    grad: [f64; 2],
    point: [f64; 2],
    epsilon: f64,
    delta: f64,
) -> Result<CoefficientEntry> {
    let x = st.c2 - point[0].hypot(point[1]);
    let z = zeta2(x, epsilon);
    let mut a = [0.0; 3];
    let mut active = false;
    if z > 0.0 {
        let a1 = coeffs_uniform(st, phi, grad, point)?;
        for c in 0..3 {
            a[c] += z * a1[c];
        }
    }
    if z < 1.0 {
        let (a2, act) = coeffs_sonic(st, trial_grad, phi, grad, point)?;
        active = act;
        for c in 0..3 {
            a[c] += (1.0 - z) * a2[c];
        }
    }
    a[0] += delta;
    a[2] += delta;
    Ok(CoefficientEntry { a, cutoff_active: active })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub entries: Vec<CoefficientEntry>,
    pub delta: f64,
}

impl CoefficientSet {
    pub fn cutoff_count(&self) -> usize {
        self.entries.iter().filter(|e| e.cutoff_active).count()
    }
}

/// Coefficients at every node from the trial field and the frozen iterate.
pub fn assemble_coefficients(
    domain: &ReflectionDomain,
    trial: &[f64],
    phi: &[f64],
    delta: f64,
) -> Result<CoefficientSet> {
    let st = &domain.state;
    let mesh = &domain.mesh;
    let mut entries = Vec::with_capacity(mesh.n_nodes());
    for k in 0..mesh.n_nodes() {
        let p = mesh.pts[k];
        let tg = mesh.gradient(trial, k);
        let pg = if std::ptr::eq(trial, phi) { tg } else { mesh.gradient(phi, k) };
        let e = if p[0] == 0.0 && p[1] == 0.0 {
            // the origin lies on the wedge, far from the sonic arc
            let a1 = coeffs_uniform(st, phi[k], pg, p)?;
            CoefficientEntry { a: [a1[0] + delta, a1[1], a1[2] + delta], cutoff_active: false }
        } else {
            coeffs_combined(st, tg, phi[k], pg, p, domain.epsilon, delta)?
        };
        // the cutoff only matters where the equation is imposed
        entries.push(CoefficientEntry { cutoff_active: e.cutoff_active && mesh.is_interior(k), ..e });
    }
    Ok(CoefficientSet { entries, delta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Oblique,
    Neumann,
}

/// `b1 psi_xi + b2 psi_eta + b3 psi = rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditionRow {
    pub kind: BcKind,
    pub b: [f64; 3],
    pub rhs: f64,
    /// unit normal pointing into the domain
    pub normal: [f64; 2],
}

impl BoundaryConditionRow {
    pub fn obliqueness(&self) -> f64 {
        self.b[0] * self.normal[0] + self.b[1] * self.normal[1]
    }

    pub fn dirichlet(value: f64) -> Self {
        BoundaryConditionRow { kind: BcKind::Dirichlet, b: [0.0, 0.0, 1.0], rhs: value, normal: [0.0, 0.0] }
    }
}

/// Lower bound on the obliqueness of the shock row.
pub fn obliqueness_floor(st: &StateTwo) -> f64 {
    0.25 * st.rho2_prime() * (st.c2 * st.c2 - st.xihat * st.xihat)
}

/// Rankine-Hugoniot condition on the shock `xi = (psi + v2 eta)/(u1 - u2) + xihat`
/// as a function `Psi(p, z)` of `p = D psi` and `z = psi`, with its gradient.
pub fn rh_function(st: &StateTwo, z: f64, p: [f64; 2], eta: f64) -> Result<(f64, [f64; 3])> {
    let g1 = st.gas.gamma - 1.0;
    let rho1 = st.gas.rho1;
    let du = st.du();
    let k = 1.0 / du;
    let xs = (z + st.v2 * eta) * k + st.xihat;
    let bern = st.gas.enthalpy(st.rho2) + xs * p[0] + eta * p[1] - 0.5 * (p[0] * p[0] + p[1] * p[1]) - z;
    if !(bern > 0.0) {
        return Err(Error::VacuumState { radicand: bern });
    }
    let rho = bern.powf(1.0 / g1);
    let drho = rho / (g1 * bern);
    let vel = [p[0] - xs, p[1] - eta];
    let v = [rho * vel[0] - rho1 * (du - xs), rho * vel[1] - rho1 * (-st.v2 - eta)];
    let n = [du - p[0], -st.v2 - p[1]];
    let nn = n[0].hypot(n[1]);
    let nu = [n[0] / nn, n[1] / nn];
    let f = v[0] * nu[0] + v[1] * nu[1];
    let mut grad = [0.0; 3];
    let xsv = [xs, eta];
    for i in 0..2 {
        let mut dv = [drho * (xsv[i] - p[i]) * vel[0], drho * (xsv[i] - p[i]) * vel[1]];
        dv[i] += rho;
        let mut dnu = [nu[0] * nu[i] / nn, nu[1] * nu[i] / nn];
        dnu[i] -= 1.0 / nn;
        grad[i] = dv[0] * nu[0] + dv[1] * nu[1] + v[0] * dnu[0] + v[1] * dnu[1];
    }
    let dvz = [drho * (p[0] * k - 1.0) * vel[0] + (rho1 - rho) * k, drho * (p[0] * k - 1.0) * vel[1]];
    grad[2] = dvz[0] * nu[0] + dvz[1] * nu[1];
    Ok((f, grad))
}

/// Newton linearisation of the shock condition about `(psi, D psi)`.
/// `normal` is the interior unit normal of the current shock boundary.
pub fn rh_condition_row(
    st: &StateTwo,
    psi: f64,
    grad: [f64; 2],
    eta: f64,
    normal: [f64; 2],
) -> Result<BoundaryConditionRow> {
    let (f, b) = rh_function(st, psi, grad, eta)?;
    let rhs = b[0] * grad[0] + b[1] * grad[1] + b[2] * psi - f;
    let row = BoundaryConditionRow { kind: BcKind::Oblique, b, rhs, normal };
    let floor = obliqueness_floor(st);
    let value = row.obliqueness();
    if !(value > floor) {
        return Err(Error::ObliquenessLost { eta, value, floor });
    }
    Ok(row)
}

/// Rows for the sonic arc, wedge and symmetry line; `None` on shock nodes.
pub fn fixed_bc_rows(domain: &ReflectionDomain) -> Vec<Option<BoundaryConditionRow>> {
    let st = &domain.state;
    let wedge = st.wedge_normal();
    domain
        .mesh
        .tags
        .iter()
        .map(|t| match t {
            BoundaryTag::Sonic | BoundaryTag::P1 | BoundaryTag::P4 => Some(BoundaryConditionRow::dirichlet(0.0)),
            BoundaryTag::Wedge => {
                Some(BoundaryConditionRow { kind: BcKind::Neumann, b: [wedge[0], wedge[1], 0.0], rhs: 0.0, normal: wedge })
            }
            BoundaryTag::Symmetry | BoundaryTag::P2 | BoundaryTag::P3 => Some(BoundaryConditionRow {
                kind: BcKind::Neumann,
                b: [0.0, 1.0, 0.0],
                rhs: -st.v2,
                normal: [0.0, 1.0],
            }),
            BoundaryTag::Shock | BoundaryTag::Interior => None,
        })
        .collect()
}

/// Interior unit normal of the shock at a shock node, from the mesh.
pub fn shock_normal(domain: &ReflectionDomain, k: usize) -> [f64; 2] {
    // t increases toward the shock, so -grad t points inward
    let m = domain.mesh.inv[k];
    let g = [-m[1][0], -m[1][1]];
    let n = g[0].hypot(g[1]);
    [g[0] / n, g[1] / n]
}
