//! Normal reflection and the state behind the straight reflected shock.
//!
//! Angles near `pi/2` are carried through their complements so that the
//! normal-reflection case `theta_w = pi/2` reproduces exact zeros.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::gas::GasSetup;

pub const DEFAULT_SIGMA_MAX: f64 = 0.15;
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 40;
pub const NEWTON_MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalReflection {
    pub rho2bar: f64,
    pub xibar: f64,
    pub c2bar: f64,
}

/// Constant state (2) and the reflection geometry in shifted coordinates,
/// whose origin sits at the velocity `(u2, v2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTwo {
    pub gas: GasSetup,
    pub normal: NormalReflection,
    pub theta_w: f64,
    /// `pi/2 - theta_w`
    pub sigma: f64,
    pub rho2: f64,
    pub theta_s: f64,
    pub xitilde: f64,
    pub u2: f64,
    pub v2: f64,
    pub c2: f64,
    pub xihat: f64,
    /// Reflection point on the wedge (at infinity for `sigma = 0`).
    pub p0: [f64; 2],
    /// Intersection of the straight reflected shock with the sonic circle.
    pub p1: [f64; 2],
    /// Shock foot on the symmetry line `eta = -v2`.
    pub p2: [f64; 2],
    /// Wedge vertex.
    pub p3: [f64; 2],
    /// Sonic circle on the wedge.
    pub p4: [f64; 2],
    /// Angular sonic coordinate of `p1`.
    pub y1: f64,
}

/// `F(s) = s^(g-1) - rho1^(g-1) - u1^2/2 - rho1 u1^2/(s - rho1)`.
pub fn normal_reflection_residual(gas: &GasSetup, s: f64) -> f64 {
    let GasSetup { rho1, u1, .. } = *gas;
    gas.enthalpy(s) - gas.enthalpy(rho1) - 0.5 * u1 * u1 - rho1 * u1 * u1 / (s - rho1)
}

/// Mean-value slope `(rho2bar^(g-1) - rho1^(g-1)) / (rho2bar - rho1)`.
pub fn mean_value_beta(gas: &GasSetup, rho2bar: f64) -> f64 {
    (gas.enthalpy(rho2bar) - gas.enthalpy(gas.rho1)) / (rho2bar - gas.rho1)
}

/// Density behind the normal reflection written through a slope `beta`.
pub fn rho2bar_from_beta(gas: &GasSetup, beta: f64) -> f64 {
    let GasSetup { rho1, u1, .. } = *gas;
    rho1 + u1 * (u1 + (u1 * u1 + 16.0 * beta * rho1).sqrt()) / (4.0 * beta)
}

pub fn normal_reflection(gas: &GasSetup) -> Result<NormalReflection> {
    let GasSetup { rho1, u1, .. } = *gas;
    let h1 = gas.enthalpy(rho1);
    // F multiplied through by (s - rho1): no pole, negative at rho1.
    let g = |s: f64| (s - rho1) * (gas.enthalpy(s) - h1 - 0.5 * u1 * u1) - rho1 * u1 * u1;
    let dg = |s: f64| {
        (gas.enthalpy(s) - h1 - 0.5 * u1 * u1)
            + (s - rho1) * (gas.gamma - 1.0) * s.powf(gas.gamma - 2.0)
    };
    let mut lo = rho1;
    let mut hi = 2.0 * rho1;
    let mut expand = 0;
    while g(hi) <= 0.0 {
        lo = hi;
        hi = rho1 + 2.0 * (hi - rho1);
        expand += 1;
        if expand > 200 || !hi.is_finite() {
            return Err(Error::RootNotBracketed(format!(
                "normal reflection: no sign change up to s={hi:e}"
            )));
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let gs = g(s);
        if gs == 0.0 {
            break;
        }
        if gs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = dg(s);
        let mut next = s - gs / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - s).abs() <= 4.0 * f64::EPSILON * s;
        s = next;
        if done || hi - lo <= 4.0 * f64::EPSILON * s {
            break;
        }
    }
    let rel = normal_reflection_residual(gas, s).abs() / gas.enthalpy(s);
    if !(rel <= 1e-12) {
        return Err(Error::RootNotBracketed(format!(
            "normal reflection residual {rel:e} after bracketing"
        )));
    }
    let xibar = -rho1 * u1 / (s - rho1);
    let c2bar = gas.sound_speed_sq(s).sqrt();
    if !(xibar.abs() < c2bar) {
        return Err(Error::InvariantViolated(format!(
            "normal reflection is not subsonic: |xibar|={} >= c2bar={}",
            xibar.abs(),
            c2bar
        )));
    }
    Ok(NormalReflection { rho2bar: s, xibar, c2bar })
}

// Trigonometry through complements: sigma = pi/2 - theta_w, tau = pi/2 - theta_s.
struct Angles {
    cw: f64,
    sw: f64,
    cs: f64,
    ss: f64,
    cot_s: f64,
    /// cos(theta_w - theta_s)
    cd: f64,
    /// sin(theta_w - theta_s)
    sd: f64,
}

impl Angles {
    fn new(theta_w: f64, theta_s: f64) -> Self {
        let sigma = FRAC_PI_2 - theta_w;
        let tau = FRAC_PI_2 - theta_s;
        Angles {
            cw: sigma.sin(),
            sw: sigma.cos(),
            cs: tau.sin(),
            ss: tau.cos(),
            cot_s: tau.tan(),
            cd: (tau - sigma).cos(),
            sd: (tau - sigma).sin(),
        }
    }
}

/// Residual of the three von Neumann equations at `trial = (rho2, theta_s, xitilde)`.
pub fn vn_residual(gas: &GasSetup, theta_w: f64, trial: [f64; 3]) -> [f64; 3] {
    let [rho2, theta_s, xt] = trial;
    let GasSetup { rho0, rho1, u1, xi0, .. } = *gas;
    let a = Angles::new(theta_w, theta_s);
    // tan(theta_s - theta_w) = -sd/cd
    let tan_sw = -a.sd / a.cd;
    let r1 = (xt - xi0) * a.cw + xi0 * a.sw * a.cot_s;
    let r2 = gas.enthalpy(rho2) + u1 * u1 * a.cs * a.cs / (2.0 * a.cd * a.cd)
        + u1 * a.sw * a.ss * xt / a.cd
        - u1 * xi0
        - gas.enthalpy(rho0);
    let r3 = (u1 * a.cs * tan_sw - xt * a.ss) * rho2 - rho1 * (u1 - xt) * a.ss;
    [r1, r2, r3]
}

/// Analytic Jacobian of [`vn_residual`] with respect to `(rho2, theta_s, xitilde)`.
pub fn vn_jacobian(gas: &GasSetup, theta_w: f64, trial: [f64; 3]) -> [[f64; 3]; 3] {
    let [rho2, theta_s, xt] = trial;
    let GasSetup { rho1, u1, xi0, gamma, .. } = *gas;
    let a = Angles::new(theta_w, theta_s);
    let tan_sw = -a.sd / a.cd;
    let sec2_sw = 1.0 / (a.cd * a.cd);

    let j1 = [0.0, -xi0 * a.sw / (a.ss * a.ss), a.cw];

    let dt1 = -u1 * u1 * (a.cs * a.ss / (a.cd * a.cd) + a.cs * a.cs * a.sd / (a.cd * a.cd * a.cd));
    let dt2 = u1 * a.sw * xt * (a.cs / a.cd - a.ss * a.sd / (a.cd * a.cd));
    let j2 = [
        (gamma - 1.0) * rho2.powf(gamma - 2.0),
        dt1 + dt2,
        u1 * a.sw * a.ss / a.cd,
    ];

    let j3 = [
        u1 * a.cs * tan_sw - xt * a.ss,
        rho2 * (u1 * (-a.ss * tan_sw + a.cs * sec2_sw) - xt * a.cs) - rho1 * (u1 - xt) * a.cs,
        (rho1 - rho2) * a.ss,
    ];
    [j1, j2, j3]
}

pub fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let d = det3(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *xk = det3(&mk) / d;
    }
    Some(x)
}

fn inf_norm(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton on the von Neumann system from `seed`.
fn vn_newton(gas: &GasSetup, theta_w: f64, seed: [f64; 3]) -> Result<[f64; 3]> {
    let mut x = seed;
    let mut r = vn_residual(gas, theta_w, x);
    let mut rn = inf_norm(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if rn <= NEWTON_TOL {
            return Ok(x);
        }
        let j = vn_jacobian(gas, theta_w, x);
        let dx = solve3(j, [-r[0], -r[1], -r[2]])
            .ok_or_else(|| Error::NewtonDiverged("singular von Neumann Jacobian".into()))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let xn = [x[0] + lambda * dx[0], x[1] + lambda * dx[1], x[2] + lambda * dx[2]];
            let rnew = vn_residual(gas, theta_w, xn);
            let nn = inf_norm(&rnew);
            if nn.is_finite() && nn < rn && xn[0] > 0.0 {
                x = xn;
                r = rnew;
                rn = nn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDiverged(format!(
                "no residual decrease after {NEWTON_MAX_HALVINGS} halvings (residual {rn:e})"
            )));
        }
    }
    if rn <= NEWTON_TOL {
        Ok(x)
    } else {
        Err(Error::NewtonDiverged(format!(
            "residual {rn:e} after {NEWTON_MAX_ITER} iterations"
        )))
    }
}

pub fn state2_solve(gas: &GasSetup, theta_w: f64) -> Result<StateTwo> {
    state2_solve_with(gas, theta_w, DEFAULT_SIGMA_MAX)
}

pub fn state2_solve_with(gas: &GasSetup, theta_w: f64, sigma_max: f64) -> Result<StateTwo> {
    let sigma = FRAC_PI_2 - theta_w;
    if !(sigma >= 0.0) {
        return Err(Error::NewtonDiverged(format!(
            "theta_w={theta_w} exceeds pi/2; no reflection configuration"
        )));
    }
    if sigma >= sigma_max {
        return Err(Error::NewtonDiverged(format!(
            "sigma={sigma} is outside the supported range [0, {sigma_max}); \
             the Newton seed at normal reflection is not trusted there"
        )));
    }
    let nr = normal_reflection(gas)?;
    let seed = [nr.rho2bar, FRAC_PI_2, nr.xibar];
    let sol = match vn_newton(gas, theta_w, seed) {
        Ok(x) => x,
        Err(first) => {
            // Walk sigma up from zero, reseeding from each converged state.
            let steps = (sigma / 0.01).ceil().max(2.0) as usize;
            let mut x = seed;
            for k in 1..=steps {
                let tw = FRAC_PI_2 - sigma * k as f64 / steps as f64;
                x = vn_newton(gas, tw, x).map_err(|_| first.clone())?;
            }
            x
        }
    };
    derive_state(gas, nr, theta_w, sol)
}

fn derive_state(
    gas: &GasSetup,
    normal: NormalReflection,
    theta_w: f64,
    sol: [f64; 3],
) -> Result<StateTwo> {
    let [rho2, theta_s, xitilde] = sol;
    let sigma = FRAC_PI_2 - theta_w;
    let a = Angles::new(theta_w, theta_s);
    let u1 = gas.u1;
    let u2 = u1 * a.cw * a.cs / a.cd;
    let v2 = u1 * a.sw * a.cs / a.cd;
    let c2 = gas.sound_speed_sq(rho2).sqrt();
    let xihat = xitilde - u2 + v2 * a.cot_s;
    let l = |eta: f64| eta * a.cot_s + xihat;

    // P1: l(eta)^2 + eta^2 = c2^2 with eta > 0.
    let mut eta1 = (c2 * c2 - xihat * xihat).max(0.0).sqrt();
    for _ in 0..50 {
        let g = l(eta1).powi(2) + eta1 * eta1 - c2 * c2;
        let dg = 2.0 * l(eta1) * a.cot_s + 2.0 * eta1;
        let step = g / dg;
        eta1 -= step;
        if step.abs() <= 1e-15 * c2 {
            break;
        }
    }
    let xi1 = l(eta1);
    let y1 = eta1.atan2(xi1) - theta_w;
    let tan_w = a.sw / a.cw;
    let p0 = [gas.xi0 - u2, gas.xi0 * tan_w - v2];
    let st = StateTwo {
        gas: *gas,
        normal,
        theta_w,
        sigma,
        rho2,
        theta_s,
        xitilde,
        u2,
        v2,
        c2,
        xihat,
        p0,
        p1: [xi1, eta1],
        p2: [l(-v2), -v2],
        p3: [-u2, -v2],
        p4: [c2 * a.cw, c2 * a.sw],
        y1,
    };
    st.check_invariants()?;
    Ok(st)
}

impl StateTwo {
    /// `cot(theta_s)`, exactly zero at normal reflection.
    pub fn cot_s(&self) -> f64 {
        (FRAC_PI_2 - self.theta_s).tan()
    }

    /// Straight reflected shock `xi = l(eta)`.
    pub fn l(&self, eta: f64) -> f64 {
        eta * self.cot_s() + self.xihat
    }

    /// `rho2 / c2^2`, the density derivative with respect to the enthalpy.
    pub fn rho2_prime(&self) -> f64 {
        self.rho2 / (self.c2 * self.c2)
    }

    pub fn du(&self) -> f64 {
        self.gas.u1 - self.u2
    }

    pub fn eta1(&self) -> f64 {
        self.p1[1]
    }

    /// Interior unit normal of the wedge boundary.
    pub fn wedge_normal(&self) -> [f64; 2] {
        [-self.theta_w.sin(), self.theta_w.cos()]
    }

    pub fn residual(&self) -> [f64; 3] {
        vn_residual(&self.gas, self.theta_w, [self.rho2, self.theta_s, self.xitilde])
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvariantViolated(m));
        let res = inf_norm(&self.residual());
        if !(res <= NEWTON_TOL) {
            return fail(format!("von Neumann residual {res:e}"));
        }
        let tw = self.theta_w;
        let ts = self.theta_s;
        let [xi1, eta1] = self.p1;
        let strict = self.sigma > 0.0;
        let ordered = |a: f64, b: f64| if strict { a < b } else { a <= b };
        if !(ts > FRAC_PI_4 && ordered(ts, tw) && tw <= FRAC_PI_2) {
            return fail(format!("angle ordering pi/4 < theta_s={ts} < theta_w={tw} <= pi/2"));
        }
        if !(-self.c2 < self.xitilde
            && ordered(self.xitilde, self.xihat)
            && (ordered(self.xihat, xi1) || (xi1 - self.xihat).abs() <= 1e-14)
            && xi1 < 0.0)
        {
            return fail(format!(
                "ordering -c2 < xitilde < xihat < xi1 < 0 broken: c2={}, xitilde={}, xihat={}, xi1={}",
                self.c2, self.xitilde, self.xihat, xi1
            ));
        }
        if !(eta1 > 0.0) || !(self.du() > 0.0) || !(self.v2 >= 0.0) {
            return fail(format!("eta1={eta1}, u1-u2={}, v2={}", self.du(), self.v2));
        }
        Ok(())
    }
}

/// Pseudo-potentials of states (0), (1), (2) and their gradients at a point
/// in shifted coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backgrounds {
    pub phi: [f64; 3],
    pub grad: [[f64; 2]; 3],
}

pub fn background_potentials(st: &StateTwo, point: [f64; 2]) -> Backgrounds {
    let [xi, eta] = point;
    let (u1, u2, v2, xi0) = (st.gas.u1, st.u2, st.v2, st.gas.xi0);
    let r2 = xi * xi + eta * eta;
    let q2 = u2 * u2 + v2 * v2;
    let phi0 = -0.5 * r2 - (u2 * xi + v2 * eta) - 0.5 * q2;
    let phi1 = -0.5 * r2 + (u1 - u2) * xi - v2 * eta - 0.5 * q2 + u1 * (u2 - xi0);
    let phi2 = -0.5 * r2 - 0.5 * q2 + (u1 - u2) * st.xihat + u1 * (u2 - xi0);
    Backgrounds {
        phi: [phi0, phi1, phi2],
        grad: [[-xi - u2, -eta - v2], [-xi + u1 - u2, -eta - v2], [-xi, -eta]],
    }
}
