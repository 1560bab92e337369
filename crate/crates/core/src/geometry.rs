//! Sonic-frame coordinates, the boundary-fitted mesh of the iteration
//! domain, point location and interpolation.

use crate::curve::{uniform, FreeBoundaryCurve};
use crate::error::{Error, Result};
use crate::states::StateTwo;

/// Polar frame centred at the origin, with `x` measured inward from the
/// sonic circle and `y` measured from the wedge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SonicFrame {
    pub c2: f64,
    pub theta_w: f64,
}

impl SonicFrame {
    pub fn new(st: &StateTwo) -> Self {
        SonicFrame { c2: st.c2, theta_w: st.theta_w }
    }

    pub fn to_sonic(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            return Err(Error::OriginSingularity);
        }
        Ok([self.c2 - r, p[1].atan2(p[0]) - self.theta_w])
    }

    pub fn from_sonic(&self, q: [f64; 2]) -> [f64; 2] {
        let r = self.c2 - q[0];
        let th = q[1] + self.theta_w;
        [r * th.cos(), r * th.sin()]
    }
}

pub fn to_sonic_frame(st: &StateTwo, p: [f64; 2]) -> Result<[f64; 2]> {
    SonicFrame::new(st).to_sonic(p)
}

pub fn from_sonic_frame(st: &StateTwo, q: [f64; 2]) -> [f64; 2] {
    SonicFrame::new(st).from_sonic(q)
}

/// Straight reflected shock `l(eta)`.
pub fn reference_shock(st: &StateTwo, eta: f64) -> f64 {
    st.l(eta)
}

/// The straight shock as `y = f0(x)` in the sonic frame.
pub fn reference_shock_sonic(st: &StateTwo, x: f64) -> Result<f64> {
    let (ss, _) = st.theta_s.sin_cos();
    let a = st.xihat.abs() * ss;
    let arg = a / (st.c2 - x);
    if !(arg.abs() <= 1.0) || st.c2 - x <= 0.0 {
        return Err(Error::ArcsineDomain { x, arg });
    }
    Ok(arg.asin() - st.theta_w + st.theta_s)
}

/// Default strip width `0.1 (c2bar - |xibar|)`.
pub fn default_epsilon(st: &StateTwo) -> f64 {
    0.1 * (st.normal.c2bar - st.normal.xibar.abs())
}

/// The straight shock sampled at `n` uniform points on `[-v2, eta1]`.
pub fn reference_curve(st: &StateTwo, n: usize) -> Result<FreeBoundaryCurve> {
    let (lo, hi) = (-st.v2, st.eta1());
    let mut c = FreeBoundaryCurve::from_fn(lo, hi, n, st.cot_s(), |e| st.l(e))?;
    // pin the end at P1 bit-exactly
    let mut xi = c.xi().to_vec();
    xi[n - 1] = st.p1[0];
    c = FreeBoundaryCurve::new(c.eta().to_vec(), xi, st.cot_s())?;
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    Sonic,
    Shock,
    Wedge,
    Symmetry,
    P1,
    P2,
    P3,
    P4,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Interior => "interior",
            BoundaryTag::Sonic => "sonic",
            BoundaryTag::Shock => "shock",
            BoundaryTag::Wedge => "wedge",
            BoundaryTag::Symmetry => "symmetry",
            BoundaryTag::P1 => "P1",
            BoundaryTag::P2 => "P2",
            BoundaryTag::P3 => "P3",
            BoundaryTag::P4 => "P4",
        }
    }
}

/// Distance-to-sonic bands with thresholds `eps`, `2 eps`, `4 eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionTag {
    /// `x <= eps`, only in the inner strip
    SonicStrip,
    /// `eps < x < 2 eps`, in both strips
    Overlap,
    /// `2 eps <= x < 4 eps`, where the coefficient families blend
    Blend,
    /// `x >= 4 eps`
    Outer,
}

impl RegionTag {
    pub fn classify(x: f64, eps: f64) -> Self {
        if x <= eps {
            RegionTag::SonicStrip
        } else if x < 2.0 * eps {
            RegionTag::Overlap
        } else if x < 4.0 * eps {
            RegionTag::Blend
        } else {
            RegionTag::Outer
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionTag::SonicStrip => "sonic_strip",
            RegionTag::Overlap => "overlap",
            RegionTag::Blend => "blend",
            RegionTag::Outer => "outer",
        }
    }
}

/// Sparse linear functional on node values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Taps {
    pub len: usize,
    pub idx: [usize; 12],
    pub w: [f64; 12],
}

impl Default for Taps {
    fn default() -> Self {
        Taps { len: 0, idx: [0; 12], w: [0.0; 12] }
    }
}

impl Taps {
    pub fn push(&mut self, k: usize, w: f64) {
        if w == 0.0 {
            return;
        }
        for m in 0..self.len {
            if self.idx[m] == k {
                self.w[m] += w;
                return;
            }
        }
        assert!(self.len < 12, "stencil overflow");
        self.idx[self.len] = k;
        self.w[self.len] = w;
        self.len += 1;
    }

    pub fn add_scaled(&mut self, other: &Taps, s: f64) {
        if s == 0.0 {
            return;
        }
        for m in 0..other.len {
            self.push(other.idx[m], s * other.w[m]);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |m| (self.idx[m], self.w[m]))
    }

    pub fn apply(&self, f: &[f64]) -> f64 {
        self.iter().map(|(k, w)| w * f[k]).sum()
    }
}

// 3-point first-derivative weights along one index direction
fn diff1(i: usize, n: usize, h: f64) -> [(isize, f64); 3] {
    if i == 0 {
        [(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)]
    } else if i == n {
        [(0, 1.5 / h), (-1, -2.0 / h), (-2, 0.5 / h)]
    } else {
        [(-1, -0.5 / h), (0, 0.0), (1, 0.5 / h)]
    }
}

/// Structured quadrilateral mesh on the unit square `(s, t)`, node
/// `(i, j)` at index `j * (ni + 1) + i`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub ni: usize,
    pub nj: usize,
    pub pts: Vec<[f64; 2]>,
    pub tags: Vec<BoundaryTag>,
    /// rows are the physical gradients of `s` and `t`
    pub inv: Vec<[[f64; 2]; 2]>,
    /// `[X_ss, X_st, X_tt]` for each coordinate, interior nodes only
    pub d2x: Vec<[[f64; 3]; 2]>,
    pub cell_jac: Vec<f64>,
}

impl Mesh {
    /// Builds metrics from node positions; fails on folded or degenerate cells.
    pub fn new(ni: usize, nj: usize, pts: Vec<[f64; 2]>, tags: Vec<BoundaryTag>) -> Result<Self> {
        assert_eq!(pts.len(), (ni + 1) * (nj + 1));
        let mut m = Mesh { ni, nj, pts, tags, inv: Vec::new(), d2x: Vec::new(), cell_jac: Vec::new() };
        m.compute_metrics()?;
        Ok(m)
    }

    pub fn n_nodes(&self) -> usize {
        self.pts.len()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.ni + 1) + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % (self.ni + 1), k / (self.ni + 1))
    }

    pub fn hs(&self) -> f64 {
        1.0 / self.ni as f64
    }

    pub fn ht(&self) -> f64 {
        1.0 / self.nj as f64
    }

    pub fn is_interior(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        i > 0 && i < self.ni && j > 0 && j < self.nj
    }

    fn off(&self, i: usize, j: usize, di: isize, dj: isize) -> usize {
        self.idx((i as isize + di) as usize, (j as isize + dj) as usize)
    }

    /// Computational first-derivative taps `[d/ds, d/dt]`.
    pub fn comp_grad_taps(&self, k: usize) -> [Taps; 2] {
        let (i, j) = self.ij(k);
        let mut ts = Taps::default();
        for (d, w) in diff1(i, self.ni, self.hs()) {
            ts.push(self.off(i, j, d, 0), w);
        }
        let mut tt = Taps::default();
        for (d, w) in diff1(j, self.nj, self.ht()) {
            tt.push(self.off(i, j, 0, d), w);
        }
        [ts, tt]
    }

    /// Physical gradient taps `[d/dxi, d/deta]`.
    pub fn grad_taps(&self, k: usize) -> [Taps; 2] {
        let [ts, tt] = self.comp_grad_taps(k);
        let m = self.inv[k];
        let mut out = [Taps::default(), Taps::default()];
        for (c, o) in out.iter_mut().enumerate() {
            o.add_scaled(&ts, m[0][c]);
            o.add_scaled(&tt, m[1][c]);
        }
        out
    }

    /// Physical second-derivative taps `[xixi, xieta, etaeta]`, interior nodes.
    pub fn hess_taps(&self, k: usize) -> [Taps; 3] {
        let (i, j) = self.ij(k);
        debug_assert!(self.is_interior(k));
        let (hs, ht) = (self.hs(), self.ht());
        let mut tss = Taps::default();
        tss.push(self.off(i, j, -1, 0), 1.0 / (hs * hs));
        tss.push(k, -2.0 / (hs * hs));
        tss.push(self.off(i, j, 1, 0), 1.0 / (hs * hs));
        let mut ttt = Taps::default();
        ttt.push(self.off(i, j, 0, -1), 1.0 / (ht * ht));
        ttt.push(k, -2.0 / (ht * ht));
        ttt.push(self.off(i, j, 0, 1), 1.0 / (ht * ht));
        let mut tst = Taps::default();
        let q = 0.25 / (hs * ht);
        tst.push(self.off(i, j, 1, 1), q);
        tst.push(self.off(i, j, -1, -1), q);
        tst.push(self.off(i, j, 1, -1), -q);
        tst.push(self.off(i, j, -1, 1), -q);
        let [ts, tt] = self.comp_grad_taps(k);
        let comp2 = [&tss, &tst, &ttt];
        let comp1 = [&ts, &tt];

        let m = self.inv[k];
        let d2 = self.d2x[k];
        let pairs = [(0usize, 0usize), (0, 1), (1, 1)];
        let mut out = [Taps::default(), Taps::default(), Taps::default()];
        for (o, &(pi, pj)) in out.iter_mut().zip(&pairs) {
            // g^{bc} = M_{b pi} M_{c pj}, symmetrised over (s,t)
            let gss = m[0][pi] * m[0][pj];
            let gtt = m[1][pi] * m[1][pj];
            let gst = m[0][pi] * m[1][pj] + m[1][pi] * m[0][pj];
            o.add_scaled(comp2[0], gss);
            o.add_scaled(comp2[1], gst);
            o.add_scaled(comp2[2], gtt);
            for a in 0..2 {
                let mut h = 0.0;
                for c in 0..2 {
                    h -= m[a][c] * (d2[c][0] * gss + d2[c][1] * gst + d2[c][2] * gtt);
                }
                o.add_scaled(comp1[a], h);
            }
        }
        out
    }

    pub fn gradient(&self, f: &[f64], k: usize) -> [f64; 2] {
        let t = self.grad_taps(k);
        [t[0].apply(f), t[1].apply(f)]
    }

    pub fn hessian(&self, f: &[f64], k: usize) -> [f64; 3] {
        let t = self.hess_taps(k);
        [t[0].apply(f), t[1].apply(f), t[2].apply(f)]
    }

    fn compute_metrics(&mut self) -> Result<()> {
        let n = self.n_nodes();
        self.inv = vec![[[0.0; 2]; 2]; n];
        self.d2x = vec![[[0.0; 3]; 2]; n];
        let mut sign = 0.0f64;
        let mut scale = 0.0f64;
        for k in 0..n {
            let [ts, tt] = self.comp_grad_taps(k);
            let xs = [ts.apply_coord(&self.pts, 0), ts.apply_coord(&self.pts, 1)];
            let xt = [tt.apply_coord(&self.pts, 0), tt.apply_coord(&self.pts, 1)];
            let det = xs[0] * xt[1] - xs[1] * xt[0];
            scale = scale.max(xs[0].hypot(xs[1]) * xt[0].hypot(xt[1]));
            if sign == 0.0 {
                sign = det.signum();
            }
            if !(det * sign > 0.0) {
                let (i, j) = self.ij(k);
                return Err(Error::MeshFold(format!("node ({i},{j}) metric determinant {det:.3e}")));
            }
            self.inv[k] = [[xt[1] / det, -xt[0] / det], [-xs[1] / det, xs[0] / det]];
            if self.is_interior(k) {
                let (i, j) = self.ij(k);
                let p = |di: isize, dj: isize, c: usize| self.pts[self.off(i, j, di, dj)][c];
                let (hs, ht) = (self.hs(), self.ht());
                let mut d2 = [[0.0; 3]; 2];
                for (c, row) in d2.iter_mut().enumerate() {
                    *row = [
                        (p(1, 0, c) - 2.0 * p(0, 0, c) + p(-1, 0, c)) / (hs * hs),
                        (p(1, 1, c) - p(1, -1, c) - p(-1, 1, c) + p(-1, -1, c)) / (4.0 * hs * ht),
                        (p(0, 1, c) - 2.0 * p(0, 0, c) + p(0, -1, c)) / (ht * ht),
                    ];
                }
                self.d2x[k] = d2;
            }
        }
        self.cell_jac = Vec::with_capacity(self.ni * self.nj);
        let cell_floor = 1e-10 * scale * self.hs() * self.ht();
        for j in 0..self.nj {
            for i in 0..self.ni {
                let c = self.corners(i, j);
                // Jacobian of the bilinear cell map at its four corners
                let mut jmin = f64::INFINITY;
                for (a, b) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                    let d = bilinear_jac(&c, a, b);
                    jmin = jmin.min(sign * (d[0][0] * d[1][1] - d[0][1] * d[1][0]));
                }
                if !(jmin > cell_floor) {
                    return Err(Error::MeshFold(format!("cell ({i},{j}) Jacobian {jmin:.3e}")));
                }
                self.cell_jac.push(jmin);
            }
        }
        Ok(())
    }

    /// Corners `[P00, P10, P01, P11]` of cell `(i, j)`.
    pub fn corners(&self, i: usize, j: usize) -> [[f64; 2]; 4] {
        [
            self.pts[self.idx(i, j)],
            self.pts[self.idx(i + 1, j)],
            self.pts[self.idx(i, j + 1)],
            self.pts[self.idx(i + 1, j + 1)],
        ]
    }

    /// Maximum physical edge length.
    pub fn h(&self) -> f64 {
        let mut h = 0.0f64;
        for j in 0..=self.nj {
            for i in 0..=self.ni {
                let p = self.pts[self.idx(i, j)];
                if i < self.ni {
                    let q = self.pts[self.idx(i + 1, j)];
                    h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
                }
                if j < self.nj {
                    let q = self.pts[self.idx(i, j + 1)];
                    h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
                }
            }
        }
        h
    }

    /// Sum of the quadrilateral cell areas.
    pub fn area(&self) -> f64 {
        let mut a = 0.0;
        for j in 0..self.nj {
            for i in 0..self.ni {
                let [p00, p10, p01, p11] = self.corners(i, j);
                a += 0.5 * ((p11[0] - p00[0]) * (p01[1] - p10[1]) - (p11[1] - p00[1]) * (p01[0] - p10[0])).abs();
            }
        }
        a
    }

    /// Length of the polygonal boundary.
    pub fn perimeter(&self) -> f64 {
        let mut l = 0.0;
        let d = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
        for i in 0..self.ni {
            l += d(self.pts[self.idx(i, 0)], self.pts[self.idx(i + 1, 0)]);
            l += d(self.pts[self.idx(i, self.nj)], self.pts[self.idx(i + 1, self.nj)]);
        }
        for j in 0..self.nj {
            l += d(self.pts[self.idx(0, j)], self.pts[self.idx(0, j + 1)]);
            l += d(self.pts[self.idx(self.ni, j)], self.pts[self.idx(self.ni, j + 1)]);
        }
        l
    }

    /// Finds the cell containing `p` by walking from `hint` (or the nearest
    /// node). Points outside the mesh resolve to the closest boundary cell
    /// with local coordinates outside `[0,1]`.
    pub fn locate(&self, p: [f64; 2], hint: Option<(usize, usize)>) -> Location {
        let (mut i, mut j) = hint.unwrap_or_else(|| {
            let k = self.nearest_node(p);
            let (i, j) = self.ij(k);
            (i.min(self.ni - 1), j.min(self.nj - 1))
        });
        let mut last = (0.5, 0.5);
        let max_steps = 4 * (self.ni + self.nj);
        for _ in 0..max_steps {
            let c = self.corners(i, j);
            let (a, b) = bilinear_inverse(&c, p);
            last = (a, b);
            const TOL: f64 = 1e-10;
            let mut ni = i as isize;
            let mut nj = j as isize;
            if a < -TOL {
                ni -= 1;
            } else if a > 1.0 + TOL {
                ni += 1;
            }
            if b < -TOL {
                nj -= 1;
            } else if b > 1.0 + TOL {
                nj += 1;
            }
            let ci = ni.clamp(0, self.ni as isize - 1) as usize;
            let cj = nj.clamp(0, self.nj as isize - 1) as usize;
            if (ci, cj) == (i, j) {
                let inside = (-TOL..=1.0 + TOL).contains(&a) && (-TOL..=1.0 + TOL).contains(&b);
                return Location { cell: (i, j), local: (a, b), inside };
            }
            i = ci;
            j = cj;
        }
        Location { cell: (i, j), local: last, inside: false }
    }

    fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, q) in self.pts.iter().enumerate() {
            let d = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
            if d < best.0 {
                best = (d, k);
            }
        }
        best.1
    }

    pub fn interpolate(&self, f: &[f64], loc: &Location) -> f64 {
        let (i, j) = loc.cell;
        let (a, b) = loc.local;
        let f00 = f[self.idx(i, j)];
        let f10 = f[self.idx(i + 1, j)];
        let f01 = f[self.idx(i, j + 1)];
        let f11 = f[self.idx(i + 1, j + 1)];
        f00 * (1.0 - a) * (1.0 - b) + f10 * a * (1.0 - b) + f01 * (1.0 - a) * b + f11 * a * b
    }

    /// Bilinear gradient of `f` inside the located cell.
    pub fn interpolate_gradient(&self, f: &[f64], loc: &Location) -> [f64; 2] {
        let (i, j) = loc.cell;
        let (a, b) = loc.local;
        let c = self.corners(i, j);
        let f00 = f[self.idx(i, j)];
        let f10 = f[self.idx(i + 1, j)];
        let f01 = f[self.idx(i, j + 1)];
        let f11 = f[self.idx(i + 1, j + 1)];
        let fa = (f10 - f00) * (1.0 - b) + (f11 - f01) * b;
        let fb = (f01 - f00) * (1.0 - a) + (f11 - f10) * a;
        let d = bilinear_jac(&c, a, b);
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        // d = [[xi_a, xi_b], [eta_a, eta_b]]
        [(fa * d[1][1] - fb * d[1][0]) / det, (-fa * d[0][1] + fb * d[0][0]) / det]
    }
}

trait CoordTaps {
    fn apply_coord(&self, pts: &[[f64; 2]], c: usize) -> f64;
}

impl CoordTaps for Taps {
    fn apply_coord(&self, pts: &[[f64; 2]], c: usize) -> f64 {
        self.iter().map(|(k, w)| w * pts[k][c]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub cell: (usize, usize),
    pub local: (f64, f64),
    pub inside: bool,
}

fn bilinear_point(c: &[[f64; 2]; 4], a: f64, b: f64) -> [f64; 2] {
    let mut p = [0.0; 2];
    for (k, pk) in p.iter_mut().enumerate() {
        *pk = c[0][k] * (1.0 - a) * (1.0 - b) + c[1][k] * a * (1.0 - b) + c[2][k] * (1.0 - a) * b + c[3][k] * a * b;
    }
    p
}

// [[dx/da, dx/db], [dy/da, dy/db]]
fn bilinear_jac(c: &[[f64; 2]; 4], a: f64, b: f64) -> [[f64; 2]; 2] {
    let mut d = [[0.0; 2]; 2];
    for k in 0..2 {
        d[k][0] = (c[1][k] - c[0][k]) * (1.0 - b) + (c[3][k] - c[2][k]) * b;
        d[k][1] = (c[2][k] - c[0][k]) * (1.0 - a) + (c[3][k] - c[1][k]) * a;
    }
    d
}

fn bilinear_inverse(c: &[[f64; 2]; 4], p: [f64; 2]) -> (f64, f64) {
    let (mut a, mut b) = (0.5, 0.5);
    for _ in 0..30 {
        let q = bilinear_point(c, a, b);
        let r = [q[0] - p[0], q[1] - p[1]];
        let d = bilinear_jac(c, a, b);
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        if det == 0.0 {
            break;
        }
        let da = (r[0] * d[1][1] - r[1] * d[0][1]) / det;
        let db = (-r[0] * d[1][0] + r[1] * d[0][0]) / det;
        a -= da;
        b -= db;
        if da.abs() + db.abs() < 1e-15 {
            break;
        }
    }
    (a, b)
}

/// Discrete iteration domain: mesh of the region between the sonic arc,
/// the wedge, the symmetry line and the shock curve.
#[derive(Debug, Clone)]
pub struct ReflectionDomain {
    pub state: StateTwo,
    pub curve: FreeBoundaryCurve,
    pub mesh: Mesh,
    pub epsilon: f64,
    /// `c2 - r` at each node
    pub x: Vec<f64>,
    pub region: Vec<RegionTag>,
}

impl ReflectionDomain {
    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    /// Nodes of the shock boundary from `P1` to `P2`.
    pub fn shock_nodes(&self) -> Vec<usize> {
        (0..=self.mesh.ni).map(|i| self.mesh.idx(i, self.mesh.nj)).collect()
    }

    pub fn tag(&self, k: usize) -> BoundaryTag {
        self.mesh.tags[k]
    }

    /// Nodes in the inner strip `x < 2 eps` (excluding the sonic arc itself).
    pub fn in_inner(&self, k: usize) -> bool {
        self.x[k] > 0.0 && self.x[k] < 2.0 * self.epsilon
    }

    /// Nodes in the outer part `x > eps`.
    pub fn in_outer(&self, k: usize) -> bool {
        self.x[k] > self.epsilon
    }
}

/// Builds the boundary-fitted mesh. `s` (index `i`) runs from the sonic
/// arc to the symmetry line, `t` (index `j`) from the wedge to the shock.
/// Shock nodes sit at the curve's (resampled) sample points.
pub fn build_domain(
    st: &StateTwo,
    fb: &FreeBoundaryCurve,
    resolution: (usize, usize),
    epsilon: f64,
) -> Result<ReflectionDomain> {
    let (ni, nj) = resolution;
    if ni < 8 || nj < 8 {
        return Err(Error::InvariantViolated(format!("resolution {ni}x{nj} below 8x8")));
    }
    let eta1 = st.eta1();
    let curve = if fb.len() == ni + 1 && fb.eta()[0] == -st.v2 && fb.eta()[ni] == eta1 {
        fb.clone()
    } else {
        let (lo, hi) = fb.eta_range();
        if (lo + st.v2).abs() > 1e-12 * st.c2 || (hi - eta1).abs() > 1e-12 * st.c2 {
            return Err(Error::InvariantViolated("curve does not span [-v2, eta1]".into()));
        }
        let eta = uniform(-st.v2, eta1, ni + 1);
        let mut xi: Vec<f64> = eta.iter().map(|&e| fb.eval(e)).collect();
        xi[ni] = fb.xi()[fb.len() - 1];
        FreeBoundaryCurve::new(eta, xi, fb.end_slope())?
    };
    let tol = 1e-12 * st.c2;
    for (&e, &x) in curve.eta().iter().zip(curve.xi()) {
        if x < st.l(e) - tol {
            return Err(Error::MeshFold(format!("shock sample at eta={e:.6} lies below the straight shock")));
        }
    }

    let sv = uniform(0.0, 1.0, ni + 1);
    let tv = uniform(0.0, 1.0, nj + 1);
    let p4 = st.p4;
    let p3 = st.p3;
    let p1 = [curve.xi()[ni], eta1];
    let p2 = [curve.xi()[0], -st.v2];
    let sonic = |j: usize| -> [f64; 2] {
        if j == 0 {
            p4
        } else if j == nj {
            p1
        } else {
            let th = st.theta_w + tv[j] * st.y1;
            [st.c2 * th.cos(), st.c2 * th.sin()]
        }
    };
    let shock = |i: usize| -> [f64; 2] { [curve.xi()[ni - i], curve.eta()[ni - i]] };
    let wedge = |i: usize| -> [f64; 2] {
        let s = sv[i];
        [p4[0] + s * (p3[0] - p4[0]), p4[1] + s * (p3[1] - p4[1])]
    };
    let sym = |j: usize| -> [f64; 2] {
        let t = tv[j];
        [p3[0] + t * (p2[0] - p3[0]), -st.v2]
    };

    let mut pts = vec![[0.0; 2]; (ni + 1) * (nj + 1)];
    let mut tags = vec![BoundaryTag::Interior; pts.len()];
    for j in 0..=nj {
        for i in 0..=ni {
            let k = j * (ni + 1) + i;
            let (s, t) = (sv[i], tv[j]);
            let (tag, p) = match (i, j) {
                (0, 0) => (BoundaryTag::P4, p4),
                (0, _) if j == nj => (BoundaryTag::P1, p1),
                (_, 0) if i == ni => (BoundaryTag::P3, p3),
                _ if i == ni && j == nj => (BoundaryTag::P2, p2),
                (0, _) => (BoundaryTag::Sonic, sonic(j)),
                (_, 0) => (BoundaryTag::Wedge, wedge(i)),
                _ if i == ni => (BoundaryTag::Symmetry, sym(j)),
                _ if j == nj => (BoundaryTag::Shock, shock(i)),
                _ => {
                    let (w, sh, a, y) = (wedge(i), shock(i), sonic(j), sym(j));
                    let mut p = [0.0; 2];
                    for c in 0..2 {
                        p[c] = (1.0 - t) * w[c] + t * sh[c] + (1.0 - s) * a[c] + s * y[c]
                            - ((1.0 - s) * (1.0 - t) * p4[c]
                                + (1.0 - s) * t * p1[c]
                                + s * (1.0 - t) * p3[c]
                                + s * t * p2[c]);
                    }
                    (BoundaryTag::Interior, p)
                }
            };
            pts[k] = p;
            tags[k] = tag;
        }
    }
    let mesh = Mesh::new(ni, nj, pts, tags)?;
    let x: Vec<f64> = mesh.pts.iter().map(|p| st.c2 - p[0].hypot(p[1])).collect();
    let region = x.iter().map(|&x| RegionTag::classify(x, epsilon)).collect();
    Ok(ReflectionDomain { state: st.clone(), curve, mesh, epsilon, x, region })
}

/// New shock position from the level-set form of the continuity of the
/// pseudo-potential, evaluated at the current shock nodes.
pub fn extract_free_boundary(domain: &ReflectionDomain, psi: &[f64], st: &StateTwo) -> Result<FreeBoundaryCurve> {
    let du = st.du();
    if !(du > 0.0) {
        return Err(Error::InvariantViolated("u1 - u2 must be positive".into()));
    }
    let ni = domain.mesh.ni;
    let clamp_tol = 1e-6 * st.c2;
    let mut eta = vec![0.0; ni + 1];
    let mut xi = vec![0.0; ni + 1];
    for (i, k) in domain.shock_nodes().into_iter().enumerate() {
        let m = ni - i;
        let e = domain.mesh.pts[k][1];
        let mut p = psi[k];
        if p < 0.0 {
            if p < -clamp_tol {
                return Err(Error::NonMonotone(format!(
                    "psi={p:.3e} at eta={e:.6} would move the shock behind the straight shock"
                )));
            }
            p = 0.0;
        }
        eta[m] = e;
        xi[m] = (p + st.v2 * e) / du + st.xihat;
    }
    xi[ni] = st.l(eta[ni]);
    for (m, (&e, &x)) in eta.iter().zip(&xi).enumerate() {
        // the curve must stay left of the wedge line
        if x >= e * st.theta_w.cos() / st.theta_w.sin() && m < ni {
            return Err(Error::NonMonotone(format!("shock crosses the wedge at eta={e:.6}")));
        }
    }
    FreeBoundaryCurve::new(eta, xi, st.cot_s()).map_err(|e| Error::NonMonotone(e.to_string()))
}
