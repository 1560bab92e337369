//! Discrete parabolic and weighted Hölder norms, diagnostic only.

use crate::geometry::ReflectionDomain;

/// Values and derivatives `[u, u_1, u_2, u_11, u_12, u_22]` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub p: [f64; 2],
    pub d: [f64; 6],
    /// distance weight: `x` for the parabolic norm, distance to the
    /// symmetry line for the weighted norm
    pub w: f64,
}

const ORDERS: [(i32, i32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
const MAX_PAIR_NODES: usize = 1500;

fn pair_subset(n: usize) -> impl Iterator<Item = usize> {
    let stride = n.div_ceil(MAX_PAIR_NODES).max(1);
    (0..n).step_by(stride)
}

/// Parabolic-scaled norm with samples in `(x, y)` coordinates.
pub fn parabolic_norm(samples: &[NormSample], alpha: f64) -> f64 {
    let mut total = 0.0;
    for (m, &(k, l)) in ORDERS.iter().enumerate() {
        let e = k as f64 + 0.5 * l as f64 - 2.0;
        total += samples.iter().fold(0.0f64, |acc, s| acc.max(s.w.powf(e) * s.d[m].abs()));
    }
    let sub: Vec<usize> = pair_subset(samples.len()).collect();
    for (m, &(k, l)) in ORDERS.iter().enumerate().skip(3) {
        let e = alpha + k as f64 + 0.5 * l as f64 - 2.0;
        let mut sup = 0.0f64;
        for (ia, &a) in sub.iter().enumerate() {
            for &b in &sub[ia + 1..] {
                let (sa, sb) = (&samples[a], &samples[b]);
                let diff = (sa.d[m] - sb.d[m]).abs();
                if diff == 0.0 {
                    continue;
                }
                let dist = (sa.p[0] - sb.p[0]).abs() + sa.w.max(sb.w).sqrt() * (sa.p[1] - sb.p[1]).abs();
                if dist > 0.0 {
                    sup = sup.max(sa.w.min(sb.w).powf(e) * diff / dist.powf(alpha));
                }
            }
        }
        total += sup;
    }
    total
}

/// Norm weighted by distance to a boundary piece, with weight exponent `k`.
pub fn weighted_norm(samples: &[NormSample], alpha: f64, k: f64) -> f64 {
    let mut total = 0.0;
    for (m, &(a, b)) in ORDERS.iter().enumerate() {
        let e = ((a + b) as f64 + k).max(0.0);
        total += samples.iter().fold(0.0f64, |acc, s| acc.max(s.w.powf(e) * s.d[m].abs()));
    }
    let e = (2.0 + alpha + k).max(0.0);
    let sub: Vec<usize> = pair_subset(samples.len()).collect();
    for m in 3..6 {
        let mut sup = 0.0f64;
        for (ia, &a) in sub.iter().enumerate() {
            for &b in &sub[ia + 1..] {
                let (sa, sb) = (&samples[a], &samples[b]);
                let diff = (sa.d[m] - sb.d[m]).abs();
                if diff == 0.0 {
                    continue;
                }
                let dist = (sa.p[0] - sb.p[0]).hypot(sa.p[1] - sb.p[1]);
                if dist > 0.0 {
                    sup = sup.max(sa.w.min(sb.w).powf(e) * diff / dist.powf(alpha));
                }
            }
        }
        total += sup;
    }
    total
}

/// Cartesian value, gradient and Hessian at an interior node.
pub fn cartesian_derivatives(domain: &ReflectionDomain, field: &[f64], k: usize) -> [f64; 6] {
    let g = domain.mesh.gradient(field, k);
    let h = domain.mesh.hessian(field, k);
    [field[k], g[0], g[1], h[0], h[1], h[2]]
}

/// Converts Cartesian derivatives at `p` to `(x, y) = (c2 - r, theta - theta_w)`.
pub fn to_sonic_derivatives(p: [f64; 2], d: [f64; 6]) -> [f64; 6] {
    let r = p[0].hypot(p[1]);
    let (c, s) = (p[0] / r, p[1] / r);
    let [u, ux, uy, uxx, uxy, uyy] = d;
    let ur = c * ux + s * uy;
    let ut = r * (-s * ux + c * uy);
    let urr = c * c * uxx + 2.0 * c * s * uxy + s * s * uyy;
    let urt = r * (-c * s * uxx + (c * c - s * s) * uxy + c * s * uyy) + (-s * ux + c * uy);
    let utt = r * r * (s * s * uxx - 2.0 * c * s * uxy + c * c * uyy) - r * ur;
    // x = c2 - r flips the sign of odd radial derivatives
    [u, -ur, ut, urr, -urt, utt]
}

/// `(parabolic norm over the inner strip, weighted norm over the outer part)`
/// with the weight exponent `-1 - alpha` toward the symmetry line.
pub fn discrete_norms(domain: &ReflectionDomain, field: &[f64], alpha: f64) -> (f64, f64) {
    let st = &domain.state;
    let mut inner = Vec::new();
    let mut outer = Vec::new();
    for k in 0..domain.n_nodes() {
        if !domain.mesh.is_interior(k) {
            continue;
        }
        let p = domain.mesh.pts[k];
        let d = cartesian_derivatives(domain, field, k);
        if domain.in_inner(k) {
            let q = to_sonic_derivatives(p, d);
            let y = p[1].atan2(p[0]) - st.theta_w;
            inner.push(NormSample { p: [domain.x[k], y], d: q, w: domain.x[k] });
        }
        if domain.in_outer(k) {
            outer.push(NormSample { p, d, w: p[1] + st.v2 });
        }
    }
    (parabolic_norm(&inner, alpha), weighted_norm(&outer, alpha, -1.0 - alpha))
}
