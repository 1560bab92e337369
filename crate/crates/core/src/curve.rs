//! Shock curve `xi = f(eta)` as a shape-preserving piecewise cubic.

use crate::error::{Error, Result};

/// Samples `(eta_k, xi_k)` with strictly increasing `eta`, from the
/// symmetry line up to `P1`, where the slope is clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryCurve {
    eta: Vec<f64>,
    xi: Vec<f64>,
    slopes: Vec<f64>,
    end_slope: f64,
}

impl FreeBoundaryCurve {
    pub fn new(eta: Vec<f64>, xi: Vec<f64>, end_slope: f64) -> Result<Self> {
        if eta.len() != xi.len() || eta.len() < 2 {
            return Err(Error::InvariantViolated("curve needs at least two matching samples".into()));
        }
        if eta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvariantViolated("curve samples must have increasing eta".into()));
        }
        let slopes = pchip_slopes(&eta, &xi, end_slope);
        Ok(FreeBoundaryCurve { eta, xi, slopes, end_slope })
    }

    /// Uniform samples of `xi = g(eta)` on `[eta_lo, eta_hi]`.
    pub fn from_fn(eta_lo: f64, eta_hi: f64, n: usize, end_slope: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let eta = uniform(eta_lo, eta_hi, n);
        let xi = eta.iter().map(|&e| g(e)).collect();
        Self::new(eta, xi, end_slope)
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn end_slope(&self) -> f64 {
        self.end_slope
    }

    pub fn eta_range(&self) -> (f64, f64) {
        (self.eta[0], self.eta[self.eta.len() - 1])
    }

    fn segment(&self, eta: f64) -> usize {
        let n = self.eta.len();
        match self.eta.binary_search_by(|e| e.partial_cmp(&eta).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => k.clamp(1, n - 1) - 1,
        }
    }

    /// Cubic Hermite evaluation; linear extrapolation outside the samples.
    pub fn eval(&self, eta: f64) -> f64 {
        let n = self.eta.len();
        if eta <= self.eta[0] {
            return self.xi[0] + self.slopes[0] * (eta - self.eta[0]);
        }
        if eta >= self.eta[n - 1] {
            return self.xi[n - 1] + self.slopes[n - 1] * (eta - self.eta[n - 1]);
        }
        let k = self.segment(eta);
        let h = self.eta[k + 1] - self.eta[k];
        let t = (eta - self.eta[k]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.xi[k] + h10 * h * self.slopes[k] + h01 * self.xi[k + 1] + h11 * h * self.slopes[k + 1]
    }

    pub fn deriv(&self, eta: f64) -> f64 {
        let n = self.eta.len();
        if eta <= self.eta[0] {
            return self.slopes[0];
        }
        if eta >= self.eta[n - 1] {
            return self.slopes[n - 1];
        }
        let k = self.segment(eta);
        let h = self.eta[k + 1] - self.eta[k];
        let t = (eta - self.eta[k]) / h;
        let d00 = (6.0 * t * t - 6.0 * t) / h;
        let d10 = 3.0 * t * t - 4.0 * t + 1.0;
        let d01 = (-6.0 * t * t + 6.0 * t) / h;
        let d11 = 3.0 * t * t - 2.0 * t;
        d00 * self.xi[k] + d10 * self.slopes[k] + d01 * self.xi[k + 1] + d11 * self.slopes[k + 1]
    }

    /// Same curve sampled at `n` uniform points over its own range.
    pub fn resample(&self, n: usize) -> Result<Self> {
        let (lo, hi) = self.eta_range();
        let eta = uniform(lo, hi, n);
        let mut xi: Vec<f64> = eta.iter().map(|&e| self.eval(e)).collect();
        xi[0] = self.xi[0];
        xi[n - 1] = self.xi[self.xi.len() - 1];
        Self::new(eta, xi, self.end_slope)
    }

    /// Last divided difference minus the clamped end slope.
    pub fn end_slope_mismatch(&self) -> f64 {
        let n = self.eta.len();
        (self.xi[n - 1] - self.xi[n - 2]) / (self.eta[n - 1] - self.eta[n - 2]) - self.end_slope
    }

    pub fn sup_distance(&self, other: &FreeBoundaryCurve) -> f64 {
        if self.eta == other.eta {
            self.xi.iter().zip(&other.xi).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        } else {
            self.eta.iter().zip(&self.xi).fold(0.0f64, |m, (&e, &x)| m.max((x - other.eval(e)).abs()))
        }
    }
}

pub fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let m = (n - 1) as f64;
    (0..n)
        .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / m })
        .collect()
}

// Fritsch-Butland harmonic-mean slopes, shape preserving on monotone data.
fn pchip_slopes(x: &[f64], y: &[f64], end_slope: f64) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = end_slope;
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let mut d0 = ((2.0 * h[0] + h[1]) * del[0] - h[0] * del[1]) / (h[0] + h[1]);
    if d0 * del[0] <= 0.0 {
        d0 = 0.0;
    } else if del[0] * del[1] <= 0.0 && d0.abs() > 3.0 * del[0].abs() {
        d0 = 3.0 * del[0];
    }
    d[0] = d0;
    d[n - 1] = end_slope;
    d
}
