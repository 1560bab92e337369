//! Polytropic potential-flow algebra: incident shock, Bernoulli density,
//! ellipticity and the Rankine-Hugoniot mass-flux jump.

use crate::error::{Error, Result};

/// Radicands in `[-RADICAND_CLAMP, 0)` are rounded up to zero.
pub const RADICAND_CLAMP: f64 = 1e-12;

/// Gas constants and the incident shock they determine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasSetup {
    pub gamma: f64,
    pub rho0: f64,
    pub rho1: f64,
    /// Flow speed behind the incident shock.
    pub u1: f64,
    /// Position of the incident shock, `xi = xi0`.
    pub xi0: f64,
}

/// Pseudo-potential value and gradient at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoState {
    pub potential: f64,
    pub grad: [f64; 2],
}

impl PseudoState {
    pub fn new(potential: f64, grad: [f64; 2]) -> Self {
        PseudoState { potential, grad }
    }
}

/// Density together with a flag telling whether the radicand was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Density {
    pub rho: f64,
    pub clamped: bool,
}

pub fn incident_shock(gamma: f64, rho0: f64, rho1: f64) -> Result<GasSetup> {
    let ok = gamma > 1.0 && rho0 > 0.0 && rho1 > rho0 && gamma.is_finite() && rho1.is_finite();
    if !ok {
        return Err(Error::DegenerateShock { gamma, rho0, rho1 });
    }
    let g1 = gamma - 1.0;
    let u1 = (rho1 - rho0)
        * (2.0 * (rho1.powf(g1) - rho0.powf(g1)) / (rho1 * rho1 - rho0 * rho0)).sqrt();
    let xi0 = rho1 * u1 / (rho1 - rho0);
    Ok(GasSetup { gamma, rho0, rho1, u1, xi0 })
}

impl GasSetup {
    pub fn new(gamma: f64, rho0: f64, rho1: f64) -> Result<Self> {
        incident_shock(gamma, rho0, rho1)
    }

    /// `rho^(gamma-1)`, the enthalpy-like quantity used throughout.
    pub fn enthalpy(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 1.0)
    }

    /// Squared sound speed `(gamma-1) rho^(gamma-1)`.
    pub fn sound_speed_sq(&self, rho: f64) -> f64 {
        (self.gamma - 1.0) * self.enthalpy(rho)
    }

    /// Bernoulli radicand `rho0^(gamma-1) - phi - |D phi|^2 / 2`.
    pub fn radicand(&self, state: &PseudoState) -> f64 {
        let [p, q] = state.grad;
        self.enthalpy(self.rho0) - state.potential - 0.5 * (p * p + q * q)
    }
}

pub fn density_flagged(gas: &GasSetup, state: &PseudoState) -> Result<Density> {
    let mut r = gas.radicand(state);
    let mut clamped = false;
    if r < 0.0 {
        if r >= -RADICAND_CLAMP {
            r = 0.0;
            clamped = true;
        } else {
            return Err(Error::VacuumState { radicand: r });
        }
    }
    // Normalised by rho0 so the rest state returns rho0 bit-for-bit.
    let ratio = r / gas.enthalpy(gas.rho0);
    Ok(Density { rho: gas.rho0 * ratio.powf(1.0 / (gas.gamma - 1.0)), clamped })
}

pub fn density(gas: &GasSetup, state: &PseudoState) -> Result<f64> {
    density_flagged(gas, state).map(|d| d.rho)
}

/// `c*^2 - |D phi|^2`; positive exactly where the equation is elliptic.
pub fn ellipticity_margin(gas: &GasSetup, state: &PseudoState) -> f64 {
    let g = gas.gamma;
    let cstar2 = 2.0 * (g - 1.0) / (g + 1.0) * (gas.enthalpy(gas.rho0) - state.potential);
    let [p, q] = state.grad;
    cstar2 - (p * p + q * q)
}

/// Mass-flux jump `rho_l D phi_l . nu - rho_r D phi_r . nu`.
pub fn rh_residual(
    gas: &GasSetup,
    left: &PseudoState,
    right: &PseudoState,
    normal: [f64; 2],
) -> Result<f64> {
    let rl = density(gas, left)?;
    let rr = density(gas, right)?;
    let fl = rl * (left.grad[0] * normal[0] + left.grad[1] * normal[1]);
    let fr = rr * (right.grad[0] * normal[0] + right.grad[1] * normal[1]);
    Ok(fl - fr)
}

/// Density must increase along the pseudo-flow across an admissible shock.
pub fn entropy_check(density_upstream: f64, density_downstream: f64) -> bool {
    density_downstream > density_upstream
}
