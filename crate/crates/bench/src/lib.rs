//! Shared fixtures for the benchmarks.

use regrefl_core::{GasSetup, StateTwo};

/// The gamma = 2, rho0 = 1, rho1 = 2 configuration used across the benches.
pub fn reference_gas() -> GasSetup {
    GasSetup::new(2.0, 1.0, 2.0).expect("valid gas")
}

pub fn reference_state(sigma: f64) -> StateTwo {
    regrefl_core::states::state2_solve(&reference_gas(), std::f64::consts::FRAC_PI_2 - sigma)
        .expect("state (2) converges")
}

/// Domain over the reference shock at `n x n`, default sonic strip.
pub fn reference_domain(sigma: f64, n: usize) -> regrefl_core::ReflectionDomain {
    use regrefl_core::geometry::{build_domain, default_epsilon, reference_curve};
    let st = reference_state(sigma);
    let curve = reference_curve(&st, n).expect("reference shock");
    build_domain(&st, &curve, (n, n), default_epsilon(&st)).expect("domain builds")
}
