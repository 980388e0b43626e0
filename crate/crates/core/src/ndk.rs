//! The neural dynamical kernel: a two-time generalization of the NTK that
//! governs the mean predictor under noisy gradient learning.
//!
//! Recursion over layers, for one input pair and one time pair:
//! `K^{d,l} = m(t,t') Kdot^l K^{d,l-1} + exp(-T sigma^-2 |t-t'|) K^l`,
//! base `K^{d,0} = exp(-T sigma^-2 |t-t'|) K^in`. At `t = t' = 0` this is the
//! standard NTK with weight variance `sigma0^2`; in the stationary regime its
//! integral over lags recovers `(sigma^2 / T) K_GP`.

use crate::error::Result;
use crate::kernels::{Activation, KernelInputs, LayerRecursion};
use crate::prior::{decay_factor, prior_cov, DynamicsParams};

/// `K^{d,L}(t, t', x, x')`.
pub fn ndk(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    t: f64,
    t_prime: f64,
    g: &KernelInputs,
) -> Result<f64> {
    assert!(depth >= 1, "depth must be >= 1");
    let m = prior_cov(params, t, t_prime);
    let decay = decay_factor(params, t, t_prime);
    let mut rec = LayerRecursion::new(act, params, t, t_prime, g)?;
    let mut kd = decay * g.kxy;
    for _ in 0..depth {
        let kv = rec.advance()?;
        kd = m * kv.kdot * kd + decay * kv.k;
    }
    Ok(kd)
}

/// The standard NTK with weight variance `sigma0_2`; equals the dynamical
/// kernel at `t = t' = 0`.
pub fn ntk(act: Activation, depth: u32, sigma0_2: f64, g: &KernelInputs) -> Result<f64> {
    let params = DynamicsParams::new(0.0, sigma0_2, sigma0_2, 1.0, 1.0)?;
    ndk(act, depth, &params, 0.0, 0.0, g)
}

/// The equilibrium NNGP kernel `K_GP^L(x, x')` with weight variance `sigma2`.
pub fn nngp_equilibrium_kernel(
    act: Activation,
    depth: u32,
    sigma2: f64,
    g: &KernelInputs,
) -> Result<f64> {
    let params = DynamicsParams::new(0.0, sigma2, sigma2, 1.0, 1.0)?;
    crate::kernels::nngp_two_time(act, depth, &params, 0.0, 0.0, g)
}

/// Numeric `int_0^{t_window} K^{d,L}(lag) d(lag)` in the stationary regime.
///
/// Right-endpoint rectangle rule with step `params.dt`, matching the Volterra
/// solver's quadrature. Converges to `(sigma^2 / T) K_GP^L(x, x')` as the
/// window grows.
pub fn long_time_integral(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    g: &KernelInputs,
    t_window: f64,
) -> Result<f64> {
    let p = params.stationary();
    let n = (t_window / p.dt).floor() as usize;
    let mut sum = 0.0;
    for i in 1..=n {
        sum += ndk(act, depth, &p, i as f64 * p.dt, 0.0, g)?;
    }
    Ok(sum * p.dt)
}
