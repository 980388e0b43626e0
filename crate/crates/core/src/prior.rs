//! Dynamics hyperparameters and the two-time prior covariance of the weights.
//!
//! Every kernel in this crate is built from the scalar covariance
//! `m(t, t') = sigma^2 exp(-T sigma^-2 |t - t'|) + (sigma0^2 - sigma^2) exp(-T sigma^-2 (t + t'))`,
//! the autocorrelation of a single weight under the Ornstein-Uhlenbeck-like
//! prior process: stationary variance `sigma^2`, initial variance `sigma0^2`,
//! relaxation rate `T / sigma^2`.

use crate::error::{CoreError, Result};

/// Hyperparameters governing the weight prior and the time grid.
///
/// Time is continuous throughout; one unit of `t` corresponds to one unit of
/// accumulated learning-rate in the noisy-gradient dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    /// Noise level (temperature). `T = 0` is deterministic gradient flow.
    pub temperature: f64,
    /// Variance of the L2 regularizer's equilibrium distribution.
    pub sigma2: f64,
    /// Variance of the weight initialization.
    pub sigma0_2: f64,
    /// Base time step for quadrature.
    pub dt: f64,
    /// Total integration time.
    pub t_max: f64,
}

impl DynamicsParams {
    pub fn new(temperature: f64, sigma2: f64, sigma0_2: f64, dt: f64, t_max: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma2 must be > 0, got {sigma2}"
            )));
        }
        if !(sigma0_2 > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma0_2 must be > 0, got {sigma0_2}"
            )));
        }
        if !(dt > 0.0) {
            return Err(CoreError::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if !(t_max >= dt) {
            return Err(CoreError::InvalidParameter(format!(
                "t_max must be >= dt, got t_max={t_max}, dt={dt}"
            )));
        }
        Ok(Self {
            temperature,
            sigma2,
            sigma0_2,
            dt,
            t_max,
        })
    }

    /// Relaxation rate of the prior process, `T / sigma^2`.
    #[inline]
    pub fn rate(&self) -> f64 {
        self.temperature / self.sigma2
    }

    /// Whether the prior process is stationary (`sigma0^2 == sigma^2`), in
    /// which case every kernel depends on times only through `|t - t'|`.
    #[inline]
    pub fn is_stationary(&self) -> bool {
        self.sigma0_2 == self.sigma2
    }

    /// The same parameters with the initial variance replaced by the
    /// stationary one. Used for equilibrium kernels.
    #[inline]
    pub fn stationary(&self) -> Self {
        Self {
            sigma0_2: self.sigma2,
            ..*self
        }
    }
}

/// Two-time prior covariance `m(t, t')` of a single weight.
///
/// Symmetric in `(t, t')`; `m(0, 0) = sigma0^2`; at long times the transient
/// term vanishes and `m` depends only on `|t - t'|` with stationary variance
/// `sigma^2`.
#[inline]
pub fn prior_cov(params: &DynamicsParams, t: f64, t_prime: f64) -> f64 {
    let r = params.rate();
    params.sigma2 * (-r * (t - t_prime).abs()).exp()
        + (params.sigma0_2 - params.sigma2) * (-r * (t + t_prime)).exp()
}

/// The bare decay factor `exp(-T sigma^-2 |t - t'|)`.
///
/// Equals 1 iff `t == t'` or `T == 0`.
#[inline]
pub fn decay_factor(params: &DynamicsParams, t: f64, t_prime: f64) -> f64 {
    (-params.rate() * (t - t_prime).abs()).exp()
}
