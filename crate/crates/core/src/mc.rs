//! Monte Carlo oracle for the two-time kernels.
//!
//! Independent of the closed forms it validates: the layer recursion is
//! propagated by sampling pre-activations from the bivariate Gaussian induced
//! by the previous layer's (estimated) kernel entries, never by evaluating an
//! analytic kernel formula. Plug-in estimates of the intermediate covariance
//! introduce an O(1/n) bias, far below the O(1/sqrt(n)) standard error at the
//! sample counts used.

use crate::error::{CoreError, Result};
use crate::kernels::Activation;
use crate::prior::{prior_cov, DynamicsParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Which expectation the oracle estimates at the final layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McTarget {
    /// `K^L = E[phi(u) phi(v)]`
    Kernel,
    /// `Kdot^L = E[phi'(u) phi'(v)]`
    Derivative,
    /// `K_mean^L = E[phi(u)] E[phi(v)]`
    Mean,
}

/// Estimate `K^L(t, t', x, x')` by layer-wise Gaussian sampling.
///
/// Returns `(estimate, stderr)`.
pub fn mc_kernel_oracle(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    t: f64,
    t_prime: f64,
    g: &crate::kernels::KernelInputs,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    mc_oracle(act, depth, params, t, t_prime, g, n_samples, seed, McTarget::Kernel)
}

/// Estimate a chosen kernel expectation by layer-wise Gaussian sampling.
#[allow(clippy::too_many_arguments)]
pub fn mc_oracle(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    t: f64,
    t_prime: f64,
    g: &crate::kernels::KernelInputs,
    n_samples: usize,
    seed: u64,
    target: McTarget,
) -> Result<(f64, f64)> {
    assert!(depth >= 1, "depth must be >= 1");
    if n_samples < 1_000 {
        return Err(CoreError::InvalidParameter(format!(
            "n_samples must be >= 1000, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_tt = prior_cov(params, t, t);
    let m_pp = prior_cov(params, t_prime, t_prime);
    let m_tp = prior_cov(params, t, t_prime);

    let (mut a, mut b, mut c) = (g.kxx, g.kyy, g.kxy);
    for layer in 1..=depth {
        let va = m_tt * a;
        let vb = m_pp * b;
        let cov = m_tp * c;
        let rho = cov / (va * vb).sqrt();
        if rho.abs() > 1.0 + 1e-9 {
            return Err(CoreError::NumericalDomain(format!(
                "pre-activation correlation {rho} outside [-1, 1] at layer {layer}"
            )));
        }
        let rho = rho.clamp(-1.0, 1.0);
        let tail = (1.0 - rho * rho).sqrt();

        if layer < depth {
            // self kernels from univariate draws, cross kernel from the pair
            let (sa, sb) = (va.sqrt(), vb.sqrt());
            let mut na = 0.0;
            let mut nb = 0.0;
            let mut nc = 0.0;
            for _ in 0..n_samples {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let u = sa * z1;
                let v = sb * (rho * z1 + tail * z2);
                let pa = act.apply(sa * rng.sample::<f64, _>(StandardNormal));
                let pb = act.apply(sb * rng.sample::<f64, _>(StandardNormal));
                na += pa * pa;
                nb += pb * pb;
                nc += act.apply(u) * act.apply(v);
            }
            a = na / n_samples as f64;
            b = nb / n_samples as f64;
            c = nc / n_samples as f64;
        } else {
            return Ok(estimate_final(act, va, vb, rho, tail, n_samples, target, &mut rng));
        }
    }
    unreachable!("loop always returns at layer == depth")
}

fn estimate_final(
    act: Activation,
    va: f64,
    vb: f64,
    rho: f64,
    tail: f64,
    n: usize,
    target: McTarget,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let (sa, sb) = (va.sqrt(), vb.sqrt());
    match target {
        McTarget::Kernel | McTarget::Derivative => {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let u = sa * z1;
                let v = sb * (rho * z1 + tail * z2);
                let s = if target == McTarget::Kernel {
                    act.apply(u) * act.apply(v)
                } else {
                    act.derivative(u) * act.derivative(v)
                };
                sum += s;
                sumsq += s * s;
            }
            let mean = sum / n as f64;
            let var = (sumsq / n as f64 - mean * mean).max(0.0);
            (mean, (var / n as f64).sqrt())
        }
        McTarget::Mean => {
            // product of two independent one-point means
            let (mut su, mut suq, mut sv, mut svq) = (0.0, 0.0, 0.0, 0.0);
            for _ in 0..n {
                let pu = act.apply(sa * rng.sample::<f64, _>(StandardNormal));
                let pv = act.apply(sb * rng.sample::<f64, _>(StandardNormal));
                su += pu;
                suq += pu * pu;
                sv += pv;
                svq += pv * pv;
            }
            let (mu, mv) = (su / n as f64, sv / n as f64);
            let seu = ((suq / n as f64 - mu * mu).max(0.0) / n as f64).sqrt();
            let sev = ((svq / n as f64 - mv * mv).max(0.0) / n as f64).sqrt();
            (mu * mv, mv.abs() * seu + mu.abs() * sev + seu * sev)
        }
    }
}
