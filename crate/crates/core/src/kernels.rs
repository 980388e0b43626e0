//! Closed-form two-time kernels for linear, ReLU and erf activations.
//!
//! For a pair of inputs the entire layer recursion is driven by three scalars
//! (the normalized input Gram entries) together with the prior covariance
//! `m(t, t')`. Each activation admits a closed form per layer:
//! linear multiplies by `m`, ReLU tracks an angle through the arccos
//! recursion, erf tracks the three Gram scalars through the arcsin recursion.

use crate::error::{CoreError, Result};
use crate::prior::{prior_cov, DynamicsParams};

/// Tolerance for clamping arccos/arcsin arguments that drift past [-1, 1].
const CLAMP_TOL: f64 = 1e-9;

/// Supported activation nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Erf,
}

impl Activation {
    /// Apply the activation pointwise.
    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
            Activation::Erf => erf(z),
        }
    }

    /// Derivative of the activation. The ReLU subgradient at 0 is taken as 0.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Erf => 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "erf" => Ok(Activation::Erf),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown activation '{other}' (expected linear, relu or erf)"
            ))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Activation::Linear => write!(f, "linear"),
            Activation::Relu => write!(f, "relu"),
            Activation::Erf => write!(f, "erf"),
        }
    }
}

/// Error function. Rust's std lacks erf; Taylor series below 0.5 (machine
/// precision there), rational erfc fit above (~1e-7 absolute, well below the
/// Monte Carlo sampling error this feeds).
pub fn erf(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.5 {
        // erf(x) = 2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1)); the n = 12
        // tail is below 1e-16 for |x| < 0.5
        let t = x * x;
        let mut term = x;
        let mut sum = 0.0;
        for n in 0..13 {
            sum += term / (2 * n + 1) as f64;
            term *= -t / (n + 1) as f64;
        }
        return 2.0 / std::f64::consts::PI.sqrt() * sum;
    }
    let r = 1.0 - erfc_large(ax);
    if x < 0.0 {
        -r
    } else {
        r
    }
}

fn erfc_large(ax: f64) -> f64 {
    if ax > 27.0 {
        return 0.0;
    }
    let t = 1.0 / (1.0 + 0.5 * ax);
    // rational erfc fit, |error| < 1.2e-7 absolute
    t * (-ax * ax - 1.26551223
        + t * (1.00002368
            + t * (0.37409196
                + t * (0.09678418
                    + t * (-0.18628806
                        + t * (0.27886807
                            + t * (-1.13520398
                                + t * (1.48851587
                                    + t * (-0.82215223 + t * 0.17087277)))))))))
        .exp()
}

/// The three normalized input Gram scalars that determine every kernel value
/// for a pair of inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInputs {
    /// `K^in(x, x)`
    pub kxx: f64,
    /// `K^in(x, x')`
    pub kxy: f64,
    /// `K^in(x', x')`
    pub kyy: f64,
}

impl KernelInputs {
    pub fn new(kxx: f64, kxy: f64, kyy: f64) -> Result<Self> {
        if !(kxx > 0.0) || !(kyy > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "self Gram entries must be positive, got kxx={kxx}, kyy={kyy}"
            )));
        }
        if kxy * kxy > kxx * kyy * (1.0 + 1e-12) {
            return Err(CoreError::InvalidParameter(format!(
                "Cauchy-Schwarz violated: kxy^2={} > kxx*kyy={}",
                kxy * kxy,
                kxx * kyy
            )));
        }
        Ok(Self { kxx, kxy, kyy })
    }

    /// Swap the roles of `x` and `x'`.
    #[inline]
    pub fn swapped(&self) -> Self {
        Self {
            kxx: self.kyy,
            kxy: self.kxy,
            kyy: self.kxx,
        }
    }
}

/// `(1/n0) x . x'` for two input vectors.
pub fn input_gram(x: &[f64], x_prime: &[f64], n0: usize) -> Result<f64> {
    if x.len() != n0 {
        return Err(CoreError::Dimension {
            expected: n0,
            got: x.len(),
        });
    }
    if x_prime.len() != n0 {
        return Err(CoreError::Dimension {
            expected: n0,
            got: x_prime.len(),
        });
    }
    Ok(x.iter().zip(x_prime).map(|(a, b)| a * b).sum::<f64>() / n0 as f64)
}

/// `J(theta) = (pi - theta) cos(theta) + sin(theta)` for the ReLU arc-cosine
/// recursion. Strictly decreasing from `J(0) = pi` to `J(pi) = 0`.
pub fn relu_j(theta: f64) -> Result<f64> {
    if theta < -CLAMP_TOL || theta > std::f64::consts::PI + CLAMP_TOL {
        return Err(CoreError::NumericalDomain(format!(
            "relu_j angle {theta} outside [0, pi]"
        )));
    }
    let th = theta.clamp(0.0, std::f64::consts::PI);
    Ok((std::f64::consts::PI - th) * th.cos() + th.sin())
}

fn clamp_unit(x: f64) -> Result<f64> {
    if x > 1.0 + CLAMP_TOL || x < -1.0 - CLAMP_TOL {
        return Err(CoreError::NumericalDomain(format!(
            "inverse-trig argument {x} outside [-1, 1]"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// Per-layer kernel pair produced by the closed-form recursion.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    /// `K^l(t, t', x, x')`
    pub k: f64,
    /// `Kdot^l(t, t', x, x')`
    pub kdot: f64,
}

/// State of the layer recursion for one `(t, t', x, x')` evaluation.
///
/// Allocation-free: `advance` steps one layer and returns that layer's kernel
/// values. The Volterra solver evaluates O(n_t^2 P^2) of these, so this stays
/// on the stack.
pub(crate) struct LayerRecursion {
    act: Activation,
    m_tt: f64,
    m_pp: f64,
    m_tp: f64,
    // ReLU: current angle theta^{l-1}; erf & linear: the three Gram scalars
    // K^{l-1}(t,t,x,x), K^{l-1}(t',t',x',x'), K^{l-1}(t,t',x,x').
    theta: f64,
    a: f64,
    b: f64,
    c: f64,
    sqrt_self: f64,
    layer: u32,
}

impl LayerRecursion {
    pub fn new(act: Activation, params: &DynamicsParams, t: f64, t_prime: f64, g: &KernelInputs) -> Result<Self> {
        let m_tt = prior_cov(params, t, t);
        let m_pp = prior_cov(params, t_prime, t_prime);
        let m_tp = prior_cov(params, t, t_prime);
        let sqrt_self = (g.kxx * g.kyy).sqrt();
        let theta = if act == Activation::Relu {
            clamp_unit(m_tp / (m_tt * m_pp).sqrt() * g.kxy / sqrt_self)?.acos()
        } else {
            0.0
        };
        Ok(Self {
            act,
            m_tt,
            m_pp,
            m_tp,
            theta,
            a: g.kxx,
            b: g.kyy,
            c: g.kxy,
            sqrt_self,
            layer: 0,
        })
    }

    /// Compute `K^l` and `Kdot^l` for the next layer `l`.
    pub fn advance(&mut self) -> Result<KernelValue> {
        self.layer += 1;
        let l = self.layer;
        match self.act {
            Activation::Linear => Ok(KernelValue {
                k: self.m_tp.powi(l as i32) * self.c,
                kdot: 1.0,
            }),
            Activation::Relu => {
                let pi = std::f64::consts::PI;
                // theta here is theta^{l-1}, the correlation angle of the
                // layer-l pre-activations; both K^l and Kdot^l are Gaussian
                // expectations over that pair
                let theta_prev = self.theta;
                let j_prev = relu_j(theta_prev)?;
                let k = self.sqrt_self / (pi * 2f64.powi(l as i32))
                    * (self.m_tt * self.m_pp).powf(l as f64 / 2.0)
                    * j_prev;
                self.theta =
                    clamp_unit(self.m_tp / (self.m_tt * self.m_pp).sqrt() * j_prev / pi)?.acos();
                Ok(KernelValue {
                    k,
                    kdot: (pi - theta_prev) / (2.0 * pi),
                })
            }
            Activation::Erf => {
                let pi = std::f64::consts::PI;
                let da = 1.0 + 2.0 * self.m_tt * self.a;
                let db = 1.0 + 2.0 * self.m_pp * self.b;
                let den = (da * db).sqrt();
                let arg = 2.0 * self.m_tp * self.c / den;
                let k = 2.0 / pi * clamp_unit(arg)?.asin();
                let disc = da * db - 4.0 * (self.m_tp * self.c).powi(2);
                if disc <= 0.0 && disc > -CLAMP_TOL * da * db {
                    // collinear boundary: derivative kernel diverges like the
                    // arcsin derivative at 1; clamp the discriminant.
                    return Err(CoreError::NumericalDomain(
                        "erf derivative kernel at collinear boundary".into(),
                    ));
                }
                let kdot = 4.0 / pi / disc.sqrt();
                self.a = 2.0 / pi * clamp_unit(2.0 * self.m_tt * self.a / da)?.asin();
                self.b = 2.0 / pi * clamp_unit(2.0 * self.m_pp * self.b / db)?.asin();
                self.c = k;
                Ok(KernelValue { k, kdot })
            }
        }
    }
}

/// Two-time kernel `K^L(t, t', x, x')` of the layer-`L` representation under
/// the weight prior.
pub fn nngp_two_time(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    t: f64,
    t_prime: f64,
    g: &KernelInputs,
) -> Result<f64> {
    assert!(depth >= 1, "depth must be >= 1");
    let mut rec = LayerRecursion::new(act, params, t, t_prime, g)?;
    let mut last = rec.advance()?;
    for _ in 1..depth {
        last = rec.advance()?;
    }
    Ok(last.k)
}

/// Two-time derivative kernel `Kdot^L(t, t', x, x')`.
pub fn deriv_two_time(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    t: f64,
    t_prime: f64,
    g: &KernelInputs,
) -> Result<f64> {
    assert!(depth >= 1, "depth must be >= 1");
    let mut rec = LayerRecursion::new(act, params, t, t_prime, g)?;
    let mut last = rec.advance()?;
    for _ in 1..depth {
        last = rec.advance()?;
    }
    Ok(last.kdot)
}

/// Mean kernel `K_mean^L(x, x') = (1/N_L) <x^L(x)> . <x^L(x')>` with weights
/// drawn from the stationary prior `N(0, sigma^2 I)`.
///
/// Identically zero for odd activations (linear, erf). For ReLU the mean of
/// each unit is `sqrt(sigma^2 q / (2 pi))` with `q` the self kernel of the
/// previous layer, which closes the recursion analytically for any depth
/// (exact for L = 1; for deeper nets it uses the self-averaging of the hidden
/// layer norm, exact in the infinite-width limit).
pub fn mean_kernel(act: Activation, depth: u32, sigma2: f64, g: &KernelInputs) -> Result<f64> {
    assert!(depth >= 1, "depth must be >= 1");
    match act {
        Activation::Linear | Activation::Erf => Ok(0.0),
        Activation::Relu => {
            let qx = relu_self_kernel(depth - 1, sigma2, g.kxx);
            let qy = relu_self_kernel(depth - 1, sigma2, g.kyy);
            Ok(sigma2 * (qx * qy).sqrt() / (2.0 * std::f64::consts::PI))
        }
    }
}

/// ReLU self kernel `K^l(x, x)` at equal times under variance `sigma2`:
/// `K^l = sigma2 * K^{l-1} / 2`, base `K^0 = kxx`.
fn relu_self_kernel(layers: u32, sigma2: f64, kxx: f64) -> f64 {
    let mut q = kxx;
    for _ in 0..layers {
        q *= sigma2 / 2.0;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(temperature: f64, sigma2: f64, sigma0_2: f64) -> DynamicsParams {
        DynamicsParams::new(temperature, sigma2, sigma0_2, 0.1, 1.0).unwrap()
    }

    fn unit_inputs(kxy: f64) -> KernelInputs {
        KernelInputs::new(1.0, kxy, 1.0).unwrap()
    }

    #[test]
    fn input_gram_basics() {
        let x = vec![2.0, 0.0, 0.0];
        let y = vec![0.0, 2.0, 0.0];
        assert_eq!(input_gram(&x, &x, 3).unwrap(), 4.0 / 3.0);
        assert_eq!(input_gram(&x, &y, 3).unwrap(), 0.0);
        assert!(matches!(
            input_gram(&x, &y[..2], 3),
            Err(CoreError::Dimension { .. })
        ));
    }

    #[test]
    fn relu_j_endpoints() {
        use std::f64::consts::PI;
        assert_relative_eq!(relu_j(0.0).unwrap(), PI);
        assert_relative_eq!(relu_j(PI / 2.0).unwrap(), 1.0);
        assert!(relu_j(PI).unwrap().abs() < 1e-15);
        assert!(relu_j(4.0).is_err());
        assert!(relu_j(-0.1).is_err());
    }

    #[test]
    fn linear_depth_two_at_init() {
        // m(0,0)^L * kxy with sigma0^2 = 1
        let p = params(1.0, 1.0, 1.0);
        let k = nngp_two_time(Activation::Linear, 2, &p, 0.0, 0.0, &unit_inputs(1.0)).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn relu_depth_one_at_init() {
        // sigma0^2 = 2: K^1 = m/2 = 1
        let p = params(1.0, 1.0, 2.0);
        let k = nngp_two_time(Activation::Relu, 1, &p, 0.0, 0.0, &unit_inputs(1.0)).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn erf_depth_one_at_init() {
        let p = params(1.0, 1.0, 1.0);
        let k = nngp_two_time(Activation::Erf, 1, &p, 0.0, 0.0, &unit_inputs(1.0)).unwrap();
        let expected = 2.0 / std::f64::consts::PI * (2.0f64 / 3.0).asin();
        assert_relative_eq!(k, expected, epsilon = 1e-12);
    }

    #[test]
    fn deriv_linear_is_one() {
        let p = params(0.3, 1.2, 0.7);
        let kd = deriv_two_time(Activation::Linear, 3, &p, 1.0, 4.0, &unit_inputs(0.2)).unwrap();
        assert_eq!(kd, 1.0);
    }

    #[test]
    fn deriv_relu_equal_args() {
        let p = params(0.3, 1.0, 1.0);
        let kd = deriv_two_time(Activation::Relu, 1, &p, 2.0, 2.0, &unit_inputs(1.0)).unwrap();
        assert_relative_eq!(kd, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn deriv_relu_orthogonal_at_init() {
        // step functions of independent Gaussians: E = 1/4
        let p = params(1.0, 1.0, 1.0);
        let kd = deriv_two_time(Activation::Relu, 1, &p, 0.0, 0.0, &unit_inputs(0.0)).unwrap();
        assert_relative_eq!(kd, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn mean_kernel_values() {
        let g = unit_inputs(0.3);
        assert_eq!(mean_kernel(Activation::Linear, 2, 1.0, &g).unwrap(), 0.0);
        assert_eq!(mean_kernel(Activation::Erf, 1, 1.0, &g).unwrap(), 0.0);
        let k = mean_kernel(Activation::Relu, 1, 1.0, &g).unwrap();
        assert_relative_eq!(k, 1.0 / (2.0 * std::f64::consts::PI), epsilon = 1e-15);
    }

    #[test]
    fn erf_bounded_by_one() {
        let p = params(0.2, 2.0, 0.5);
        for &(t, tp, kxy) in &[(0.0, 0.0, 0.99), (1.0, 5.0, -0.7), (10.0, 10.0, 1.0)] {
            let k = nngp_two_time(Activation::Erf, 3, &p, t, tp, &unit_inputs(kxy)).unwrap();
            assert!(k.abs() <= 1.0);
        }
    }

    #[test]
    fn cauchy_schwarz_rejected() {
        assert!(KernelInputs::new(1.0, 1.1, 1.0).is_err());
        assert!(KernelInputs::new(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn erf_of_known_values() {
        assert_relative_eq!(erf(0.0), 0.0);
        assert_relative_eq!(erf(1.0), 0.8427007929497149, epsilon = 1e-6);
        assert_relative_eq!(erf(-1.0), -0.8427007929497149, epsilon = 1e-6);
        assert!(erf(6.0) > 0.999999999);
    }

    proptest! {
        #[test]
        fn exchange_symmetry(kxy in -0.95..0.95f64, t in 0.0..20.0f64, tp in 0.0..20.0f64,
                             kxx in 0.2..2.0f64, kyy in 0.2..2.0f64) {
            let p = params(0.05, 1.0, 0.5);
            let g = KernelInputs::new(kxx, kxy * (kxx * kyy).sqrt(), kyy).unwrap();
            for act in [Activation::Linear, Activation::Relu, Activation::Erf] {
                let a = nngp_two_time(act, 2, &p, t, tp, &g).unwrap();
                let b = nngp_two_time(act, 2, &p, tp, t, &g.swapped()).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn relu_monotone_in_overlap(base in 0.0..0.8f64) {
            let p = params(0.1, 1.0, 1.0);
            let t = 3.0;
            let k1 = nngp_two_time(Activation::Relu, 2, &p, t, t, &unit_inputs(base)).unwrap();
            let k2 = nngp_two_time(Activation::Relu, 2, &p, t, t, &unit_inputs(base + 0.1)).unwrap();
            prop_assert!(k2 > k1);
        }
    }

    #[test]
    fn equal_time_gram_psd() {
        // Gram of nngp_two_time over a set of inputs at equal times is PSD.
        let p = params(0.2, 1.0, 1.5);
        let n = 12;
        let vecs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = i as f64 * 0.37;
                vec![a.cos(), a.sin(), (0.5 * a).cos()]
            })
            .collect();
        for act in [Activation::Linear, Activation::Relu, Activation::Erf] {
            let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| {
                let kxx = input_gram(&vecs[i], &vecs[i], 3).unwrap();
                let kyy = input_gram(&vecs[j], &vecs[j], 3).unwrap();
                let kxy = input_gram(&vecs[i], &vecs[j], 3).unwrap();
                let g = KernelInputs::new(kxx, kxy, kyy).unwrap();
                nngp_two_time(act, 2, &p, 1.0, 1.0, &g).unwrap()
            });
            let eig = mat.clone().symmetric_eigen();
            for &ev in eig.eigenvalues.iter() {
                assert!(ev >= -1e-9 * mat.trace(), "{act}: eigenvalue {ev}");
            }
        }
    }
}
