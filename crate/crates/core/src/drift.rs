//! Representational drift: predictors with the readout frozen at a time
//! `t0` while the hidden weights keep drifting under the prior, their
//! long-time limits, temporal weight correlations, and the threshold
//! readout used to score drifted predictors.

use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::kernels::{deriv_two_time, mean_kernel, nngp_two_time};
use crate::ndk::{ndk, nngp_equilibrium_kernel};
use crate::prior::{decay_factor, prior_cov};
use crate::solver::{LearningProblem, Trajectory};
use nalgebra::{DMatrix, DVector};

/// Mean drifted predictor for test point `test_index` at time `t >= t0`,
/// with the learning signal cut at the grid node nearest `t0`.
///
/// Same quadrature as the live solve, so at `t = t0` the value is
/// bit-identical to the trajectory's test predictor.
pub fn drift_predictor(
    problem: &LearningProblem,
    traj: &Trajectory,
    grid: &TimeGrid,
    test_index: usize,
    t0: f64,
    t: f64,
) -> Result<f64> {
    if t < t0 {
        return Err(CoreError::Argument(format!(
            "drift time t = {t} precedes the freeze time t0 = {t0}"
        )));
    }
    let i0 = grid.nearest_index(t0);
    let p = problem.size();
    let mut acc = 0.0;
    for j in 1..=i0 {
        let w = grid.weight(j);
        let tj = traj.times[j];
        let mut dot = 0.0;
        for nu in 0..p {
            dot += ndk(
                problem.act,
                problem.depth,
                &problem.params,
                t,
                tj,
                &problem.test_inputs(test_index, nu)?,
            )? * (problem.targets[nu] - traj.f_train[j][nu]);
        }
        acc += w * dot;
    }
    Ok(acc)
}

/// Drifted predictors once the freeze time sits at NNGP equilibrium.
///
/// `f_drift(x, lag) = k^L(x, lag)^T (I T sigma^-2 + K_GP)^-1 Y` with
/// `k^L(x, lag)` the stationary two-time kernel row at the given lag.
/// The ridge solve is done once at construction.
pub struct EquilibriumDrift<'a> {
    problem: &'a LearningProblem,
    alpha: DVector<f64>,
}

impl<'a> EquilibriumDrift<'a> {
    pub fn new(problem: &'a LearningProblem) -> Result<Self> {
        let p = problem.size();
        let sigma2 = problem.params.sigma2;
        let mut kgp = DMatrix::<f64>::zeros(p, p);
        for mu in 0..p {
            for nu in 0..p {
                kgp[(mu, nu)] = nngp_equilibrium_kernel(
                    problem.act,
                    problem.depth,
                    sigma2,
                    &problem.pair_inputs(mu, nu)?,
                )?;
            }
        }
        let kgp = (&kgp + kgp.transpose()) * 0.5;
        let ridge = DMatrix::<f64>::identity(p, p) * problem.params.rate() + kgp;
        let alpha = ridge
            .lu()
            .solve(&problem.targets)
            .ok_or(CoreError::SingularKernel {
                min_eig: f64::NAN,
                threshold: 0.0,
            })?;
        Ok(Self { problem, alpha })
    }

    fn stationary(&self) -> crate::prior::DynamicsParams {
        self.problem.params.stationary()
    }

    /// Drifted predictor of test point `test_index` at lag `delta`.
    pub fn test_predictor(&self, test_index: usize, delta: f64) -> Result<f64> {
        let p = self.problem.size();
        let params = self.stationary();
        let mut acc = 0.0;
        for nu in 0..p {
            acc += nngp_two_time(
                self.problem.act,
                self.problem.depth,
                &params,
                delta,
                0.0,
                &self.problem.test_inputs(test_index, nu)?,
            )? * self.alpha[nu];
        }
        Ok(acc)
    }

    /// Drifted predictor of training point `mu` at lag `delta`, the quantity
    /// whose per-class distributions drift apart or together.
    pub fn train_predictor(&self, mu: usize, delta: f64) -> Result<f64> {
        let p = self.problem.size();
        let params = self.stationary();
        let mut acc = 0.0;
        for nu in 0..p {
            acc += nngp_two_time(
                self.problem.act,
                self.problem.depth,
                &params,
                delta,
                0.0,
                &self.problem.pair_inputs(mu, nu)?,
            )? * self.alpha[nu];
        }
        Ok(acc)
    }

    /// Infinite-lag limit `k_mean^T alpha` via the mean kernel.
    pub fn test_limit(&self, test_index: usize) -> Result<f64> {
        let p = self.problem.size();
        let mut acc = 0.0;
        for nu in 0..p {
            acc += mean_kernel(
                self.problem.act,
                self.problem.depth,
                self.problem.params.sigma2,
                &self.problem.test_inputs(test_index, nu)?,
            )? * self.alpha[nu];
        }
        Ok(acc)
    }

    /// Infinite-lag limit for training point `mu`.
    pub fn train_limit(&self, mu: usize) -> Result<f64> {
        let p = self.problem.size();
        let mut acc = 0.0;
        for nu in 0..p {
            acc += mean_kernel(
                self.problem.act,
                self.problem.depth,
                self.problem.params.sigma2,
                &self.problem.pair_inputs(mu, nu)?,
            )? * self.alpha[nu];
        }
        Ok(acc)
    }
}

/// Temporal correlation `c(x, t0, t) = <f(x, a_{t0}, W_t)>`: the predictor
/// formed from the readout at `t0` and the hidden weights at `t`.
///
/// Two branches depending on the ordering of `t` and `t0`; both times are
/// snapped to their nearest grid nodes and integrated with the solver's
/// quadrature. Equal times recover the live mean predictor.
pub fn temporal_correlation(
    problem: &LearningProblem,
    traj: &Trajectory,
    grid: &TimeGrid,
    test_index: usize,
    t0: f64,
    t: f64,
) -> Result<f64> {
    let i0 = grid.nearest_index(t0);
    let it = grid.nearest_index(t);
    let times = traj.times.as_slice();
    if i0 >= times.len() || it >= times.len() {
        return Err(CoreError::Argument("time outside the solved grid".into()));
    }
    let (t0, t) = (times[i0], times[it]);
    let p = problem.size();
    let params = &problem.params;
    let act = problem.act;
    let depth = problem.depth;
    let resid = |j: usize, nu: usize| problem.targets[nu] - traj.f_train[j][nu];

    if i0 == it {
        return Ok(traj.f_test[it][test_index]);
    }
    if i0 < it {
        // readout frozen earlier than the probed hidden weights
        let grow = (params.rate() * (t - t0)).exp();
        let mut first = 0.0;
        for j in 1..=i0 {
            let w = grid.weight(j);
            let mut dot = 0.0;
            for nu in 0..p {
                dot += ndk(act, depth, params, t, times[j], &problem.test_inputs(test_index, nu)?)?
                    * resid(j, nu);
            }
            first += w * dot;
        }
        let mut second = 0.0;
        for j in (i0 + 1)..=it {
            let w = grid.weight(j);
            let m = prior_cov(params, times[j], t0);
            let mut dot = 0.0;
            for nu in 0..p {
                let g = problem.test_inputs(test_index, nu)?;
                let kd_lm1 = if depth == 1 {
                    decay_factor(params, t, times[j]) * g.kxy
                } else {
                    ndk(act, depth - 1, params, t, times[j], &g)?
                };
                let kdot = deriv_two_time(act, depth, params, t, times[j], &g)?;
                dot += kd_lm1 * kdot * resid(j, nu);
            }
            second += w * m * dot;
        }
        Ok(grow * first + second)
    } else {
        // readout probed later than the hidden weights
        let decay = (-params.rate() * (t0 - t)).exp();
        let mut integral = 0.0;
        for j in (it + 1)..=i0 {
            let w = grid.weight(j);
            let mut dot = 0.0;
            for nu in 0..p {
                dot += nngp_two_time(act, depth, params, t, times[j], &problem.test_inputs(test_index, nu)?)?
                    * resid(j, nu);
            }
            integral += w * dot;
        }
        Ok(decay * (traj.f_test[it][test_index] + integral))
    }
}

/// One-dimensional threshold classifier on scalar predictor values.
///
/// Chooses the orientation and threshold minimizing training error; among
/// equally good thresholds prefers the one closest to the midpoint of the
/// class means. Returns training accuracy.
pub fn drift_readout_accuracy(values: &[f64], labels: &[f64]) -> Result<f64> {
    if values.len() != labels.len() || values.is_empty() {
        return Err(CoreError::Argument(
            "values and labels must be equal-length and nonempty".into(),
        ));
    }
    let pos: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&v, _)| v)
        .collect();
    let neg: Vec<f64> = values
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y <= 0.0)
        .map(|(&v, _)| v)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(CoreError::DegenerateInput(
            "threshold readout needs both classes present".into(),
        ));
    }
    let midpoint = 0.5
        * (pos.iter().sum::<f64>() / pos.len() as f64
            + neg.iter().sum::<f64>() / neg.len() as f64);

    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut candidates = vec![sorted[0] - 1.0];
    for w in sorted.windows(2) {
        candidates.push(0.5 * (w[0] + w[1]));
    }
    candidates.push(*sorted.last().unwrap() + 1.0);

    let n = values.len() as f64;
    let mut best_acc = 0.0;
    let mut best_dist = f64::INFINITY;
    for &th in &candidates {
        for sign in [1.0, -1.0] {
            let correct = values
                .iter()
                .zip(labels)
                .filter(|(&v, &y)| (sign * (v - th) > 0.0) == (y > 0.0))
                .count() as f64;
            let acc = correct / n;
            let dist = (th - midpoint).abs();
            if acc > best_acc + 1e-12 || (acc > best_acc - 1e-12 && dist < best_dist) {
                best_acc = acc;
                best_dist = dist;
            }
        }
    }
    Ok(best_acc)
}

/// Histogram of predictor values with fixed-width bins anchored at zero.
pub fn histogram(values: &[f64], bin_width: f64) -> Vec<(f64, usize)> {
    if values.is_empty() || !(bin_width > 0.0) {
        return Vec::new();
    }
    let index = |v: f64| (v / bin_width).floor() as i64;
    let (lo, hi) = values.iter().fold((i64::MAX, i64::MIN), |(lo, hi), &v| {
        (lo.min(index(v)), hi.max(index(v)))
    });
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(index(v) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (((lo + i as i64) as f64 + 0.5) * bin_width, c))
        .collect()
}
