//! Finite-width MLP trained with discrete Langevin dynamics, the
//! ground-truth oracle for the kernel theory.
//!
//! Update rule per step: `Theta <- Theta - lr grad E + sqrt(2 T lr) xi` with
//! `E = sum_mu (y_mu - f_mu)^2 / 2 + (T / 2 sigma^2) |Theta|^2` and exact
//! analytic backpropagation. One unit of continuous time equals `1/lr` steps.

use crate::error::{CoreError, Result};
use crate::kernels::Activation;
use crate::prior::DynamicsParams;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Predictor magnitude beyond which a replica is declared divergent.
pub const DIVERGENCE_GUARD: f64 = 1e3;

/// Which parts of the loss drive the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMode {
    /// Data term plus prior for all weights at all times.
    FullLearning,
    /// Full learning until `t0`; afterwards the readout is frozen and the
    /// hidden weights feel only the prior.
    FrozenReadoutDrift { t0: f64 },
    /// Prior-only dynamics for all weights from the start.
    PurePriorDrift,
}

/// Ensemble configuration.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Layer sizes `[N_0, N_1, ..., N_L]`.
    pub widths: Vec<usize>,
    pub act: Activation,
    pub params: DynamicsParams,
    /// Step size; also the time increment per step.
    pub lr: f64,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Times at which predictors are recorded (snapped to steps).
    pub checkpoints: Vec<f64>,
    pub mode: SimMode,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(CoreError::InvalidParameter(
                "widths must list at least input and one layer".into(),
            ));
        }
        if self.widths.iter().any(|&w| w == 0) {
            return Err(CoreError::InvalidParameter("zero layer width".into()));
        }
        if !(self.lr > 0.0) {
            return Err(CoreError::InvalidParameter(format!("lr must be > 0, got {}", self.lr)));
        }
        if self.n_seeds == 0 {
            return Err(CoreError::InvalidParameter("n_seeds must be >= 1".into()));
        }
        if self
            .checkpoints
            .iter()
            .any(|&t| t < 0.0 || t > self.params.t_max + 1e-9)
        {
            return Err(CoreError::InvalidParameter(
                "checkpoints must lie in [0, t_max]".into(),
            ));
        }
        Ok(())
    }
}

/// Weights of one finite-width network.
#[derive(Debug, Clone)]
pub struct MLPState {
    /// `W^l` of shape `N_l x N_{l-1}`, `l = 1..L`.
    pub hidden: Vec<DMatrix<f64>>,
    /// Readout vector of length `N_L`.
    pub readout: DVector<f64>,
}

impl MLPState {
    pub fn n_params(&self) -> usize {
        self.hidden.iter().map(|w| w.len()).sum::<usize>() + self.readout.len()
    }
}

/// I.i.d. `N(0, sigma0^2)` initialization, deterministic given the seed.
pub fn init_network(cfg: &SimConfig, seed: u64) -> Result<MLPState> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(init_from_rng(cfg, &mut rng))
}

fn init_from_rng(cfg: &SimConfig, rng: &mut ChaCha8Rng) -> MLPState {
    let s0 = cfg.params.sigma0_2.sqrt();
    let depth = cfg.widths.len() - 1;
    let hidden = (1..=depth)
        .map(|l| {
            DMatrix::from_fn(cfg.widths[l], cfg.widths[l - 1], |_, _| {
                s0 * rng.sample::<f64, _>(StandardNormal)
            })
        })
        .collect();
    let readout = DVector::from_fn(cfg.widths[depth], |_, _| {
        s0 * rng.sample::<f64, _>(StandardNormal)
    });
    MLPState { hidden, readout }
}

/// Forward pass: `f = a . x^L / sqrt(N_L)` with
/// `x^l = phi(W^l x^{l-1} / sqrt(N_{l-1}))`.
pub fn forward(state: &MLPState, act: Activation, x: &DVector<f64>) -> Result<f64> {
    if x.len() != state.hidden[0].ncols() {
        return Err(CoreError::Dimension {
            expected: state.hidden[0].ncols(),
            got: x.len(),
        });
    }
    let mut cur = x.clone();
    for w in &state.hidden {
        let scale = 1.0 / (w.ncols() as f64).sqrt();
        let pre = w * &cur * scale;
        cur = pre.map(|z| act.apply(z));
    }
    Ok(state.readout.dot(&cur) / (state.readout.len() as f64).sqrt())
}

/// Forward pass keeping pre-activations and activations per layer.
struct ForwardCache {
    pre: Vec<DVector<f64>>,
    post: Vec<DVector<f64>>,
    f: f64,
}

fn forward_cached(state: &MLPState, act: Activation, x: &DVector<f64>) -> ForwardCache {
    let mut pre = Vec::with_capacity(state.hidden.len());
    let mut post = Vec::with_capacity(state.hidden.len());
    let mut cur = x.clone();
    for w in &state.hidden {
        let scale = 1.0 / (w.ncols() as f64).sqrt();
        let z = w * &cur * scale;
        cur = z.map(|v| act.apply(v));
        pre.push(z);
        post.push(cur.clone());
    }
    let f = state.readout.dot(&cur) / (state.readout.len() as f64).sqrt();
    ForwardCache { pre, post, f }
}

/// Gradient of the predictor with respect to every parameter, as a
/// state-shaped structure.
fn predictor_gradient(
    state: &MLPState,
    act: Activation,
    x: &DVector<f64>,
    cache: &ForwardCache,
) -> MLPState {
    let depth = state.hidden.len();
    let nl = state.readout.len() as f64;
    let grad_readout = cache.post[depth - 1].clone() / nl.sqrt();
    // delta at the top hidden layer
    let mut delta = DVector::from_fn(state.readout.len(), |i, _| {
        state.readout[i] / nl.sqrt() * act.derivative(cache.pre[depth - 1][i])
    });
    let mut grad_hidden = vec![DMatrix::zeros(0, 0); depth];
    for l in (0..depth).rev() {
        let input = if l == 0 { x } else { &cache.post[l - 1] };
        let scale = 1.0 / (state.hidden[l].ncols() as f64).sqrt();
        grad_hidden[l] = &delta * input.transpose() * scale;
        if l > 0 {
            let back = state.hidden[l].transpose() * &delta * scale;
            delta = DVector::from_fn(back.len(), |i, _| back[i] * act.derivative(cache.pre[l - 1][i]));
        }
    }
    MLPState {
        hidden: grad_hidden,
        readout: grad_readout,
    }
}

/// Training data for the simulator: raw input vectors and targets.
#[derive(Debug, Clone)]
pub struct SimProblem {
    pub train_inputs: Vec<DVector<f64>>,
    pub targets: Vec<f64>,
    pub test_inputs: Vec<DVector<f64>>,
}

/// One full-batch Langevin step. `learn` enables the data term; `freeze_readout`
/// pins the readout vector.
fn langevin_step(
    state: &mut MLPState,
    problem: &SimProblem,
    cfg: &SimConfig,
    learn: bool,
    freeze_readout: bool,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let lr = cfg.lr;
    let prior_coeff = cfg.params.temperature / cfg.params.sigma2;
    let noise = (2.0 * cfg.params.temperature * lr).sqrt();
    let mut max_f = 0.0f64;

    // accumulate the data-term gradient
    let mut grad: Option<MLPState> = None;
    if learn {
        for (x, &y) in problem.train_inputs.iter().zip(&problem.targets) {
            let cache = forward_cached(state, cfg.act, x);
            max_f = max_f.max(cache.f.abs());
            let g = predictor_gradient(state, cfg.act, x, &cache);
            let coeff = cache.f - y;
            match &mut grad {
                None => {
                    let mut g = g;
                    for w in &mut g.hidden {
                        *w *= coeff;
                    }
                    g.readout *= coeff;
                    grad = Some(g);
                }
                Some(acc) => {
                    for (aw, gw) in acc.hidden.iter_mut().zip(&g.hidden) {
                        aw.iter_mut().zip(gw.iter()).for_each(|(a, g)| *a += coeff * g);
                    }
                    acc.readout.axpy(coeff, &g.readout, 1.0);
                }
            }
        }
    }

    for (l, w) in state.hidden.iter_mut().enumerate() {
        for (i, v) in w.iter_mut().enumerate() {
            let mut dv = -lr * prior_coeff * *v + noise * rng.sample::<f64, _>(StandardNormal);
            if let Some(g) = &grad {
                dv -= lr * g.hidden[l][i];
            }
            *v += dv;
        }
    }
    if freeze_readout {
        // readout noise stream is still consumed so frozen and live runs
        // stay comparable draw-for-draw
        for _ in 0..state.readout.len() {
            let _: f64 = rng.sample(StandardNormal);
        }
    } else {
        for (i, v) in state.readout.iter_mut().enumerate() {
            let mut dv = -lr * prior_coeff * *v + noise * rng.sample::<f64, _>(StandardNormal);
            if let Some(g) = &grad {
                dv -= lr * g.readout[i];
            }
            *v += dv;
        }
    }
    Ok(max_f)
}

/// Ensemble means and standard errors of the predictors at each checkpoint.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub checkpoint_times: Vec<f64>,
    /// `[checkpoint][train point]`
    pub train_mean: Vec<Vec<f64>>,
    pub train_stderr: Vec<Vec<f64>>,
    /// `[checkpoint][test point]`
    pub test_mean: Vec<Vec<f64>>,
    pub test_stderr: Vec<Vec<f64>>,
}

/// Run `n_seeds` independent replicas (seed = base_seed + index) and reduce
/// in ascending seed order; the result is independent of the worker count.
pub fn run_ensemble(cfg: &SimConfig, problem: &SimProblem) -> Result<EnsembleResult> {
    cfg.validate()?;
    if problem.train_inputs.len() != problem.targets.len() {
        return Err(CoreError::Dimension {
            expected: problem.train_inputs.len(),
            got: problem.targets.len(),
        });
    }
    let n_steps = (cfg.params.t_max / cfg.lr).round() as usize;
    let mut checkpoint_steps: Vec<usize> = cfg
        .checkpoints
        .iter()
        .map(|&t| ((t / cfg.lr).round() as usize).min(n_steps))
        .collect();
    checkpoint_steps.sort_unstable();
    checkpoint_steps.dedup();
    let checkpoint_times: Vec<f64> = checkpoint_steps.iter().map(|&s| s as f64 * cfg.lr).collect();

    let records: Vec<Result<ReplicaRecord>> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|r| run_replica(cfg, problem, cfg.base_seed + r as u64, &checkpoint_steps))
        .collect();

    let n_c = checkpoint_steps.len();
    let n_train = problem.train_inputs.len();
    let n_test = problem.test_inputs.len();
    let mut train_sum = vec![vec![0.0; n_train]; n_c];
    let mut train_sq = vec![vec![0.0; n_train]; n_c];
    let mut test_sum = vec![vec![0.0; n_test]; n_c];
    let mut test_sq = vec![vec![0.0; n_test]; n_c];
    for rec in records {
        let rec = rec?;
        for c in 0..n_c {
            for (s, (sum, sq)) in rec.train[c]
                .iter()
                .zip(train_sum[c].iter_mut().zip(train_sq[c].iter_mut()))
            {
                *sum += s;
                *sq += s * s;
            }
            for (s, (sum, sq)) in rec.test[c]
                .iter()
                .zip(test_sum[c].iter_mut().zip(test_sq[c].iter_mut()))
            {
                *sum += s;
                *sq += s * s;
            }
        }
    }
    let n = cfg.n_seeds as f64;
    let stats = |sum: Vec<Vec<f64>>, sq: Vec<Vec<f64>>| {
        let mean: Vec<Vec<f64>> = sum.iter().map(|row| row.iter().map(|s| s / n).collect()).collect();
        let stderr = sq
            .iter()
            .zip(&mean)
            .map(|(row, m)| {
                row.iter()
                    .zip(m)
                    .map(|(sq, m)| (((sq / n - m * m).max(0.0)) / n.max(2.0)).sqrt())
                    .collect()
            })
            .collect();
        (mean, stderr)
    };
    let (train_mean, train_stderr) = stats(train_sum, train_sq);
    let (test_mean, test_stderr) = stats(test_sum, test_sq);
    Ok(EnsembleResult {
        checkpoint_times,
        train_mean,
        train_stderr,
        test_mean,
        test_stderr,
    })
}

struct ReplicaRecord {
    /// `[checkpoint][point]`
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
}

fn run_replica(
    cfg: &SimConfig,
    problem: &SimProblem,
    seed: u64,
    checkpoint_steps: &[usize],
) -> Result<ReplicaRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = init_from_rng(cfg, &mut rng);
    let n_steps = (cfg.params.t_max / cfg.lr).round() as usize;
    let mut train = Vec::with_capacity(checkpoint_steps.len());
    let mut test = Vec::with_capacity(checkpoint_steps.len());
    let mut next_cp = 0usize;

    let record = |state: &MLPState, train: &mut Vec<Vec<f64>>, test: &mut Vec<Vec<f64>>| -> Result<()> {
        let tr: Result<Vec<f64>> = problem
            .train_inputs
            .iter()
            .map(|x| forward(state, cfg.act, x))
            .collect();
        let te: Result<Vec<f64>> = problem
            .test_inputs
            .iter()
            .map(|x| forward(state, cfg.act, x))
            .collect();
        train.push(tr?);
        test.push(te?);
        Ok(())
    };

    for step in 0..=n_steps {
        while next_cp < checkpoint_steps.len() && checkpoint_steps[next_cp] == step {
            record(&state, &mut train, &mut test)?;
            next_cp += 1;
        }
        if step == n_steps {
            break;
        }
        let t = step as f64 * cfg.lr;
        let (learn, freeze) = match cfg.mode {
            SimMode::FullLearning => (true, false),
            SimMode::PurePriorDrift => (false, false),
            SimMode::FrozenReadoutDrift { t0 } => {
                if t < t0 {
                    (true, false)
                } else {
                    (false, true)
                }
            }
        };
        let max_f = langevin_step(&mut state, problem, cfg, learn, freeze, &mut rng)?;
        if !max_f.is_finite() || max_f > DIVERGENCE_GUARD {
            return Err(CoreError::Divergence {
                seed,
                step,
                value: max_f,
            });
        }
    }
    Ok(ReplicaRecord { train, test })
}

/// Gram matrix of full parameter gradients `grad f(x_i) . grad f(x_j)`.
pub fn empirical_ntk(state: &MLPState, act: Activation, inputs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let grads: Vec<MLPState> = inputs
        .iter()
        .map(|x| {
            if x.len() != state.hidden[0].ncols() {
                return Err(CoreError::Dimension {
                    expected: state.hidden[0].ncols(),
                    got: x.len(),
                });
            }
            let cache = forward_cached(state, act, x);
            Ok(predictor_gradient(state, act, x, &cache))
        })
        .collect::<Result<_>>()?;
    let n = inputs.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut dot = grads[i].readout.dot(&grads[j].readout);
            for (a, b) in grads[i].hidden.iter().zip(&grads[j].hidden) {
                dot += a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>();
            }
            gram[(i, j)] = dot;
            gram[(j, i)] = dot;
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(widths: &[usize], act: Activation, temperature: f64, sigma0_2: f64, t_max: f64) -> SimConfig {
        SimConfig {
            widths: widths.to_vec(),
            act,
            params: DynamicsParams::new(temperature, 1.0, sigma0_2, 0.01, t_max).unwrap(),
            lr: 0.01,
            n_seeds: 1,
            base_seed: 0,
            checkpoints: vec![t_max],
            mode: SimMode::FullLearning,
        }
    }

    fn rand_input(n0: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n0, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn init_deterministic_and_scaled() {
        let c = cfg(&[50, 400], Activation::Relu, 1e-3, 2.0, 1.0);
        let a = init_network(&c, 7).unwrap();
        let b = init_network(&c, 7).unwrap();
        assert_eq!(a.hidden[0], b.hidden[0]);
        assert_eq!(a.readout, b.readout);
        let n = a.hidden[0].len() as f64;
        let var = a.hidden[0].iter().map(|v| v * v).sum::<f64>() / n;
        assert_relative_eq!(var, 2.0, max_relative = 4.0 * (2.0 / n).sqrt() * 2.0);
    }

    #[test]
    fn forward_linear_is_matrix_chain() {
        let c = cfg(&[8, 5, 4], Activation::Linear, 1e-3, 1.0, 1.0);
        let s = init_network(&c, 3).unwrap();
        let x = rand_input(8, 11);
        let direct = (&s.hidden[1] * (&s.hidden[0] * &x / (8f64).sqrt()) / (5f64).sqrt())
            .dot(&s.readout)
            / 2.0;
        assert_relative_eq!(forward(&s, Activation::Linear, &x).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn zero_initialization_gives_zero_output() {
        let c = cfg(&[6, 4], Activation::Relu, 1e-3, 1.0, 1.0);
        let mut s = init_network(&c, 0).unwrap();
        s.readout.fill(0.0);
        assert_eq!(forward(&s, Activation::Relu, &rand_input(6, 1)).unwrap(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        for act in [Activation::Linear, Activation::Erf, Activation::Relu] {
            let c = cfg(&[6, 5, 4], act, 1e-3, 1.0, 1.0);
            let s = init_network(&c, 5).unwrap();
            let x = rand_input(6, 21);
            let cache = forward_cached(&s, act, &x);
            if act == Activation::Relu {
                // keep away from the kink where the subgradient convention bites
                if cache.pre.iter().any(|z| z.iter().any(|v| v.abs() < 1e-3)) {
                    continue;
                }
            }
            let grad = predictor_gradient(&s, act, &x, &cache);
            let eps = 1e-5;
            // spot check a handful of coordinates in each block
            for (l, idx) in [(0usize, 3usize), (0, 17), (1, 2), (1, 11)] {
                let mut sp = s.clone();
                sp.hidden[l][idx] += eps;
                let mut sm = s.clone();
                sm.hidden[l][idx] -= eps;
                let fd = (forward(&sp, act, &x).unwrap() - forward(&sm, act, &x).unwrap()) / (2.0 * eps);
                assert_relative_eq!(grad.hidden[l][idx], fd, max_relative = 1e-6, epsilon = 1e-10);
            }
            let mut sp = s.clone();
            sp.readout[1] += eps;
            let mut sm = s.clone();
            sm.readout[1] -= eps;
            let fd = (forward(&sp, act, &x).unwrap() - forward(&sm, act, &x).unwrap()) / (2.0 * eps);
            assert_relative_eq!(grad.readout[1], fd, max_relative = 1e-6, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_temperature_descent_reduces_loss() {
        let mut c = cfg(&[4, 30], Activation::Linear, 0.0, 1.0, 2.0);
        c.mode = SimMode::FullLearning;
        let x = rand_input(4, 2).normalize() * 2.0;
        let problem = SimProblem {
            train_inputs: vec![x.clone()],
            targets: vec![1.0],
            test_inputs: vec![],
        };
        let mut state = init_network(&c, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let loss = |s: &MLPState| {
            let f = forward(s, Activation::Linear, &x).unwrap();
            0.5 * (1.0 - f) * (1.0 - f)
        };
        let mut prev = loss(&state);
        for _ in 0..50 {
            langevin_step(&mut state, &problem, &c, true, false, &mut rng).unwrap();
            let cur = loss(&state);
            assert!(cur <= prev + 1e-12, "loss increased: {prev} -> {cur}");
            prev = cur;
        }
    }

    #[test]
    fn pure_prior_reaches_stationary_variance() {
        // OU per weight: stationary variance sigma^2
        let mut c = cfg(&[4, 60], Activation::Linear, 0.5, 1.0, 30.0);
        c.mode = SimMode::PurePriorDrift;
        c.params = DynamicsParams::new(0.5, 1.0, 4.0, 0.01, 30.0).unwrap();
        let problem = SimProblem {
            train_inputs: vec![rand_input(4, 3)],
            targets: vec![1.0],
            test_inputs: vec![],
        };
        let mut state = init_network(&c, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n_steps = (30.0 / c.lr) as usize;
        let mut acc = 0.0;
        let mut count = 0usize;
        for step in 0..n_steps {
            langevin_step(&mut state, &problem, &c, false, false, &mut rng).unwrap();
            // skip the relaxation from sigma0^2 = 4, then subsample
            if step > n_steps / 2 && step % 20 == 0 {
                acc += state.hidden[0].iter().map(|v| v * v).sum::<f64>();
                count += state.hidden[0].len();
            }
        }
        let var = acc / count as f64;
        assert_relative_eq!(var, 1.0, max_relative = 0.15);
    }

    #[test]
    fn pure_prior_mean_predictor_decays_at_double_rate() {
        // linear f = a . W x / sqrt(N N0): both factors relax at T/sigma^2,
        // so the ensemble mean decays at twice that rate
        let temperature = 0.2;
        let c = SimConfig {
            widths: vec![10, 80],
            act: Activation::Linear,
            params: DynamicsParams::new(temperature, 1.0, 1.0, 0.01, 8.0).unwrap(),
            lr: 0.01,
            n_seeds: 400,
            base_seed: 100,
            checkpoints: vec![0.0, 2.0, 4.0],
            mode: SimMode::PurePriorDrift,
        };
        let x = rand_input(10, 4).normalize() * (10f64).sqrt();
        // bias the ensemble: same init for readout sign via conditioning is
        // awkward; instead measure the autocorrelation through a fixed probe
        // network evolved from a common deterministic state
        let problem = SimProblem {
            train_inputs: vec![],
            targets: vec![],
            test_inputs: vec![x.clone()],
        };
        // common init: replicas share base state by construction of seed? No:
        // measure <f(t) f(0)> instead, which decays at the same double rate.
        let mut corr = vec![0.0; 3];
        for r in 0..c.n_seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(c.base_seed + r as u64);
            let mut state = init_from_rng(&c, &mut rng);
            let f0 = forward(&state, c.act, &x).unwrap();
            let steps_per = (2.0 / c.lr) as usize;
            let mut fs = vec![f0];
            for _ in 0..2 {
                for _ in 0..steps_per {
                    langevin_step(&mut state, &problem, &c, false, false, &mut rng).unwrap();
                }
                fs.push(forward(&state, c.act, &x).unwrap());
            }
            for (i, f) in fs.iter().enumerate() {
                corr[i] += f0 * f;
            }
        }
        let rate = (corr[0] / corr[2]).ln() / 4.0;
        assert_relative_eq!(rate, 2.0 * temperature, max_relative = 0.15);
    }

    #[test]
    fn empirical_ntk_diagonal_dominates() {
        let c = cfg(&[10, 50], Activation::Relu, 1e-3, 1.0, 1.0);
        let s = init_network(&c, 6).unwrap();
        let inputs = vec![rand_input(10, 1), rand_input(10, 2)];
        let g = empirical_ntk(&s, Activation::Relu, &inputs).unwrap();
        assert!(g[(0, 0)] > 0.0 && g[(1, 1)] > 0.0);
        assert!(g[(0, 1)] * g[(0, 1)] <= g[(0, 0)] * g[(1, 1)] * (1.0 + 1e-12));
    }

    #[test]
    fn ensemble_deterministic() {
        let c = SimConfig {
            widths: vec![6, 20],
            act: Activation::Relu,
            params: DynamicsParams::new(1e-2, 1.0, 1.0, 0.01, 0.5).unwrap(),
            lr: 0.01,
            n_seeds: 4,
            base_seed: 5,
            checkpoints: vec![0.25, 0.5],
            mode: SimMode::FullLearning,
        };
        let problem = SimProblem {
            train_inputs: vec![rand_input(6, 1), rand_input(6, 2)],
            targets: vec![1.0, -1.0],
            test_inputs: vec![rand_input(6, 3)],
        };
        let a = run_ensemble(&c, &problem).unwrap();
        let b = run_ensemble(&c, &problem).unwrap();
        assert_eq!(a.train_mean, b.train_mean);
        assert_eq!(a.test_mean, b.test_mean);
    }
}
