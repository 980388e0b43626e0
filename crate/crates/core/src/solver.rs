//! Mean-predictor dynamics: the Volterra solve on a time grid, closed-form
//! NTK-phase and NNGP-equilibrium references, and early-stopping extraction.
//!
//! The continuous equation is
//! `f_train(t) = int_0^t K^d(t, t') (Y - f_train(t')) dt'`
//! and the test predictor is the same integral with the test kernel row. The
//! discretization is an implicit right-endpoint rectangle rule: the endpoint
//! contribution at `t' = t` enters through a small linear solve, which keeps
//! the scheme unconditionally stable on coarse diffusive-phase steps while
//! remaining first-order accurate.

use crate::error::{CoreError, Result};
use crate::grid::TimeGrid;
use crate::kernels::{Activation, KernelInputs};
use crate::ndk::{ndk, nngp_equilibrium_kernel, ntk};
use crate::prior::DynamicsParams;
use nalgebra::{DMatrix, DVector};

/// One held-out input: its Gram row against the training set, self Gram, and
/// target.
#[derive(Debug, Clone)]
pub struct TestPoint {
    pub row: DVector<f64>,
    pub self_gram: f64,
    pub target: f64,
}

/// A training task in kernel-input form.
#[derive(Debug, Clone)]
pub struct LearningProblem {
    pub train_gram: DMatrix<f64>,
    pub tests: Vec<TestPoint>,
    pub targets: DVector<f64>,
    pub act: Activation,
    pub depth: u32,
    pub params: DynamicsParams,
}

impl LearningProblem {
    pub fn new(
        train_gram: DMatrix<f64>,
        tests: Vec<TestPoint>,
        targets: DVector<f64>,
        act: Activation,
        depth: u32,
        params: DynamicsParams,
    ) -> Result<Self> {
        let p = train_gram.nrows();
        if train_gram.ncols() != p {
            return Err(CoreError::Dimension {
                expected: p,
                got: train_gram.ncols(),
            });
        }
        if targets.len() != p {
            return Err(CoreError::Dimension {
                expected: p,
                got: targets.len(),
            });
        }
        for (mu, nu) in (0..p).flat_map(|a| (0..p).map(move |b| (a, b))) {
            let d = (train_gram[(mu, nu)] - train_gram[(nu, mu)]).abs();
            if d > 1e-12 {
                return Err(CoreError::InvalidParameter(format!(
                    "train Gram not symmetric at ({mu}, {nu}): asymmetry {d}"
                )));
            }
        }
        for t in &tests {
            if t.row.len() != p {
                return Err(CoreError::Dimension {
                    expected: p,
                    got: t.row.len(),
                });
            }
        }
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(CoreError::InvalidParameter("non-finite target".into()));
        }
        Ok(Self {
            train_gram,
            tests,
            targets,
            act,
            depth,
            params,
        })
    }

    pub fn size(&self) -> usize {
        self.train_gram.nrows()
    }

    /// Gram scalars for the training pair `(mu, nu)`.
    pub fn pair_inputs(&self, mu: usize, nu: usize) -> Result<KernelInputs> {
        KernelInputs::new(
            self.train_gram[(mu, mu)],
            self.train_gram[(mu, nu)],
            self.train_gram[(nu, nu)],
        )
    }

    /// Gram scalars for (test point `k`, training point `nu`).
    pub fn test_inputs(&self, k: usize, nu: usize) -> Result<KernelInputs> {
        KernelInputs::new(
            self.tests[k].self_gram,
            self.tests[k].row[nu],
            self.train_gram[(nu, nu)],
        )
    }
}

/// Time course of the mean predictor.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Per time node, the P training predictors.
    pub f_train: Vec<DVector<f64>>,
    /// Per time node, one value per test point.
    pub f_test: Vec<Vec<f64>>,
    /// First grid time with `max_mu |Y - f_train| <= 10 T`, if reached.
    pub ntk_crossover: Option<f64>,
}

/// Solve the mean-predictor integral equations on `grid`.
pub fn solve_mean_predictor(problem: &LearningProblem, grid: &TimeGrid) -> Result<Trajectory> {
    let p = problem.size();
    let n = grid.len();
    let times = grid.times();
    let y = &problem.targets;
    let identity = DMatrix::<f64>::identity(p, p);

    let mut residuals: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut f_train: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut f_test: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut crossover = None;

    f_train.push(DVector::zeros(p));
    f_test.push(vec![0.0; problem.tests.len()]);
    residuals.push(y.clone());

    let mut kd = DMatrix::<f64>::zeros(p, p);
    for i in 1..n {
        let ti = times[i];
        let mut s = DVector::<f64>::zeros(p);
        for j in 1..i {
            let w = grid.weight(j);
            kernel_block(problem, ti, times[j], &mut kd)?;
            s.axpy(w, &(&kd * &residuals[j]), 1.0);
        }
        kernel_block(problem, ti, ti, &mut kd)?;
        let a = grid.weight(i) * &kd;
        let rhs = &s + &a * y;
        let fi = (identity.clone() + a)
            .lu()
            .solve(&rhs)
            .ok_or(CoreError::SingularKernel {
                min_eig: f64::NAN,
                threshold: 0.0,
            })?;
        if fi.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite { index: i, time: ti });
        }
        let ri = y - &fi;
        if crossover.is_none() && ri.amax() <= 10.0 * problem.params.temperature {
            crossover = Some(ti);
        }

        let mut ft = vec![0.0; problem.tests.len()];
        residuals.push(ri);
        for (k, val) in ft.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 1..=i {
                let w = grid.weight(j);
                let mut dot = 0.0;
                for nu in 0..p {
                    dot += ndk(
                        problem.act,
                        problem.depth,
                        &problem.params,
                        ti,
                        times[j],
                        &problem.test_inputs(k, nu)?,
                    )? * residuals[j][nu];
                }
                acc += w * dot;
            }
            *val = acc;
        }
        f_train.push(fi);
        f_test.push(ft);
    }

    Ok(Trajectory {
        times: times.to_vec(),
        f_train,
        f_test,
        ntk_crossover: crossover,
    })
}

fn kernel_block(problem: &LearningProblem, t: f64, t_prime: f64, out: &mut DMatrix<f64>) -> Result<()> {
    let p = problem.size();
    for mu in 0..p {
        for nu in 0..p {
            out[(mu, nu)] = ndk(
                problem.act,
                problem.depth,
                &problem.params,
                t,
                t_prime,
                &problem.pair_inputs(mu, nu)?,
            )?;
        }
    }
    Ok(())
}

/// Closed-form NTK-phase reference `f_train(t) = (I - exp(-K_NTK t)) Y`,
/// evaluated through one symmetric eigendecomposition.
pub struct NtkReference {
    eigvals: DVector<f64>,
    eigvecs: DMatrix<f64>,
    /// eigenbasis coordinates of Y
    vty: DVector<f64>,
    /// per test point, the NTK row against the training set
    test_rows: Vec<DVector<f64>>,
    targets: DVector<f64>,
}

impl NtkReference {
    pub fn new(problem: &LearningProblem) -> Result<Self> {
        let p = problem.size();
        let sigma0_2 = problem.params.sigma0_2;
        let mut k = DMatrix::<f64>::zeros(p, p);
        for mu in 0..p {
            for nu in 0..p {
                k[(mu, nu)] = ntk(problem.act, problem.depth, sigma0_2, &problem.pair_inputs(mu, nu)?)?;
            }
        }
        // enforce exact symmetry before eigendecomposition
        let k = (&k + k.transpose()) * 0.5;
        let eig = k.symmetric_eigen();
        let max_eig = eig.eigenvalues.amax();
        let min_eig = eig.eigenvalues.min();
        if min_eig < 1e-12 * max_eig {
            return Err(CoreError::SingularKernel {
                min_eig,
                threshold: 1e-12 * max_eig,
            });
        }
        let vty = eig.eigenvectors.transpose() * &problem.targets;
        let mut test_rows = Vec::with_capacity(problem.tests.len());
        for kt in 0..problem.tests.len() {
            let mut row = DVector::zeros(p);
            for nu in 0..p {
                row[nu] = ntk(problem.act, problem.depth, sigma0_2, &problem.test_inputs(kt, nu)?)?;
            }
            test_rows.push(row);
        }
        Ok(Self {
            eigvals: eig.eigenvalues,
            eigvecs: eig.eigenvectors,
            vty,
            test_rows,
            targets: problem.targets.clone(),
        })
    }

    /// `(f_train, f_test)` at time `t`.
    pub fn eval(&self, t: f64) -> (DVector<f64>, Vec<f64>) {
        let p = self.eigvals.len();
        let mut train_coeff = DVector::zeros(p);
        let mut test_coeff = DVector::zeros(p);
        for i in 0..p {
            let lam = self.eigvals[i];
            let decay = 1.0 - (-lam * t).exp();
            train_coeff[i] = decay * self.vty[i];
            test_coeff[i] = decay / lam * self.vty[i];
        }
        let f_train = &self.eigvecs * train_coeff;
        let alpha = &self.eigvecs * test_coeff;
        let f_test = self.test_rows.iter().map(|row| row.dot(&alpha)).collect();
        (f_train, f_test)
    }

    /// First time at which `max_mu |Y - f_train(t)| <= 10 T`.
    pub fn crossover_time(&self, temperature: f64) -> f64 {
        let target = 10.0 * temperature;
        let residual = |t: f64| {
            let (f, _) = self.eval(t);
            (&self.targets - f).amax()
        };
        let lam_min = self.eigvals.min();
        let mut hi = (self.targets.amax() * (self.eigvals.len() as f64).sqrt() / target)
            .max(2.0)
            .ln()
            / lam_min;
        if residual(hi) > target {
            // pathological spectra; expand until crossed
            while residual(hi) > target && hi < 1e12 {
                hi *= 2.0;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// `(f_train, f_test)` of the NNGP equilibrium: kernel ridge regression with
/// ridge `T sigma^-2`.
pub fn nngp_equilibrium_predictor(problem: &LearningProblem) -> Result<(DVector<f64>, Vec<f64>)> {
    let p = problem.size();
    let sigma2 = problem.params.sigma2;
    let mut kgp = DMatrix::<f64>::zeros(p, p);
    for mu in 0..p {
        for nu in 0..p {
            kgp[(mu, nu)] =
                nngp_equilibrium_kernel(problem.act, problem.depth, sigma2, &problem.pair_inputs(mu, nu)?)?;
        }
    }
    let kgp = (&kgp + kgp.transpose()) * 0.5;
    let ridge = DMatrix::<f64>::identity(p, p) * problem.params.rate() + &kgp;
    let alpha = ridge
        .lu()
        .solve(&problem.targets)
        .ok_or(CoreError::SingularKernel {
            min_eig: f64::NAN,
            threshold: 0.0,
        })?;
    let f_train = &kgp * &alpha;
    let mut f_test = Vec::with_capacity(problem.tests.len());
    for kt in 0..problem.tests.len() {
        let mut acc = 0.0;
        for nu in 0..p {
            acc += nngp_equilibrium_kernel(problem.act, problem.depth, sigma2, &problem.test_inputs(kt, nu)?)?
                * alpha[nu];
        }
        f_test.push(acc);
    }
    Ok((f_train, f_test))
}

/// Scalar trajectory of the orthonormal synthetic task.
#[derive(Debug, Clone)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub f_train: Vec<f64>,
    pub f_test: Vec<f64>,
}

/// Solve the synthetic task's scalar reduction: orthonormal training inputs,
/// balanced labels, one test point overlapping training point 1 by `o_test`.
/// The trajectory is independent of P and the input dimension.
pub fn solve_synthetic_reduced(
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
    o_test: f64,
    grid: &TimeGrid,
) -> Result<ReducedTrajectory> {
    if !(o_test > 0.0 && o_test < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "o_test must lie in (0, 1), got {o_test}"
        )));
    }
    let g_diag = KernelInputs::new(1.0, 1.0, 1.0)?;
    let g_off = KernelInputs::new(1.0, 0.0, 1.0)?;
    let g_test = KernelInputs::new(1.0, o_test, 1.0)?;
    let keff = |t: f64, tp: f64| -> Result<f64> {
        Ok(ndk(act, depth, params, t, tp, &g_diag)? - ndk(act, depth, params, t, tp, &g_off)?)
    };
    let keff_test = |t: f64, tp: f64| -> Result<f64> {
        Ok(ndk(act, depth, params, t, tp, &g_test)? - ndk(act, depth, params, t, tp, &g_off)?)
    };

    let times = grid.times();
    let n = grid.len();
    let mut f_train = Vec::with_capacity(n);
    let mut f_test = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    f_train.push(0.0);
    f_test.push(0.0);
    residual.push(1.0);

    for i in 1..n {
        let ti = times[i];
        let mut s = 0.0;
        for j in 1..i {
            s += grid.weight(j) * keff(ti, times[j])? * residual[j];
        }
        let a = grid.weight(i) * keff(ti, ti)?;
        let fi = (s + a) / (1.0 + a);
        if !fi.is_finite() {
            return Err(CoreError::NonFinite { index: i, time: ti });
        }
        residual.push(1.0 - fi);
        let mut ft = 0.0;
        for j in 1..=i {
            ft += grid.weight(j) * keff_test(ti, times[j])? * residual[j];
        }
        f_train.push(fi);
        f_test.push(ft);
    }
    Ok(ReducedTrajectory {
        times: times.to_vec(),
        f_train,
        f_test,
    })
}

/// Early-stopping diagnostics of a test-error curve.
#[derive(Debug, Clone, Copy)]
pub struct EarlyStopping {
    /// First time at which the mean squared test error is minimal.
    pub t_star: f64,
    /// `(t_max - t_star) * T`; zero means the optimum is the endpoint.
    pub delta_t_scaled: f64,
    pub mse_at_t_star: f64,
    pub mse_at_t_max: f64,
}

/// Locate the optimal stopping time on a solved trajectory.
///
/// `f_test[i]` holds the per-test-point predictors at `times[i]`.
pub fn find_early_stopping(
    times: &[f64],
    f_test: &[Vec<f64>],
    test_targets: &[f64],
    temperature: f64,
) -> Result<EarlyStopping> {
    if times.len() != f_test.len() || times.is_empty() {
        return Err(CoreError::Argument(
            "times and f_test must be equal-length and nonempty".into(),
        ));
    }
    let mse = |vals: &Vec<f64>| -> f64 {
        vals.iter()
            .zip(test_targets)
            .map(|(f, y)| (f - y) * (f - y))
            .sum::<f64>()
            / test_targets.len() as f64
    };
    let mut best = (0usize, f64::INFINITY);
    for (i, vals) in f_test.iter().enumerate() {
        let e = mse(vals);
        if e < best.1 {
            best = (i, e);
        }
    }
    let t_star = times[best.0];
    let t_max = *times.last().unwrap();
    Ok(EarlyStopping {
        t_star,
        delta_t_scaled: (t_max - t_star) * temperature,
        mse_at_t_star: best.1,
        mse_at_t_max: mse(f_test.last().unwrap()),
    })
}

/// Per-problem comparison of the two equilibria.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriaRow {
    pub ntk_test_mse: f64,
    pub nngp_test_mse: f64,
}

/// NTK (t -> infinity of the closed form) vs NNGP equilibrium test error.
pub fn equilibria_compare(problems: &[LearningProblem]) -> Result<Vec<EquilibriaRow>> {
    problems
        .iter()
        .map(|problem| {
            let ntk_ref = NtkReference::new(problem)?;
            // t -> infinity limit: decay factors -> 1
            let mut alpha_coeff = DVector::zeros(problem.size());
            for i in 0..problem.size() {
                alpha_coeff[i] = ntk_ref.vty[i] / ntk_ref.eigvals[i];
            }
            let alpha = &ntk_ref.eigvecs * alpha_coeff;
            let mse = |pred: &dyn Fn(usize) -> f64| {
                problem
                    .tests
                    .iter()
                    .enumerate()
                    .map(|(k, tp)| {
                        let d = pred(k) - tp.target;
                        d * d
                    })
                    .sum::<f64>()
                    / problem.tests.len().max(1) as f64
            };
            let ntk_mse = mse(&|k| ntk_ref.test_rows[k].dot(&alpha));
            let (_, nngp_test) = nngp_equilibrium_predictor(problem)?;
            let nngp_mse = mse(&|k| nngp_test[k]);
            Ok(EquilibriaRow {
                ntk_test_mse: ntk_mse,
                nngp_test_mse: nngp_mse,
            })
        })
        .collect()
}

/// The P-by-P orthonormal synthetic problem with balanced labels and one
/// test point overlapping training point 1.
pub fn synthetic_learning_problem(
    p: usize,
    o_test: f64,
    act: Activation,
    depth: u32,
    params: &DynamicsParams,
) -> Result<LearningProblem> {
    if p < 2 || p % 2 != 0 {
        return Err(CoreError::InvalidParameter(format!(
            "P must be even and >= 2, got {p}"
        )));
    }
    if !(o_test > 0.0 && o_test <= 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "o_test must lie in (0, 1], got {o_test}"
        )));
    }
    let gram = DMatrix::<f64>::identity(p, p);
    let targets = DVector::from_fn(p, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
    let mut row = DVector::zeros(p);
    row[0] = o_test;
    let tests = vec![TestPoint {
        row,
        self_gram: 1.0,
        target: 1.0,
    }];
    LearningProblem::new(gram, tests, targets, act, depth, *params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn relu_problem(temperature: f64, sigma0_2: f64, dt: f64, t_max: f64) -> LearningProblem {
        let params = DynamicsParams::new(temperature, 1.0, sigma0_2, dt, t_max).unwrap();
        synthetic_learning_problem(2, 0.75, Activation::Relu, 1, &params).unwrap()
    }

    #[test]
    fn trajectory_starts_at_zero() {
        let problem = relu_problem(1e-3, 1.0, 0.1, 1.0);
        let grid = TimeGrid::from_params(&problem.params).unwrap();
        let traj = solve_mean_predictor(&problem, &grid).unwrap();
        assert_eq!(traj.f_train[0], DVector::zeros(2));
        assert_eq!(traj.f_test[0], vec![0.0]);
    }

    #[test]
    fn reduced_matches_explicit_small_instance() {
        for p in [2usize, 4, 8] {
            let params = DynamicsParams::new(1e-3, 1.0, 1.0, 0.05, 2.0).unwrap();
            let problem =
                synthetic_learning_problem(p, 0.75, Activation::Relu, 1, &params).unwrap();
            let grid = TimeGrid::from_params(&params).unwrap();
            let full = solve_mean_predictor(&problem, &grid).unwrap();
            let reduced =
                solve_synthetic_reduced(Activation::Relu, 1, &params, 0.75, &grid).unwrap();
            for i in 0..grid.len() {
                assert_relative_eq!(full.f_train[i][0], reduced.f_train[i], epsilon = 1e-10);
                assert_relative_eq!(full.f_train[i][1], -reduced.f_train[i], epsilon = 1e-10);
                assert_relative_eq!(full.f_test[i][0], reduced.f_test[i], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ntk_closed_form_limits() {
        let problem = relu_problem(1e-3, 1.0, 0.1, 1.0);
        let ntk_ref = NtkReference::new(&problem).unwrap();
        let (f0, t0) = ntk_ref.eval(0.0);
        assert!(f0.amax() < 1e-14);
        assert!(t0[0].abs() < 1e-14);
        let (finf, tinf) = ntk_ref.eval(1e6);
        assert_relative_eq!(finf[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(finf[1], -1.0, epsilon = 1e-10);
        // brute-force 2x2 solve for the t -> infinity test value
        let kd = ntk(Activation::Relu, 1, 1.0, &KernelInputs::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let ko = ntk(Activation::Relu, 1, 1.0, &KernelInputs::new(1.0, 0.0, 1.0).unwrap()).unwrap();
        let kt = ntk(Activation::Relu, 1, 1.0, &KernelInputs::new(1.0, 0.75, 1.0).unwrap()).unwrap();
        assert_relative_eq!(tinf[0], (kt - ko) / (kd - ko), epsilon = 1e-10);
    }

    #[test]
    fn nngp_equilibrium_scalar_reduction() {
        // train: k/(T + k) with k = 0.5 - 1/(2 pi)
        let problem = relu_problem(1e-3, 1.0, 0.1, 1.0);
        let (f_train, _) = nngp_equilibrium_predictor(&problem).unwrap();
        let k = 0.5 - 1.0 / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(f_train[0], k / (1e-3 + k), epsilon = 1e-12);

        // test at T -> 0: (0.39398 - 0.15915) / (0.5 - 0.15915)
        let problem = relu_problem(1e-9, 1.0, 0.1, 1.0);
        let (_, f_test) = nngp_equilibrium_predictor(&problem).unwrap();
        assert_relative_eq!(f_test[0], 0.68902, epsilon = 1e-4);
    }

    #[test]
    fn gradient_phase_matches_ntk_closed_form() {
        let problem = relu_problem(1e-3, 1.0, 0.01, 5.0);
        let grid = TimeGrid::from_params(&problem.params).unwrap();
        let traj = solve_mean_predictor(&problem, &grid).unwrap();
        let ntk_ref = NtkReference::new(&problem).unwrap();
        let mut sup = 0.0f64;
        for (i, &t) in traj.times.iter().enumerate() {
            let (f, ft) = ntk_ref.eval(t);
            sup = sup.max((&traj.f_train[i] - f).amax());
            sup = sup.max((traj.f_test[i][0] - ft[0]).abs());
        }
        assert!(sup <= 1e-2, "sup norm {sup}");
    }

    #[test]
    fn crossover_reported() {
        let problem = relu_problem(1e-3, 1.0, 0.01, 20.0);
        let grid = TimeGrid::from_params(&problem.params).unwrap();
        let traj = solve_mean_predictor(&problem, &grid).unwrap();
        let t_cross = traj.ntk_crossover.expect("crossover reached");
        let closed = NtkReference::new(&problem).unwrap().crossover_time(1e-3);
        assert_relative_eq!(t_cross, closed, max_relative = 0.15);
    }

    #[test]
    fn early_stopping_monotone_curve() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let f_test = vec![vec![0.0], vec![0.5], vec![0.8], vec![0.9]];
        let es = find_early_stopping(&times, &f_test, &[1.0], 0.01).unwrap();
        assert_eq!(es.t_star, 3.0);
        assert_eq!(es.delta_t_scaled, 0.0);
    }

    #[test]
    fn early_stopping_interior_minimum() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let f_test = vec![vec![0.0], vec![1.0], vec![0.8], vec![0.7]];
        let es = find_early_stopping(&times, &f_test, &[1.0], 0.5).unwrap();
        assert_eq!(es.t_star, 1.0);
        assert_eq!(es.delta_t_scaled, 1.0);
        assert_eq!(es.mse_at_t_star, 0.0);
    }

    #[test]
    fn equilibria_close_for_linear_small_t() {
        let params = DynamicsParams::new(1e-6, 1.0, 1.0, 0.1, 1.0).unwrap();
        let problem = synthetic_learning_problem(2, 0.75, Activation::Linear, 1, &params).unwrap();
        let rows = equilibria_compare(std::slice::from_ref(&problem)).unwrap();
        assert_relative_eq!(rows[0].ntk_test_mse, rows[0].nngp_test_mse, epsilon = 1e-4);
    }

    #[test]
    fn residual_small_at_equilibrium() {
        // two-scale run into the diffusive phase ends near the NNGP ridge value
        let params = DynamicsParams::new(1e-2, 1.0, 1.0, 0.01, 1e3).unwrap();
        let grid = TimeGrid::two_scale(0.01, 5.0, 0.2, 1e3).unwrap();
        let traj = solve_synthetic_reduced(Activation::Relu, 1, &params, 0.75, &grid).unwrap();
        let k = 0.5 - 1.0 / (2.0 * std::f64::consts::PI);
        let eq = k / (1e-2 + k);
        assert_relative_eq!(*traj.f_train.last().unwrap(), eq, max_relative = 5e-3);
    }
}
