//! Mean predictor dynamics of infinitely wide networks under noisy gradient
//! (Langevin) learning, via two-time dynamical kernels and a Volterra
//! integral-equation solver, plus a finite-width simulator for validation.

pub mod data;
pub mod drift;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod mc;
pub mod ndk;
pub mod prior;
pub mod sim;
pub mod solver;

pub use data::{
    build_problem, generate_stroke_digits, load_cifar_binary, load_idx, render_stroke_digit,
    synthetic_problem, write_idx, DatasetSlice, Normalize, SyntheticSpec,
};
pub use drift::{
    drift_predictor, drift_readout_accuracy, histogram, temporal_correlation, EquilibriumDrift,
};
pub use error::{CoreError, Result};
pub use grid::TimeGrid;
pub use kernels::{
    deriv_two_time, input_gram, mean_kernel, nngp_two_time, Activation, KernelInputs, KernelValue,
};
pub use mc::{mc_kernel_oracle, mc_oracle, McTarget};
pub use ndk::{long_time_integral, ndk, nngp_equilibrium_kernel, ntk};
pub use prior::{decay_factor, prior_cov, DynamicsParams};
pub use sim::{
    empirical_ntk, forward, init_network, run_ensemble, EnsembleResult, MLPState, SimConfig,
    SimMode, SimProblem,
};
pub use solver::{
    equilibria_compare, find_early_stopping, nngp_equilibrium_predictor, solve_mean_predictor,
    solve_synthetic_reduced, synthetic_learning_problem, EarlyStopping, EquilibriaRow,
    LearningProblem, NtkReference, ReducedTrajectory, TestPoint, Trajectory,
};
