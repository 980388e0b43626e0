//! Time grids for the Volterra solver.
//!
//! The mean-predictor dynamics span two phases whose time scales differ by a
//! factor of order `1/T`: a gradient-driven phase resolved with a fine step
//! and a diffusive phase where the kernels vary on the `sigma^2 / T` scale.
//! A two-scale grid keeps the O(n^2) solve affordable over `[0, 10/T]`.

use crate::error::{CoreError, Result};
use crate::prior::DynamicsParams;

/// Monotone grid `0 = t_0 < t_1 < ... < t_n` with quadrature weights
/// `w_i = t_i - t_{i-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with step `dt` covering `[0, t_max]`.
    pub fn uniform(dt: f64, t_max: f64) -> Result<Self> {
        Self::two_scale(dt, t_max, dt, t_max)
    }

    /// Uniform step `dt_fine` on `[0, t_switch]`, then `dt_coarse` up to
    /// `t_max`. With `t_switch >= t_max` this degenerates to a uniform grid.
    pub fn two_scale(dt_fine: f64, t_switch: f64, dt_coarse: f64, t_max: f64) -> Result<Self> {
        for (name, v) in [("dt_fine", dt_fine), ("dt_coarse", dt_coarse)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(t_max >= dt_fine) {
            return Err(CoreError::InvalidParameter(format!(
                "t_max ({t_max}) must be >= dt_fine ({dt_fine})"
            )));
        }
        let mut times = vec![0.0];
        let n_fine = (t_switch.min(t_max) / dt_fine).round().max(0.0) as usize;
        for i in 1..=n_fine {
            times.push(i as f64 * dt_fine);
        }
        let fine_end = *times.last().unwrap();
        if t_max > fine_end {
            let n_coarse = ((t_max - fine_end) / dt_coarse).round().max(1.0) as usize;
            for i in 1..=n_coarse {
                times.push(fine_end + i as f64 * dt_coarse);
            }
        }
        Ok(Self { times })
    }

    /// Grid implied by the parameter struct: uniform with `params.dt`.
    pub fn from_params(params: &DynamicsParams) -> Result<Self> {
        Self::uniform(params.dt, params.t_max)
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Quadrature weight attached to node `i`: the step leading into it.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        assert!(i >= 1 && i < self.times.len());
        self.times[i] - self.times[i - 1]
    }

    /// Index of the grid node closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        match self
            .times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.times.len() => i - 1,
            Err(i) => {
                if t - self.times[i - 1] <= self.times[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}
