//! Characteristic times and oracle sampling weights.
//!
//! The characteristic time `T*` is the inverse of the game value
//! `max_{w in C_mode} Lambda(w, mu)`; the maximiser `w*` is the oracle
//! allocation. [`solve_saddle`] handles any instance; the functions in
//! [`closed_form`] cover the Gaussian special cases exactly.

use ndarray::{Array1, Array2};
use serde::Serialize;
use thiserror::Error;

use crate::glr::glr_min;
use crate::model::{Instance, Mode, ModelError, WeightMatrix};

pub mod closed_form;
mod saddle;

pub use closed_form::{dmid, homoscedastic_oracle, oblivious_oracle, tstar_ab_gaussian};
pub use saddle::solve_saddle;

/// Characteristic times at or above this are reported as infinite.
pub const TSTAR_CAP: f64 = 1e12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Target relative gap between the upper and lower game values.
    pub tol: f64,
    pub max_iters: usize,
    /// Seeds a random perturbation of the first learner loss (used to probe
    /// sensitivity to the starting point).
    pub perturb_seed: Option<u64>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { tol: 1e-4, max_iters: 50_000, perturb_seed: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mode: Mode,
    /// `1 / lower_value`, or infinity when above [`TSTAR_CAP`].
    pub tstar: f64,
    pub wstar: WeightMatrix,
    pub lower_value: f64,
    pub upper_value: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl OracleResult {
    pub(crate) fn exact(mode: Mode, value: f64, wstar: WeightMatrix) -> Self {
        OracleResult {
            mode,
            tstar: tstar_from_value(value),
            wstar,
            lower_value: value,
            upper_value: value,
            iterations: 0,
            converged: true,
        }
    }

    /// Relative gap `(upper - lower) / lower`; zero for exact results.
    pub fn gap(&self) -> f64 {
        if self.upper_value == self.lower_value {
            0.0
        } else if self.lower_value > 0.0 {
            (self.upper_value - self.lower_value) / self.lower_value
        } else {
            f64::INFINITY
        }
    }

    pub fn is_practically_infinite(&self) -> bool {
        self.tstar.is_infinite()
    }

    pub fn arm_marginals(&self) -> Array1<f64> {
        self.wstar.arm_marginals()
    }

    pub fn report(&self) -> OracleReport {
        OracleReport {
            mode: self.mode,
            tstar: self.tstar.is_finite().then_some(self.tstar),
            wstar: self.wstar.0.rows().into_iter().map(|r| r.to_vec()).collect(),
            gap: self.gap(),
            iterations: self.iterations,
        }
    }
}

/// JSON form of an oracle result. `tstar` is `null` when practically infinite.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub mode: Mode,
    pub tstar: Option<f64>,
    pub wstar: Vec<Vec<f64>>,
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) fn tstar_from_value(value: f64) -> f64 {
    if value > 0.0 && 1.0 / value < TSTAR_CAP {
        1.0 / value
    } else {
        f64::INFINITY
    }
}

/// Game value `Lambda(w, mu)` of an allocation.
pub fn evaluate(inst: &Instance, w: &Array2<f64>) -> f64 {
    glr_min(w.view(), inst.means(), inst.beta().view(), inst.family()).0
}

/// Iterative oracle for any mode (oblivious goes through the Bernoulli
/// mixture reduction).
pub fn solve(inst: &Instance, mode: Mode, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    match mode {
        Mode::Oblivious => oblivious_oracle(inst, opts),
        _ => solve_saddle(inst, mode, opts),
    }
}

/// Uses an exact closed form when one applies, otherwise [`solve`].
pub fn solve_preferring_closed_form(inst: &Instance, mode: Mode, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if mode != Mode::Oblivious {
        if let Ok(r) = tstar_ab_gaussian(inst, mode) {
            return Ok(r);
        }
        if let Ok(r) = homoscedastic_oracle(inst, mode) {
            return Ok(r);
        }
    }
    solve(inst, mode, opts)
}
