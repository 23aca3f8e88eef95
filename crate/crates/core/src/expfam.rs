//! One-parameter exponential families parameterised by their mean.
//!
//! Only Bernoulli and Gaussian with known (per-cell) variance are supported.
//! Every quantity the rest of the crate needs is expressed through the mean:
//! the divergence `d(mu, lambda)`, its derivative in `lambda`, the variance
//! function `V`, and the minimiser of `w * d(mu, .) - s * .` used by the
//! transport solver.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Solver outputs for Bernoulli means are kept inside `[EPS, 1 - EPS]`.
pub const INTERIOR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("mean {value} outside the open Bernoulli domain (0, 1)")]
    OpenBernoulli { value: f64 },
    #[error("mean {value} outside the closed Bernoulli domain [0, 1]")]
    ClosedBernoulli { value: f64 },
    #[error("mean {value} is not finite")]
    NotFinite { value: f64 },
    #[error("variance {value} must be strictly positive")]
    Variance { value: f64 },
}

/// The law of a single (arm, subpopulation) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellFamily {
    Bernoulli,
    Gaussian { sigma2: f64 },
}

impl CellFamily {
    pub fn gaussian(sigma2: f64) -> Result<Self, DomainError> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(DomainError::Variance { value: sigma2 });
        }
        Ok(CellFamily::Gaussian { sigma2 })
    }

    /// Whether `x` lies in the open mean domain.
    pub fn contains(self, x: f64) -> bool {
        match self {
            CellFamily::Bernoulli => x > 0.0 && x < 1.0,
            CellFamily::Gaussian { .. } => x.is_finite(),
        }
    }

    fn check_first(self, mu: f64) -> Result<(), DomainError> {
        match self {
            CellFamily::Bernoulli if !(0.0..=1.0).contains(&mu) => {
                Err(DomainError::ClosedBernoulli { value: mu })
            }
            CellFamily::Gaussian { .. } if !mu.is_finite() => Err(DomainError::NotFinite { value: mu }),
            _ => Ok(()),
        }
    }

    fn check_second(self, lambda: f64) -> Result<(), DomainError> {
        match self {
            CellFamily::Bernoulli if !self.contains(lambda) => {
                Err(DomainError::OpenBernoulli { value: lambda })
            }
            CellFamily::Gaussian { .. } if !lambda.is_finite() => {
                Err(DomainError::NotFinite { value: lambda })
            }
            _ => Ok(()),
        }
    }

    /// Kullback-Leibler divergence `d(mu, lambda)` between the members with
    /// means `mu` and `lambda`. `mu` may sit on the boundary of the Bernoulli
    /// domain (`0 ln 0 = 0`).
    pub fn kl(self, mu: f64, lambda: f64) -> Result<f64, DomainError> {
        self.check_first(mu)?;
        self.check_second(lambda)?;
        Ok(self.divergence(mu, lambda))
    }

    /// Unchecked divergence for hot loops.
    #[inline]
    pub(crate) fn divergence(self, mu: f64, lambda: f64) -> f64 {
        match self {
            CellFamily::Bernoulli => {
                // ln_1p keeps precision when lambda is close to mu
                let mut d = 0.0;
                if mu > 0.0 {
                    d -= mu * ((lambda - mu) / mu).ln_1p();
                }
                if mu < 1.0 {
                    d -= (1.0 - mu) * ((mu - lambda) / (1.0 - mu)).ln_1p();
                }
                d.max(0.0)
            }
            CellFamily::Gaussian { sigma2 } => {
                let diff = mu - lambda;
                diff * diff / (2.0 * sigma2)
            }
        }
    }

    /// Derivative of `d(mu, lambda)` in its second argument:
    /// `(lambda - mu) / V(lambda)`.
    pub fn kl_dlambda(self, mu: f64, lambda: f64) -> Result<f64, DomainError> {
        self.check_first(mu)?;
        self.check_second(lambda)?;
        Ok((lambda - mu) / self.variance(lambda))
    }

    /// Second derivative of `d(mu, lambda)` in `lambda`.
    #[inline]
    pub(crate) fn curvature(self, mu: f64, lambda: f64) -> f64 {
        match self {
            CellFamily::Bernoulli => {
                let v = lambda * (1.0 - lambda);
                (lambda * lambda - 2.0 * mu * lambda + mu) / (v * v)
            }
            CellFamily::Gaussian { sigma2 } => 1.0 / sigma2,
        }
    }

    /// Variance function `V(mean)`.
    #[inline]
    pub fn variance(self, mean: f64) -> f64 {
        match self {
            CellFamily::Bernoulli => mean * (1.0 - mean),
            CellFamily::Gaussian { sigma2 } => sigma2,
        }
    }

    pub fn clamp_interior(self, x: f64) -> f64 {
        match self {
            CellFamily::Bernoulli => x.clamp(INTERIOR_EPS, 1.0 - INTERIOR_EPS),
            CellFamily::Gaussian { .. } => x,
        }
    }

    /// Midpoint of the mean domain, used as a placeholder for unobserved cells.
    pub fn placeholder_mean(self) -> f64 {
        match self {
            CellFamily::Bernoulli => 0.5,
            CellFamily::Gaussian { .. } => 0.0,
        }
    }

    /// Minimiser over the mean domain of `weight * d(mu, x) - slope * x`,
    /// i.e. the solution of `weight * (x - mu) / V(x) = slope`.
    ///
    /// `weight` must be positive. Bernoulli results are clamped to the
    /// interior.
    #[inline]
    pub(crate) fn stationary_point(self, mu: f64, weight: f64, slope: f64) -> f64 {
        match self {
            CellFamily::Gaussian { sigma2 } => mu + slope * sigma2 / weight,
            CellFamily::Bernoulli => {
                if slope == 0.0 {
                    return self.clamp_interior(mu);
                }
                let x = if mu <= 0.0 {
                    // w / (1 - x) = s
                    if slope > weight {
                        1.0 - weight / slope
                    } else {
                        0.0
                    }
                } else if mu >= 1.0 {
                    // -w / x = s
                    if slope < -weight {
                        -weight / slope
                    } else {
                        1.0
                    }
                } else {
                    // s x^2 + (w - s) x - w mu = 0 has exactly one root in [0, 1]
                    let a = slope;
                    let b = weight - slope;
                    let c = -weight * mu;
                    let disc = (b * b - 4.0 * a * c).max(0.0);
                    let q = -0.5 * (b + b.signum() * disc.sqrt());
                    let r1 = q / a;
                    let r2 = if q != 0.0 { c / q } else { f64::NAN };
                    pick_unit_root(r1, r2)
                };
                self.clamp_interior(x)
            }
        }
    }

    /// Draws one observation with mean `mu`.
    pub fn sample<R: Rng + ?Sized>(self, mu: f64, rng: &mut R) -> Result<f64, DomainError> {
        self.check_first(mu)?;
        Ok(match self {
            CellFamily::Bernoulli => {
                if rng.gen::<f64>() < mu {
                    1.0
                } else {
                    0.0
                }
            }
            CellFamily::Gaussian { sigma2 } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma2.sqrt() * z
            }
        })
    }
}

fn pick_unit_root(r1: f64, r2: f64) -> f64 {
    let dist = |r: f64| {
        if r.is_nan() {
            f64::INFINITY
        } else if r < 0.0 {
            -r
        } else if r > 1.0 {
            r - 1.0
        } else {
            0.0
        }
    };
    if dist(r1) <= dist(r2) {
        r1
    } else {
        r2
    }
}

/// Family of a whole instance: one law per (arm, subpopulation) cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Bernoulli,
    /// Known variances, one per cell, `(K+1) x J`.
    Gaussian { sigma2: Array2<f64> },
}

impl Family {
    pub fn gaussian_homoscedastic(arms: usize, subpops: usize, sigma2: f64) -> Self {
        Family::Gaussian { sigma2: Array2::from_elem((arms, subpops), sigma2) }
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self, Family::Bernoulli)
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Family::Gaussian { .. })
    }

    #[inline]
    pub fn cell(&self, arm: usize, subpop: usize) -> CellFamily {
        match self {
            Family::Bernoulli => CellFamily::Bernoulli,
            Family::Gaussian { sigma2 } => CellFamily::Gaussian { sigma2: sigma2[[arm, subpop]] },
        }
    }

    #[inline]
    pub fn row(&self, arm: usize) -> RowFamily<'_> {
        match self {
            Family::Bernoulli => RowFamily::Bernoulli,
            Family::Gaussian { sigma2 } => RowFamily::Gaussian(sigma2.row(arm)),
        }
    }

    /// Common variance if every cell shares it (relative tolerance 1e-12).
    pub fn common_variance(&self) -> Option<f64> {
        match self {
            Family::Bernoulli => None,
            Family::Gaussian { sigma2 } => {
                let first = *sigma2.iter().next()?;
                sigma2
                    .iter()
                    .all(|s| (s - first).abs() <= 1e-12 * first.abs())
                    .then_some(first)
            }
        }
    }
}

/// Laws of one arm across subpopulations.
#[derive(Debug, Clone, Copy)]
pub enum RowFamily<'a> {
    Bernoulli,
    Gaussian(ArrayView1<'a, f64>),
}

impl RowFamily<'_> {
    #[inline]
    pub fn cell(&self, subpop: usize) -> CellFamily {
        match self {
            RowFamily::Bernoulli => CellFamily::Bernoulli,
            RowFamily::Gaussian(s) => CellFamily::Gaussian { sigma2: s[subpop] },
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, RowFamily::Gaussian(_))
    }
}
