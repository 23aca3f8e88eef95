//! Exact oracles: two-arm Gaussian instances, common-variance Gaussian
//! instances, the single-population transport cost, and the Bernoulli
//! mixture reduction used for the oblivious mode.

use ndarray::{Array1, Array2};

use super::{solve_saddle, OracleError, OracleOptions, OracleResult};
use crate::expfam::CellFamily;
use crate::model::{Instance, Mode, WeightMatrix};

/// Two-arm Gaussian oracle with per-cell variances.
pub fn tstar_ab_gaussian(inst: &Instance, mode: Mode) -> Result<OracleResult, OracleError> {
    if !inst.family().is_gaussian() {
        return Err(OracleError::Unsupported("closed form requires the Gaussian family"));
    }
    if inst.k() != 1 {
        return Err(OracleError::Unsupported("closed form requires exactly one treatment arm"));
    }
    let j = inst.j();
    let alpha = inst.alpha();
    let beta = inst.beta();
    let sd = |a: usize, i: usize| inst.family().cell(a, i).variance(0.0).sqrt();
    let gap = inst.gaps()[0];
    let mut w = Array2::zeros((2, j));
    let denom = match mode {
        Mode::Agnostic => {
            let c: Vec<f64> = (0..2)
                .map(|a| (0..j).filter(|&i| beta[i] != 0.0).map(|i| beta[i] * beta[i] * sd(a, i).powi(2) / alpha[i]).sum())
                .collect();
            let s = c[0].sqrt() + c[1].sqrt();
            for a in 0..2 {
                for i in 0..j {
                    w[[a, i]] = alpha[i] * c[a].sqrt() / s;
                }
            }
            s * s
        }
        Mode::Proportional => {
            let mut total = 0.0;
            for i in 0..j {
                let s = sd(0, i) + sd(1, i);
                if beta[i] != 0.0 {
                    total += beta[i] * beta[i] / alpha[i] * s * s;
                }
                for a in 0..2 {
                    w[[a, i]] = alpha[i] * sd(a, i) / s;
                }
            }
            total
        }
        Mode::Active => {
            let total: f64 = (0..j).map(|i| beta[i].abs() * (sd(0, i) + sd(1, i))).sum();
            for a in 0..2 {
                for i in 0..j {
                    w[[a, i]] = beta[i].abs() * sd(a, i) / total;
                }
            }
            total * total
        }
        Mode::Oblivious => return Err(OracleError::Unsupported("no Gaussian oblivious oracle")),
    };
    let value = gap * gap / (2.0 * denom);
    Ok(OracleResult::exact(mode, value, WeightMatrix(w)))
}

/// Best arm-level allocation `u` for `max_u min_b gap_b^2 / (1/u_0 + 1/u_b)`
/// and the attained value.
pub(crate) fn equalized_allocation(gaps: &Array1<f64>) -> (Array1<f64>, f64) {
    let k = gaps.len();
    let sq: Vec<f64> = gaps.iter().map(|g| g * g).collect();
    let min_sq = sq.iter().copied().fold(f64::INFINITY, f64::min);
    let mut u = Array1::from_elem(k + 1, 1.0 / (k + 1) as f64);
    if min_sq.is_nan() || min_sq <= 0.0 {
        return (u, 0.0);
    }
    // At a common level c each ratio u_b / u_0 is c / (gap_b^2 - c); the
    // optimal level makes the squared ratios sum to one.
    let ratios = |c: f64| sq.iter().map(|&d| c / (d - c)).collect::<Vec<f64>>();
    let (mut lo, mut hi) = (0.0, min_sq);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = ratios(mid).iter().map(|x| x * x).sum();
        if s < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * min_sq {
            break;
        }
    }
    let c = 0.5 * (lo + hi);
    let x = ratios(c);
    let u0 = 1.0 / (1.0 + x.iter().sum::<f64>());
    u[0] = u0;
    for b in 0..k {
        u[b + 1] = x[b] * u0;
    }
    let value = (0..k).map(|b| sq[b] / (1.0 / u[0] + 1.0 / u[b + 1])).fold(f64::INFINITY, f64::min);
    (u, value)
}

/// Gaussian oracle when every cell shares one variance. The passive modes
/// additionally need `alpha == beta`.
pub fn homoscedastic_oracle(inst: &Instance, mode: Mode) -> Result<OracleResult, OracleError> {
    let sigma2 = inst
        .family()
        .common_variance()
        .ok_or(OracleError::Unsupported("requires a Gaussian family with a common variance"))?;
    if mode == Mode::Oblivious {
        return Err(OracleError::Unsupported("no Gaussian oblivious oracle"));
    }
    if mode != Mode::Active && !inst.meta().alpha_equals_beta() {
        return Err(OracleError::Unsupported("passive modes require alpha == beta"));
    }
    if inst.k() == 0 {
        return Err(OracleError::Unsupported("instance has no treatment arm"));
    }
    let beta = inst.beta();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let (u, value) = equalized_allocation(&inst.gaps());
    let w = Array2::from_shape_fn((inst.arms(), inst.j()), |(a, i)| u[a] * beta[i].abs() / l1);
    Ok(OracleResult::exact(mode, value / (2.0 * sigma2 * l1 * l1), WeightMatrix(w)))
}

/// Cheapest way to move two means to a common value: returns the weighted
/// cost and the common value (the weighted average of the means).
pub fn dmid(w0: f64, mu0: f64, wb: f64, mub: f64, family: CellFamily) -> (f64, f64) {
    let total = w0 + wb;
    if total <= 0.0 || wb <= 0.0 {
        return (0.0, mu0);
    }
    if w0 <= 0.0 {
        return (0.0, mub);
    }
    let v = (w0 * mu0 + wb * mub) / total;
    let mut value = 0.0;
    if w0 > 0.0 {
        value += w0 * family.divergence(mu0, v);
    }
    if wb > 0.0 {
        value += wb * family.divergence(mub, v);
    }
    (value, v)
}

/// Oblivious-mode oracle: Bernoulli mixtures over subpopulations are
/// Bernoulli, so the problem collapses to a single population.
pub fn oblivious_oracle(inst: &Instance, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if !inst.family().is_bernoulli() {
        return Err(OracleError::Unsupported("oblivious oracle requires the Bernoulli family"));
    }
    let collapsed = inst.collapsed()?;
    let r = solve_saddle(&collapsed, Mode::Agnostic, opts)?;
    let u = r.wstar.arm_marginals();
    Ok(OracleResult { mode: Mode::Oblivious, wstar: WeightMatrix::agnostic(&u, inst.alpha()), ..r })
}
