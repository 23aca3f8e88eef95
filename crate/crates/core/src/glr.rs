//! Transport cost between the control and one arm, and the generalized
//! likelihood ratio built from it.
//!
//! For a weight matrix `w` and means `mu`, the cost of moving to the closest
//! alternative where arm `b` and the control have equal weighted means is
//!
//! ```text
//! min  sum_{a in {0,b}} sum_i w[a,i] d(mu[a,i], lambda[a,i])
//! s.t. sum_i beta_i lambda[0,i] = sum_i beta_i lambda[b,i]
//! ```
//!
//! and the GLR is the minimum of this cost over `b`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::expfam::{Family, RowFamily};
use crate::model::InstanceMeta;

const MAX_ROOT_ITERS: usize = 200;
const ROOT_REL_TOL: f64 = 1e-12;

/// Solution of the pairwise transport problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTransport {
    pub value: f64,
    pub lambda0: Array1<f64>,
    pub lambdab: Array1<f64>,
}

/// Solution of the GLR problem over all pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub value: f64,
    /// Minimising arm (0 only when there are no treatment arms).
    pub pair_arm: usize,
    /// Rows: control, then `pair_arm`.
    pub lambda: Array2<f64>,
    /// Partial derivatives of the cost in `w`: `d(mu, lambda)` on the two
    /// active rows, zero elsewhere. A supergradient of the concave GLR.
    pub subgradient: Array2<f64>,
}

#[derive(Clone, Copy)]
struct Pair<'a> {
    w0: ArrayView1<'a, f64>,
    mu0: ArrayView1<'a, f64>,
    wb: ArrayView1<'a, f64>,
    mub: ArrayView1<'a, f64>,
    beta: ArrayView1<'a, f64>,
    f0: RowFamily<'a>,
    fb: RowFamily<'a>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Method {
    Auto,
    Lagrangian,
}

impl Pair<'_> {
    fn gap(&self) -> f64 {
        (0..self.beta.len()).map(|i| self.beta[i] * (self.mu0[i] - self.mub[i])).sum()
    }

    fn cost(&self, lam0: &[f64], lamb: &[f64]) -> f64 {
        let mut v = 0.0;
        for i in 0..self.beta.len() {
            if self.w0[i] > 0.0 {
                v += self.w0[i] * self.f0.cell(i).divergence(self.mu0[i], lam0[i]);
            }
            if self.wb[i] > 0.0 {
                v += self.wb[i] * self.fb.cell(i).divergence(self.mub[i], lamb[i]);
            }
        }
        v
    }

    /// Stationary points at multiplier `q`; returns the constraint residual.
    fn respond(&self, q: f64, lam0: &mut [f64], lamb: &mut [f64]) -> f64 {
        let mut g = 0.0;
        for i in 0..self.beta.len() {
            let b = self.beta[i];
            if b == 0.0 {
                continue;
            }
            lam0[i] = self.f0.cell(i).stationary_point(self.mu0[i], self.w0[i], -q * b);
            lamb[i] = self.fb.cell(i).stationary_point(self.mub[i], self.wb[i], q * b);
            g += b * (lam0[i] - lamb[i]);
        }
        g
    }

    /// `-dg/dq` at the current response.
    fn residual_slope(&self, lam0: &[f64], lamb: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.beta.len() {
            let b = self.beta[i];
            if b == 0.0 {
                continue;
            }
            let h0 = self.w0[i] * self.f0.cell(i).curvature(self.mu0[i], lam0[i]);
            let hb = self.wb[i] * self.fb.cell(i).curvature(self.mub[i], lamb[i]);
            s += b * b * (1.0 / h0 + 1.0 / hb);
        }
        s
    }

    fn solve(&self, method: Method, lam0: &mut [f64], lamb: &mut [f64]) -> f64 {
        let j = self.beta.len();
        for i in 0..j {
            lam0[i] = self.mu0[i];
            lamb[i] = self.mub[i];
        }
        let gap = self.gap();
        if gap == 0.0 {
            return 0.0;
        }
        for i in 0..j {
            let b = self.beta[i];
            if b == 0.0 {
                continue;
            }
            if self.w0[i] <= 0.0 {
                lam0[i] = self.f0.cell(i).clamp_interior(self.mu0[i] - gap / b);
                return 0.0;
            }
            if self.wb[i] <= 0.0 {
                lamb[i] = self.fb.cell(i).clamp_interior(self.mub[i] + gap / b);
                return 0.0;
            }
        }
        if method == Method::Auto && self.f0.is_gaussian() && self.fb.is_gaussian() {
            self.solve_gaussian(gap, lam0, lamb)
        } else {
            self.solve_lagrangian(gap, lam0, lamb)
        }
    }

    fn solve_gaussian(&self, gap: f64, lam0: &mut [f64], lamb: &mut [f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.beta.len() {
            let b = self.beta[i];
            if b != 0.0 {
                s += b * b * (self.f0.cell(i).variance(0.0) / self.w0[i] + self.fb.cell(i).variance(0.0) / self.wb[i]);
            }
        }
        let q = gap / s;
        for i in 0..self.beta.len() {
            let b = self.beta[i];
            if b != 0.0 {
                lam0[i] = self.mu0[i] - q * b * self.f0.cell(i).variance(0.0) / self.w0[i];
                lamb[i] = self.mub[i] + q * b * self.fb.cell(i).variance(0.0) / self.wb[i];
            }
        }
        gap * gap / (2.0 * s)
    }

    fn solve_lagrangian(&self, gap: f64, lam0: &mut [f64], lamb: &mut [f64]) -> f64 {
        let sign = gap.signum();
        // Initial multiplier from the local quadratic model at the midpoint.
        let mut s0 = 0.0;
        for i in 0..self.beta.len() {
            let b = self.beta[i];
            if b != 0.0 {
                let c0 = self.f0.cell(i);
                let cb = self.fb.cell(i);
                let mid = c0.clamp_interior(0.5 * (self.mu0[i] + self.mub[i]));
                s0 += b * b * (c0.variance(mid) / self.w0[i] + cb.variance(mid) / self.wb[i]);
            }
        }
        let tol = ROOT_REL_TOL * gap.abs();
        let mut lo = 0.0;
        let mut hi = f64::NAN;
        let mut q = if s0 > 0.0 && s0.is_finite() { gap / s0 } else { sign * 1e-8 };
        let mut g = self.respond(q, lam0, lamb);
        let mut iters = 0;
        while g * sign > tol && iters < MAX_ROOT_ITERS {
            lo = q;
            q *= 2.0;
            g = self.respond(q, lam0, lamb);
            iters += 1;
        }
        if g * sign < -tol {
            hi = q;
        }
        while g.abs() > tol && iters < MAX_ROOT_ITERS && !hi.is_nan() {
            let slope = self.residual_slope(lam0, lamb);
            let newton = q + g / slope;
            let inside = if sign > 0.0 { newton > lo && newton < hi } else { newton < lo && newton > hi };
            let next = if inside && newton.is_finite() { newton } else { 0.5 * (lo + hi) };
            if next == q || (hi - lo).abs() <= f64::EPSILON * q.abs() {
                break;
            }
            q = next;
            g = self.respond(q, lam0, lamb);
            if g * sign > 0.0 {
                lo = q;
            } else {
                hi = q;
            }
            iters += 1;
        }
        // Dual value: a lower bound on the infimum for any q, exact at the root.
        (self.cost(lam0, lamb) + q * g).max(0.0)
    }
}

fn alloc_solve(p: Pair<'_>, method: Method) -> PairTransport {
    let j = p.beta.len();
    let mut lam0 = vec![0.0; j];
    let mut lamb = vec![0.0; j];
    let value = p.solve(method, &mut lam0, &mut lamb);
    PairTransport { value, lambda0: Array1::from(lam0), lambdab: Array1::from(lamb) }
}

/// Exact infimum of the pairwise transport problem. Gaussian rows use the
/// closed form; other families a monotone root-find on the multiplier.
///
/// If a cell with nonzero importance carries zero weight on either row, the
/// constraint is absorbed there at zero cost and the value is 0.
#[allow(clippy::too_many_arguments)]
pub fn pair_transport<'a>(
    w0: ArrayView1<'a, f64>,
    mu0: ArrayView1<'a, f64>,
    wb: ArrayView1<'a, f64>,
    mub: ArrayView1<'a, f64>,
    beta: ArrayView1<'a, f64>,
    family0: RowFamily<'a>,
    familyb: RowFamily<'a>,
) -> PairTransport {
    alloc_solve(Pair { w0, mu0, wb, mub, beta, f0: family0, fb: familyb }, Method::Auto)
}

/// Same problem, always through the multiplier root-find (also for Gaussian).
#[allow(clippy::too_many_arguments)]
pub fn pair_transport_lagrangian<'a>(
    w0: ArrayView1<'a, f64>,
    mu0: ArrayView1<'a, f64>,
    wb: ArrayView1<'a, f64>,
    mub: ArrayView1<'a, f64>,
    beta: ArrayView1<'a, f64>,
    family0: RowFamily<'a>,
    familyb: RowFamily<'a>,
) -> PairTransport {
    alloc_solve(Pair { w0, mu0, wb, mub, beta, f0: family0, fb: familyb }, Method::Lagrangian)
}

/// Same problem solved by equality-constrained Newton with backtracking on
/// all `2J` coordinates. Slower; kept as an independent check.
#[allow(clippy::too_many_arguments)]
pub fn pair_transport_newton<'a>(
    w0: ArrayView1<'a, f64>,
    mu0: ArrayView1<'a, f64>,
    wb: ArrayView1<'a, f64>,
    mub: ArrayView1<'a, f64>,
    beta: ArrayView1<'a, f64>,
    family0: RowFamily<'a>,
    familyb: RowFamily<'a>,
) -> PairTransport {
    let p = Pair { w0, mu0, wb, mub, beta, f0: family0, fb: familyb };
    let j = beta.len();
    let gap = p.gap();
    let degenerate = gap == 0.0 || (0..j).any(|i| beta[i] != 0.0 && (w0[i] <= 0.0 || wb[i] <= 0.0));
    if degenerate {
        return alloc_solve(p, Method::Lagrangian);
    }
    // Variables: cells with beta != 0 on both rows. Others stay at mu.
    let idx: Vec<usize> = (0..j).filter(|&i| beta[i] != 0.0).collect();
    let n = idx.len();
    let mut x = vec![0.0; 2 * n];
    let mut a = vec![0.0; 2 * n];
    let mut w = vec![0.0; 2 * n];
    let mut mu = vec![0.0; 2 * n];
    let mut cell = Vec::with_capacity(2 * n);
    for (k, &i) in idx.iter().enumerate() {
        let c0 = family0.cell(i);
        let mid = c0.clamp_interior(0.5 * (mu0[i] + mub[i]));
        x[k] = mid;
        x[n + k] = mid;
        a[k] = beta[i];
        a[n + k] = -beta[i];
        w[k] = w0[i];
        w[n + k] = wb[i];
        mu[k] = mu0[i];
        mu[n + k] = mub[i];
        cell.push(c0);
    }
    for &i in &idx {
        cell.push(familyb.cell(i));
    }
    let objective = |x: &[f64]| -> f64 { (0..2 * n).map(|k| w[k] * cell[k].divergence(mu[k], x[k])).sum() };
    let mut f = objective(&x);
    for _ in 0..100 {
        let grad: Vec<f64> = (0..2 * n).map(|k| w[k] * (x[k] - mu[k]) / cell[k].variance(x[k])).collect();
        let hinv: Vec<f64> = (0..2 * n).map(|k| 1.0 / (w[k] * cell[k].curvature(mu[k], x[k]))).collect();
        let num: f64 = (0..2 * n).map(|k| a[k] * hinv[k] * grad[k]).sum();
        let den: f64 = (0..2 * n).map(|k| a[k] * hinv[k] * a[k]).sum();
        let nu = num / den;
        let step: Vec<f64> = (0..2 * n).map(|k| -hinv[k] * (grad[k] - nu * a[k])).collect();
        let decrement: f64 = -(0..2 * n).map(|k| grad[k] * step[k]).sum::<f64>();
        if decrement <= 1e-15 * (1.0 + f) {
            break;
        }
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = (0..2 * n).map(|k| x[k] + t * step[k]).collect();
            let inside = trial.iter().zip(&cell).all(|(v, c)| c.contains(*v));
            if inside {
                let ft = objective(&trial);
                if ft <= f - 0.25 * t * decrement {
                    x = trial;
                    f = ft;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }
        if t < 1e-20 {
            break;
        }
    }
    let mut lambda0 = mu0.to_owned();
    let mut lambdab = mub.to_owned();
    for (k, &i) in idx.iter().enumerate() {
        lambda0[i] = x[k];
        lambdab[i] = x[n + k];
    }
    PairTransport { value: f, lambda0, lambdab }
}

/// GLR value `min_b` of the pairwise transport costs, with minimiser and
/// subgradient. Ties go to the smallest arm index.
pub fn glr_value(
    w: ArrayView2<'_, f64>,
    means: ArrayView2<'_, f64>,
    beta: ArrayView1<'_, f64>,
    family: &Family,
) -> TransportResult {
    let (arms, j) = means.dim();
    let mut best = f64::INFINITY;
    let mut best_b = 0;
    let mut lam0 = vec![0.0; j];
    let mut lamb = vec![0.0; j];
    let mut best0 = vec![0.0; j];
    let mut bestb = vec![0.0; j];
    let f0 = family.row(0);
    for b in 1..arms {
        let p = Pair { w0: w.row(0), mu0: means.row(0), wb: w.row(b), mub: means.row(b), beta: beta.view(), f0, fb: family.row(b) };
        let v = p.solve(Method::Auto, &mut lam0, &mut lamb);
        if v < best {
            best = v;
            best_b = b;
            best0.copy_from_slice(&lam0);
            bestb.copy_from_slice(&lamb);
        }
    }
    let mut lambda = Array2::zeros((2, j));
    let mut subgradient = Array2::zeros((arms, j));
    if best_b > 0 {
        let fb = family.row(best_b);
        for i in 0..j {
            lambda[[0, i]] = best0[i];
            lambda[[1, i]] = bestb[i];
            subgradient[[0, i]] = f0.cell(i).divergence(means[[0, i]], best0[i]);
            subgradient[[best_b, i]] = fb.cell(i).divergence(means[[best_b, i]], bestb[i]);
        }
    }
    TransportResult { value: best, pair_arm: best_b, lambda, subgradient }
}

/// GLR value only, without building the minimiser.
pub fn glr_min(w: ArrayView2<'_, f64>, means: ArrayView2<'_, f64>, beta: ArrayView1<'_, f64>, family: &Family) -> (f64, usize) {
    let (arms, j) = means.dim();
    let mut lam0 = vec![0.0; j];
    let mut lamb = vec![0.0; j];
    let mut best = (f64::INFINITY, 0);
    for b in 1..arms {
        let p = Pair {
            w0: w.row(0),
            mu0: means.row(0),
            wb: w.row(b),
            mub: means.row(b),
            beta: beta.view(),
            f0: family.row(0),
            fb: family.row(b),
        };
        let v = p.solve(Method::Auto, &mut lam0, &mut lamb);
        if v < best.0 {
            best = (v, b);
        }
    }
    best
}

/// GLR statistic with raw counts as weights. Returns `(Lambda, b*)`.
pub fn glr_statistic(counts: ArrayView2<'_, u64>, empirical_means: ArrayView2<'_, f64>, meta: &InstanceMeta) -> (f64, usize) {
    let w = counts.mapv(|c| c as f64);
    glr_min(w.view(), empirical_means, meta.beta.view(), &meta.family)
}
