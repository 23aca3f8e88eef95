//! Saddle-point solver for `max_{w in C} Lambda(w, mu)`.
//!
//! Phase one plays AdaHedge against exact best responses; the running
//! average allocation gives a lower bound and the averaged best-response
//! cut an upper bound. Because that game converges slowly, phase two
//! polishes the allocation with a trust-region cutting-plane method over the
//! collected cuts. Every cut `c` satisfies `Lambda(x) <= <x, c>` on the
//! whole constraint set, so the global linear model always yields a valid
//! upper bound.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Solution, Variable};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{tstar_from_value, OracleError, OracleOptions, OracleResult};
use crate::glr::{glr_value, pair_transport};
use crate::learner::AdaHedge;
use crate::model::{Instance, Mode, WeightMatrix};

const PHASE_ONE_ITERS: usize = 1_000;
const CARRIED_CUTS: usize = 64;
const CENTER_MIX: f64 = 1e-9;
const MIN_RADIUS: f64 = 1e-7;

/// How allocations are parameterised for one mode.
struct Geometry<'a> {
    mode: Mode,
    arms: usize,
    subpops: usize,
    alpha: &'a Array1<f64>,
}

impl Geometry<'_> {
    fn dim(&self) -> usize {
        match self.mode {
            Mode::Agnostic => self.arms,
            _ => self.arms * self.subpops,
        }
    }

    fn to_w(&self, x: &[f64]) -> Array2<f64> {
        match self.mode {
            Mode::Agnostic => Array2::from_shape_fn((self.arms, self.subpops), |(a, i)| x[a] * self.alpha[i]),
            _ => Array2::from_shape_fn((self.arms, self.subpops), |(a, i)| x[a * self.subpops + i]),
        }
    }

    /// Cut in `x` coordinates from a supergradient in `w` coordinates.
    fn cut(&self, g: &Array2<f64>) -> Vec<f64> {
        match self.mode {
            Mode::Agnostic => g.dot(self.alpha).to_vec(),
            _ => g.iter().copied().collect(),
        }
    }

    /// `max_{x in C} <x, c>`.
    fn support(&self, c: &[f64]) -> f64 {
        match self.mode {
            Mode::Proportional => (0..self.subpops)
                .map(|i| {
                    let m = (0..self.arms).map(|a| c[a * self.subpops + i]).fold(f64::NEG_INFINITY, f64::max);
                    self.alpha[i] * m
                })
                .sum(),
            _ => c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn center(&self) -> Vec<f64> {
        match self.mode {
            Mode::Proportional => {
                let mut x = vec![0.0; self.dim()];
                for a in 0..self.arms {
                    for i in 0..self.subpops {
                        x[a * self.subpops + i] = self.alpha[i] / self.arms as f64;
                    }
                }
                x
            }
            _ => vec![1.0 / self.dim() as f64; self.dim()],
        }
    }

    fn coord_upper(&self, k: usize) -> f64 {
        match self.mode {
            Mode::Proportional => self.alpha[k % self.subpops],
            _ => 1.0,
        }
    }

    /// Clamps to nonnegative values and restores the equality constraints.
    fn repair(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.max(0.0);
        }
        match self.mode {
            Mode::Proportional => {
                for i in 0..self.subpops {
                    let s: f64 = (0..self.arms).map(|a| x[a * self.subpops + i]).sum();
                    for a in 0..self.arms {
                        let k = a * self.subpops + i;
                        x[k] = if s > 0.0 { x[k] * self.alpha[i] / s } else { self.alpha[i] / self.arms as f64 };
                    }
                }
            }
            _ => {
                let s: f64 = x.iter().sum();
                let n = x.len() as f64;
                for v in x.iter_mut() {
                    *v = if s > 0.0 { *v / s } else { 1.0 / n };
                }
            }
        }
    }

    fn add_equalities(&self, p: &mut Problem, xs: &[minilp::Variable]) {
        match self.mode {
            Mode::Proportional => {
                for i in 0..self.subpops {
                    let mut e = LinearExpr::empty();
                    for a in 0..self.arms {
                        e.add(xs[a * self.subpops + i], 1.0);
                    }
                    p.add_constraint(e, ComparisonOp::Eq, self.alpha[i]);
                }
            }
            _ => {
                let mut e = LinearExpr::empty();
                for &v in xs {
                    e.add(v, 1.0);
                }
                p.add_constraint(e, ComparisonOp::Eq, 1.0);
            }
        }
    }

    fn cut_expr(z: Variable, xs: &[Variable], c: &[f64]) -> LinearExpr {
        let mut e = LinearExpr::empty();
        e.add(z, 1.0);
        for (k, &ck) in c.iter().enumerate() {
            if ck != 0.0 {
                e.add(xs[k], -ck);
            }
        }
        e
    }

    fn problem(&self, cuts: &[&[f64]], bounds: &[(f64, f64)]) -> (Problem, Vec<Variable>, Variable) {
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let xs: Vec<_> = bounds.iter().map(|&b| p.add_var(0.0, b)).collect();
        let z = p.add_var(1.0, (0.0, f64::INFINITY));
        for c in cuts {
            p.add_constraint(Self::cut_expr(z, &xs, c), ComparisonOp::Le, 0.0);
        }
        self.add_equalities(&mut p, &xs);
        (p, xs, z)
    }

    fn read(&self, sol: &Solution, xs: &[Variable]) -> (Vec<f64>, f64) {
        let mut x: Vec<f64> = xs.iter().map(|&v| sol[v]).collect();
        self.repair(&mut x);
        (x, sol.objective())
    }

    /// Maximises the cutting-plane model over `C` intersected with a box.
    fn lp(&self, cuts: &[&[f64]], bounds: &[(f64, f64)]) -> Option<(Vec<f64>, f64)> {
        let (p, xs, _) = self.problem(cuts, bounds);
        let sol = guarded(|| p.solve().ok())?;
        Some(self.read(&sol, &xs))
    }
}

/// minilp can panic on a numerically singular basis; treat that as a
/// failed solve.
fn guarded<T>(f: impl FnOnce() -> Option<T>) -> Option<T> {
    std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)).ok().flatten()
}

/// Whether `c` is within `1e-9` (sup norm) of one of the last cuts.
fn is_duplicate(bundle: &[Vec<f64>], c: &[f64]) -> bool {
    bundle.iter().rev().take(64).any(|b| b.iter().zip(c).all(|(x, y)| (x - y).abs() <= 1e-9))
}

/// Cutting-plane model over all of `C`, re-optimised incrementally as cuts
/// arrive.
struct GlobalModel {
    sol: Option<Solution>,
    xs: Vec<Variable>,
    z: Variable,
    bounds: Vec<(f64, f64)>,
}

impl GlobalModel {
    fn new(geom: &Geometry<'_>, cuts: &[Vec<f64>]) -> Self {
        let bounds: Vec<(f64, f64)> = (0..geom.dim()).map(|k| (0.0, geom.coord_upper(k))).collect();
        let refs: Vec<&[f64]> = cuts.iter().map(Vec::as_slice).collect();
        let (p, xs, z) = geom.problem(&refs, &bounds);
        GlobalModel { sol: guarded(|| p.solve().ok()), xs, z, bounds }
    }

    fn add(&mut self, geom: &Geometry<'_>, cut: &[f64], all: &[Vec<f64>]) {
        let expr = Geometry::cut_expr(self.z, &self.xs, cut);
        let warm = self.sol.take().and_then(|s| guarded(|| s.add_constraint(expr, ComparisonOp::Le, 0.0).ok()));
        self.sol = warm.or_else(|| {
            let refs: Vec<&[f64]> = all.iter().map(Vec::as_slice).collect();
            let (p, xs, z) = geom.problem(&refs, &self.bounds);
            self.xs = xs;
            self.z = z;
            guarded(|| p.solve().ok())
        });
    }

    fn optimum(&self, geom: &Geometry<'_>) -> Option<(Vec<f64>, f64)> {
        self.sol.as_ref().map(|s| geom.read(s, &self.xs))
    }
}

struct Evaluator<'a> {
    inst: &'a Instance,
    geom: Geometry<'a>,
    center: Vec<f64>,
}

impl Evaluator<'_> {
    /// Value and cut at `x`.
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let w = self.geom.to_w(x);
        let r = glr_value(w.view(), self.inst.means(), self.inst.beta().view(), self.inst.family());
        (r.value, self.geom.cut(&r.subgradient))
    }

    /// Evaluates at a point nudged towards the centre so no relevant cell has
    /// zero weight. Returns one cut per treatment arm: each pair cost is
    /// concave and homogeneous in the weights, so its tangent is a valid cut.
    fn eval_interior(&self, x: &[f64]) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| (1.0 - CENTER_MIX) * a + CENTER_MIX * c).collect();
        let w = self.geom.to_w(&y);
        let (means, beta, fam) = (self.inst.means(), self.inst.beta(), self.inst.family());
        let mut value = f64::INFINITY;
        let mut cuts = Vec::with_capacity(self.inst.k());
        for b in 1..self.inst.arms() {
            let pt = pair_transport(w.row(0), means.row(0), w.row(b), means.row(b), beta.view(), fam.row(0), fam.row(b));
            value = value.min(pt.value);
            let mut g = Array2::zeros(w.dim());
            for i in 0..self.inst.j() {
                g[[0, i]] = fam.cell(0, i).divergence(means[[0, i]], pt.lambda0[i]);
                g[[b, i]] = fam.cell(b, i).divergence(means[[b, i]], pt.lambdab[i]);
            }
            cuts.push(self.geom.cut(&g));
        }
        (y, value, cuts)
    }
}

fn relative_gap(lower: f64, upper: f64) -> f64 {
    if upper <= 0.0 {
        0.0
    } else if lower <= 0.0 {
        f64::INFINITY
    } else {
        (upper - lower) / lower
    }
}

fn finish(mode: Mode, geom: &Geometry<'_>, x: &[f64], lower: f64, upper: f64, iterations: usize, tol: f64) -> OracleResult {
    let upper = upper.max(lower);
    let tstar = tstar_from_value(lower);
    let converged = relative_gap(lower, upper) <= tol || (tstar.is_infinite() && tstar_from_value(upper).is_infinite());
    OracleResult { mode, tstar, wstar: WeightMatrix(geom.to_w(x)), lower_value: lower, upper_value: upper, iterations, converged }
}

/// Iterative saddle-point oracle for the active, proportional and agnostic
/// modes.
pub fn solve_saddle(inst: &Instance, mode: Mode, opts: &OracleOptions) -> Result<OracleResult, OracleError> {
    if mode == Mode::Oblivious {
        return Err(OracleError::Unsupported("oblivious mode goes through the mixture reduction"));
    }
    if inst.k() == 0 {
        return Err(OracleError::Unsupported("instance has no treatment arm"));
    }
    let geom = Geometry { mode, arms: inst.arms(), subpops: inst.j(), alpha: inst.alpha() };
    let center = geom.center();
    let ev = Evaluator { inst, geom, center };
    let geom = &ev.geom;
    let n = geom.dim();
    let j = inst.j();
    let arms = inst.arms();

    let mut learners: Vec<AdaHedge> = match mode {
        Mode::Proportional => (0..j).map(|_| AdaHedge::new(arms)).collect(),
        _ => vec![AdaHedge::new(n)],
    };
    let mut rng = opts.perturb_seed.map(ChaCha8Rng::seed_from_u64);

    let mut x = vec![0.0; n];
    let mut xsum = vec![0.0; n];
    let mut csum = vec![0.0; n];
    let mut recent: Vec<Vec<f64>> = Vec::new();
    let mut best_x = ev.center.clone();
    let mut lower = ev.eval(&best_x).0;
    let mut upper = f64::INFINITY;
    let mut iters = 0;
    let phase_one = PHASE_ONE_ITERS.min(opts.max_iters);

    while iters < phase_one {
        match mode {
            Mode::Proportional => {
                for (i, l) in learners.iter().enumerate() {
                    let p = l.propose();
                    for a in 0..arms {
                        x[a * j + i] = inst.alpha()[i] * p[a];
                    }
                }
            }
            _ => learners[0].propose_into(&mut x),
        }
        let (_, c) = ev.eval(&x);
        iters += 1;
        for k in 0..n {
            xsum[k] += x[k];
            csum[k] += c[k];
        }
        upper = upper.min(geom.support(&c));
        let noise = |rng: &mut Option<ChaCha8Rng>, scale: f64| match rng {
            Some(r) => r.gen::<f64>() * scale,
            None => 0.0,
        };
        let scale = c.iter().copied().fold(0.0, f64::max);
        match mode {
            Mode::Proportional => {
                for (i, l) in learners.iter_mut().enumerate() {
                    let loss: Vec<f64> = (0..arms).map(|a| -inst.alpha()[i] * c[a * j + i] + noise(&mut rng, scale)).collect();
                    l.update(&loss).expect("finite loss");
                }
            }
            _ => {
                let loss: Vec<f64> = c.iter().map(|v| -v + noise(&mut rng, scale)).collect();
                learners[0].update(&loss).expect("finite loss");
            }
        }
        rng = None;
        recent.push(c);
        if recent.len() > CARRIED_CUTS {
            recent.remove(0);
        }
        if iters % 16 == 0 || iters == phase_one {
            let avg: Vec<f64> = xsum.iter().map(|v| v / iters as f64).collect();
            let v = ev.eval(&avg).0;
            if v > lower {
                lower = v;
                best_x = avg;
            }
            let cavg: Vec<f64> = csum.iter().map(|v| v / iters as f64).collect();
            upper = upper.min(geom.support(&cavg));
            if relative_gap(lower, upper) <= opts.tol {
                return Ok(finish(mode, geom, &best_x, lower, upper, iters, opts.tol));
            }
        }
    }
    if upper <= 0.0 || tstar_from_value(upper).is_infinite() {
        return Ok(finish(mode, geom, &best_x, lower, upper, iters, opts.tol));
    }

    // Phase two: trust-region cutting planes on scaled cuts.
    let scale = csum.iter().copied().fold(0.0, f64::max) / iters as f64;
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let scaled = |c: &[f64]| c.iter().map(|v| v / scale).collect::<Vec<f64>>();
    let mut bundle: Vec<Vec<f64>> = vec![scaled(&csum.iter().map(|v| v / iters as f64).collect::<Vec<_>>())];
    bundle.extend(recent.iter().map(|c| scaled(c)));
    let (_, v0, c0) = ev.eval_interior(&best_x);
    bundle.extend(c0.iter().map(|c| scaled(c)));
    if v0 > lower {
        lower = v0;
    }
    let mut radius = 0.1;
    let mut global = GlobalModel::new(geom, &bundle);

    while iters < opts.max_iters {
        iters += 1;
        if let Some((xg, zg)) = global.optimum(geom) {
            upper = upper.min(zg * scale);
            let (yg, vg, cg) = ev.eval_interior(&xg);
            if vg > lower {
                lower = vg;
                best_x = yg;
            }
            for c in cg.iter().map(|c| scaled(c)) {
                if !is_duplicate(&bundle, &c) {
                    bundle.push(c);
                    global.add(geom, bundle.last().expect("just pushed"), &bundle);
                }
            }
        }
        if relative_gap(lower, upper) <= opts.tol {
            break;
        }
        let boxed: Vec<(f64, f64)> = (0..n)
            .map(|k| ((best_x[k] - radius).max(0.0), (best_x[k] + radius).min(geom.coord_upper(k))))
            .collect();
        // A cut whose smallest value on the box exceeds the largest value of
        // another cut is never binding there.
        let spread: Vec<(f64, f64)> = bundle
            .iter()
            .map(|c| {
                let at: f64 = c.iter().zip(&best_x).map(|(a, b)| a * b).sum();
                (at, radius * c.iter().map(|v| v.abs()).sum::<f64>())
            })
            .collect();
        let ceiling = spread.iter().map(|(v, r)| v + r).fold(f64::INFINITY, f64::min);
        let local: Vec<&[f64]> = bundle.iter().zip(&spread).filter(|(_, (v, r))| v - r <= ceiling).map(|(c, _)| c.as_slice()).collect();
        match geom.lp(&local, &boxed) {
            Some((xc, model)) => {
                let (y, v, cs) = ev.eval_interior(&xc);
                for c in cs.iter().map(|c| scaled(c)) {
                    if !is_duplicate(&bundle, &c) {
                        bundle.push(c);
                        global.add(geom, bundle.last().expect("just pushed"), &bundle);
                    }
                }
                let predicted = model * scale - lower;
                if v > lower && v - lower >= 0.1 * predicted {
                    lower = v;
                    best_x = y;
                    radius = (2.0 * radius).min(1.0);
                } else {
                    if v > lower {
                        lower = v;
                        best_x = y;
                    }
                    radius = (0.5 * radius).max(MIN_RADIUS);
                }
            }
            None => radius = (0.5 * radius).max(MIN_RADIUS),
        }
        if relative_gap(lower, upper) <= opts.tol {
            break;
        }
    }
    Ok(finish(mode, geom, &best_x, lower, upper, iters, opts.tol))
}
