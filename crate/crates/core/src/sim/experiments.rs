//! Instance generators and the experiment drivers: risk calibration, the
//! random-instance sweep, a fixed instance with bounds, and log replay.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::distributions::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::{episode_rng, join_set, lower_bound, practical_bound, run_episode, EpisodeSpec, ReplayData, ReplayEnv, SyntheticEnv, TraceRow};
use crate::expfam::Family;
use crate::model::{Instance, Mode, NEAR_BOUNDARY_TOL};
use crate::oracle::{self, OracleError, OracleOptions};
use crate::policy::{Policy, PolicyConfig, PolicyError, PolicyKind, Threshold, Tracking};

/// Streams at or above this offset drive episodes; lower ones generate
/// instances.
const EPISODE_STREAMS: u64 = 1 << 40;

/// Bernoulli instance with i.i.d. Uniform(0,1) cell means, importance equal
/// to `alpha`. Redraws up to 100 times while some arm's weighted mean is
/// within 1e-9 of the control's.
pub fn gen_instance_uniform<R: Rng>(k: usize, alpha: &Array1<f64>, rng: &mut R) -> Instance {
    let j = alpha.len();
    let mut last = None;
    for _ in 0..100 {
        let means = Array2::from_shape_simple_fn((k + 1, j), || rng.sample::<f64, _>(Open01));
        let inst = Instance::with_alpha(means, Family::Bernoulli, alpha.clone()).expect("uniform means are valid");
        if inst.gaps().iter().all(|g| g.abs() >= NEAR_BOUNDARY_TOL) {
            return inst;
        }
        last = Some(inst);
    }
    last.expect("at least one draw")
}

/// Symmetric Dirichlet draw on `j` coordinates.
pub fn gen_alpha_dirichlet<R: Rng>(j: usize, concentration: f64, rng: &mut R) -> Array1<f64> {
    assert!(concentration > 0.0, "concentration must be positive");
    if j == 1 {
        return Array1::ones(1);
    }
    let d = Dirichlet::new_with_size(concentration, j).expect("j >= 2 and concentration > 0");
    Array1::from(d.sample(rng))
}

/// Options shared by the episode-level drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub delta: f64,
    pub horizon: u64,
    pub threshold: Threshold,
    pub tracking: Tracking,
    pub workers: usize,
    pub trace_stride: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            delta: 0.1,
            horizon: super::DEFAULT_HORIZON,
            threshold: Threshold::Stylized,
            tracking: Tracking::D,
            workers: 1,
            trace_stride: None,
        }
    }
}

impl RunOptions {
    fn spec(&self, kind: PolicyKind, mode: Mode) -> EpisodeSpec {
        let mut cfg = PolicyConfig::new(kind, mode);
        cfg.threshold = self.threshold;
        cfg.tracking = self.tracking;
        EpisodeSpec { cfg, delta: self.delta, horizon: self.horizon, trace_stride: self.trace_stride }
    }
}

/// One row of `runs.csv`. `stop_time` is empty for censored runs; `rounds`
/// is always the number of rounds played.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub policy: &'static str,
    pub mode: &'static str,
    pub instance_id: u64,
    pub seed: u64,
    pub stop_time: Option<u64>,
    pub censored: bool,
    pub correct: bool,
    pub delta_final: f64,
    pub rounds: u64,
    pub exhausted: bool,
    pub recommendation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracedRun {
    pub record: RunRecord,
    pub trace: Vec<TraceRow>,
}

impl TracedRun {
    /// File stem used under `trace/`.
    pub fn trace_name(&self) -> String {
        let r = &self.record;
        format!("{}_{}_{}_{}", r.policy, r.mode, r.instance_id, r.seed)
    }
}

fn in_pool<T: Send, R: Send>(workers: usize, items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    if workers <= 1 {
        return items.into_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
    pool.install(|| items.into_par_iter().map(f).collect())
}

fn record(kind: PolicyKind, mode: Mode, instance_id: u64, seed: u64, ep: &super::Episode) -> RunRecord {
    RunRecord {
        policy: kind.as_str(),
        mode: mode.as_str(),
        instance_id,
        seed,
        stop_time: ep.stop_time,
        censored: ep.censored,
        correct: ep.correct,
        delta_final: ep.delta_final,
        rounds: ep.rounds,
        exhausted: ep.exhausted,
        recommendation: join_set(&ep.recommendation),
    }
}

fn check_policies(inst: &Instance, policies: &[(PolicyKind, Mode)]) -> Result<(), PolicyError> {
    for &(kind, mode) in policies {
        Policy::new(inst.meta(), PolicyConfig::new(kind, mode))?;
    }
    Ok(())
}

/// Runs every policy `reps` times on `inst`. Episode `r` of every policy
/// uses stream `r`, so policies share random numbers where they can.
pub fn experiment_fixed_instance(inst: &Instance, policies: &[(PolicyKind, Mode)], reps: u64, seed: u64, opts: &RunOptions) -> Result<Vec<TracedRun>, PolicyError> {
    check_policies(inst, policies)?;
    let truth = inst.answer_set();
    let jobs: Vec<_> = policies.iter().flat_map(|&p| (0..reps).map(move |r| (p, r))).collect();
    in_pool(opts.workers, jobs, |((kind, mode), r)| {
        let spec = opts.spec(kind, mode);
        let mut env = SyntheticEnv::new(inst, episode_rng(seed, EPISODE_STREAMS + r));
        let ep = run_episode(&mut env, inst.meta(), &truth, &spec)?;
        Ok(TracedRun { record: record(kind, mode, 0, r, &ep), trace: ep.trace })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub mode: &'static str,
    /// `None` when the characteristic time is infinite.
    pub tstar: Option<f64>,
    pub lower_bound: Option<f64>,
    pub practical_bound: Option<f64>,
    pub oracle_gap: f64,
}

/// Lower and practical stopping-time bounds for each mode.
pub fn bounds(inst: &Instance, modes: &[Mode], delta: f64, opts: &OracleOptions) -> Result<Vec<BoundRow>, OracleError> {
    let finite = |x: f64| x.is_finite().then_some(x);
    modes
        .iter()
        .map(|&mode| {
            let res = oracle::solve_preferring_closed_form(inst, mode, opts)?;
            Ok(BoundRow {
                mode: mode.as_str(),
                tstar: finite(res.tstar),
                lower_bound: finite(lower_bound(res.tstar, delta)),
                practical_bound: finite(practical_bound(res.tstar, delta)),
                oracle_gap: res.gap(),
            })
        })
        .collect()
}

/// The policies of the random-instance sweep.
pub const SWEEP_POLICIES: [(PolicyKind, Mode); 5] = [
    (PolicyKind::Tas, Mode::Active),
    (PolicyKind::Tas, Mode::Proportional),
    (PolicyKind::Tas, Mode::Agnostic),
    (PolicyKind::Bc, Mode::Agnostic),
    (PolicyKind::Uniform, Mode::Agnostic),
];

/// Random instance `id` of the sweep: `arms` treatment arms, J uniform on
/// `2..=10`, importance from a symmetric Dirichlet(10).
pub fn sweep_instance(seed: u64, id: u64, arms: usize) -> Instance {
    let mut rng = episode_rng(seed, id);
    let j = rng.gen_range(2..=10);
    let alpha = gen_alpha_dirichlet(j, 10.0, &mut rng);
    gen_instance_uniform(arms, &alpha, &mut rng)
}

/// Runs the sweep policies once on each of `n` random instances.
pub fn experiment_sweep(n: u64, arms: usize, seed: u64, opts: &RunOptions) -> Result<Vec<RunRecord>, PolicyError> {
    let jobs: Vec<_> = (0..n).flat_map(|id| SWEEP_POLICIES.iter().map(move |&p| (id, p))).collect();
    let mut out = in_pool(opts.workers, jobs, |(id, (kind, mode))| {
        let inst = sweep_instance(seed, id, arms);
        let spec = opts.spec(kind, mode);
        let stream = EPISODE_STREAMS + id;
        let mut env = SyntheticEnv::new(&inst, episode_rng(seed, stream));
        let ep = run_episode(&mut env, inst.meta(), &inst.answer_set(), &spec)?;
        Ok(record(kind, mode, id, stream, &ep))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    out.sort_by_key(|r| (r.instance_id, r.seed));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub policy: &'static str,
    pub mode: &'static str,
    pub runs: usize,
    /// Mean of `rounds`, censored runs included at their horizon.
    pub mean_stop_time: f64,
    pub censored: usize,
    pub errors: usize,
}

/// Per-(policy, mode) averages, in order of first appearance.
pub fn summarize(runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows: Vec<(SummaryRow, u128)> = Vec::new();
    for r in runs {
        let pos = match rows.iter().position(|(s, _)| s.policy == r.policy && s.mode == r.mode) {
            Some(p) => p,
            None => {
                rows.push((SummaryRow { policy: r.policy, mode: r.mode, runs: 0, mean_stop_time: 0.0, censored: 0, errors: 0 }, 0));
                rows.len() - 1
            }
        };
        let (s, total) = &mut rows[pos];
        s.runs += 1;
        *total += r.rounds as u128;
        s.censored += r.censored as usize;
        s.errors += (!r.censored && !r.correct) as usize;
    }
    rows.into_iter()
        .map(|(mut s, total)| {
            s.mean_stop_time = total as f64 / s.runs as f64;
            s
        })
        .collect()
}

/// One row of `calibration.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub instance_id: u64,
    pub delta_level: f64,
    pub crossed: bool,
    /// First round with risk at most `delta_level`.
    pub t_cross: Option<u64>,
    /// Whether the recommendation at `t_cross` was correct.
    pub correct: Option<bool>,
    /// Whether some round up to the end of the run had risk at most
    /// `delta_level` together with a wrong recommendation.
    pub ever_wrong: bool,
}

/// Single-population Bernoulli instances with `arms` treatment arms, each
/// played by agnostic Track-and-Stop until the risk falls to the smallest
/// level in `grid` (or the horizon).
pub fn experiment_calibrate(n: u64, arms: usize, grid: &[f64], seed: u64, opts: &RunOptions) -> Result<Vec<CalibrationRow>, PolicyError> {
    let floor = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let rows = in_pool(opts.workers, (0..n).collect(), |id| -> Result<Vec<CalibrationRow>, PolicyError> {
        let mut rng = episode_rng(seed, id);
        let inst = gen_instance_uniform(arms, &Array1::ones(1), &mut rng);
        let truth = inst.answer_set();
        let spec = opts.spec(PolicyKind::Tas, Mode::Agnostic);
        let mut policy = Policy::new(inst.meta(), spec.cfg)?;
        let mut env = SyntheticEnv::new(&inst, episode_rng(seed, EPISODE_STREAMS + id));
        let mut rows: Vec<CalibrationRow> = grid
            .iter()
            .map(|&d| CalibrationRow { instance_id: id, delta_level: d, crossed: false, t_cross: None, correct: None, ever_wrong: false })
            .collect();
        for t in 1..=opts.horizon {
            let d = policy.decide_agnostic()?;
            let i = super::Environment::draw_subpop(&mut env);
            let x = super::Environment::pull(&mut env, d.arm, i).expect("synthetic draws never run out");
            policy.observe(d.arm, Some(i), x)?;
            let r = policy.risk_report();
            let ok = r.recommended == truth;
            for row in rows.iter_mut().filter(|row| r.delta_hat <= row.delta_level) {
                if !row.crossed {
                    row.crossed = true;
                    row.t_cross = Some(t);
                    row.correct = Some(ok);
                }
                row.ever_wrong |= !ok;
            }
            if r.delta_hat <= floor {
                break;
            }
        }
        Ok(rows)
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
}

/// Replays the log once per (policy, repetition). The truth is the answer
/// set of the empirical means; the horizon is capped at the log size.
pub fn experiment_replay(data: Arc<ReplayData>, policies: &[(PolicyKind, Mode)], reps: u64, seed: u64, bootstrap: bool, opts: &RunOptions) -> Result<Vec<TracedRun>, ReplayError> {
    let inst = data.instance()?;
    check_policies(&inst, policies)?;
    let truth = inst.answer_set();
    let horizon = if bootstrap { opts.horizon } else { opts.horizon.min(data.capacity() as u64) };
    let jobs: Vec<_> = policies.iter().flat_map(|&p| (0..reps).map(move |r| (p, r))).collect();
    let runs = in_pool(opts.workers, jobs, |((kind, mode), r)| {
        let mut spec = opts.spec(kind, mode);
        spec.horizon = horizon;
        let mut env = ReplayEnv::new(data.clone(), episode_rng(seed, EPISODE_STREAMS + r), bootstrap);
        let ep = run_episode(&mut env, inst.meta(), &truth, &spec)?;
        Ok(TracedRun { record: record(kind, mode, 0, r, &ep), trace: ep.trace })
    });
    runs.into_iter().collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Log(#[from] super::LogError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Empirical sampling proportions of an episode that never stops.
pub fn tracking_proportions(inst: &Instance, kind: PolicyKind, mode: Mode, rounds: u64, rng: ChaCha8Rng) -> Result<Array2<f64>, PolicyError> {
    let spec = EpisodeSpec { cfg: PolicyConfig::new(kind, mode), delta: -1.0, horizon: rounds, trace_stride: None };
    let mut env = SyntheticEnv::new(inst, rng);
    let ep = run_episode(&mut env, inst.meta(), &inst.answer_set(), &spec)?;
    Ok(ep.counts.mapv(|c| c as f64 / ep.rounds.max(1) as f64))
}
