//! Environments, the episode runner and the experiment drivers.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expfam::CellFamily;
use crate::model::{InstanceMeta, Mode};
use crate::policy::{Policy, PolicyConfig, PolicyError};

pub mod env;
pub mod experiments;
pub mod replay;

pub use env::{Environment, ReplayEnv, SyntheticEnv};
pub use experiments::*;
pub use replay::{write_synthetic_log, LogError, OutcomeKind, ReplayData};

pub const DEFAULT_HORIZON: u64 = 10_000_000;

/// Independent random stream `stream` under a master seed.
pub fn episode_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSpec {
    pub cfg: PolicyConfig,
    /// Stop at the first round with risk at most `delta`. A negative value
    /// never stops (and skips the per-round risk computation when no trace
    /// is requested).
    pub delta: f64,
    pub horizon: u64,
    /// Record every `stride`-th round (plus the last) when set.
    pub trace_stride: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: u64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub delta_hat: f64,
    pub recommended_set: String,
    pub phase: &'static str,
    #[serde(rename = "A_t")]
    pub arm: usize,
    #[serde(rename = "I_t")]
    pub subpop: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// First round with risk at most `delta`.
    pub stop_time: Option<u64>,
    /// Rounds actually played.
    pub rounds: u64,
    pub censored: bool,
    pub exhausted: bool,
    pub recommendation: Vec<usize>,
    pub correct: bool,
    pub delta_final: f64,
    /// Final counts per (arm, subpopulation) as seen by the environment.
    pub counts: Array2<u64>,
    pub trace: Vec<TraceRow>,
}

pub fn join_set(set: &[usize]) -> String {
    set.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// Plays one episode in the round order of the mode:
/// active picks `(A_t, I_t)`; proportional sees `I_t` first; agnostic
/// picks `A_t` then sees `I_t`; oblivious never sees `I_t`.
pub fn run_episode<E: Environment>(env: &mut E, meta: &InstanceMeta, truth: &[usize], spec: &EpisodeSpec) -> Result<Episode, PolicyError> {
    let mode = spec.cfg.mode;
    let mut policy = Policy::new(meta, spec.cfg)?;
    let mut counts = Array2::<u64>::zeros((meta.arms, meta.subpops));
    let mut trace = Vec::new();
    let mut stop_time = None;
    let mut exhausted = false;
    let mut rounds = 0;
    let lazy = spec.delta < 0.0 && spec.trace_stride.is_none();
    while rounds < spec.horizon {
        let t = rounds + 1;
        let (decision, subpop) = match mode {
            Mode::Active => {
                let d = policy.decide_active()?;
                (d, d.subpop.expect("active decisions carry a subpopulation"))
            }
            Mode::Proportional => {
                let i = env.draw_subpop();
                (policy.decide_proportional(i)?, i)
            }
            Mode::Agnostic | Mode::Oblivious => {
                let d = policy.decide_agnostic()?;
                (d, env.draw_subpop())
            }
        };
        let Some(x) = env.pull(decision.arm, subpop) else {
            exhausted = true;
            break;
        };
        let revealed = (mode != Mode::Oblivious).then_some(subpop);
        policy.observe(decision.arm, revealed, x)?;
        counts[[decision.arm, subpop]] += 1;
        rounds = t;
        if lazy {
            continue;
        }
        let r = policy.risk_report();
        let stop = r.delta_hat <= spec.delta;
        if let Some(stride) = spec.trace_stride {
            if t % stride.max(1) == 0 || stop || t == spec.horizon {
                trace.push(TraceRow {
                    t,
                    lambda: r.lambda,
                    delta_hat: r.delta_hat,
                    recommended_set: join_set(&r.recommended),
                    phase: decision.phase.as_str(),
                    arm: decision.arm,
                    subpop,
                });
            }
        }
        if stop {
            stop_time = Some(t);
            break;
        }
    }
    let r = policy.risk_report();
    if exhausted {
        if let (Some(stride), Some(last)) = (spec.trace_stride, trace.last()) {
            if last.t != rounds && rounds > 0 && stride > 0 {
                trace.push(TraceRow {
                    t: rounds,
                    lambda: r.lambda,
                    delta_hat: r.delta_hat,
                    recommended_set: join_set(&r.recommended),
                    phase: "exhausted",
                    arm: 0,
                    subpop: 0,
                });
            }
        }
    }
    Ok(Episode {
        stop_time,
        rounds,
        censored: stop_time.is_none(),
        exhausted,
        correct: r.recommended == truth,
        recommendation: r.recommended,
        delta_final: r.delta_hat,
        counts,
        trace,
    })
}

/// `kl(delta, 1 - delta) * T*`: no policy stops earlier in expectation.
pub fn lower_bound(tstar: f64, delta: f64) -> f64 {
    CellFamily::Bernoulli.divergence(delta, 1.0 - delta) * tstar
}

/// Fixed point of `t = ln((1 + ln t) / delta) * T*`, iterated from
/// `T* ln(1/delta)` to within one round (at most 100 iterations).
pub fn practical_bound(tstar: f64, delta: f64) -> f64 {
    if !tstar.is_finite() {
        return f64::INFINITY;
    }
    let mut t = (tstar * (1.0 / delta).ln()).max(1.0);
    for _ in 0..100 {
        let next = ((1.0 + t.max(1.0).ln()) / delta).ln() * tstar;
        let done = (next - t).abs() <= 1.0;
        t = next;
        if done {
            break;
        }
    }
    t
}
