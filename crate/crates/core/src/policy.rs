//! Sequential sampling rules, risk assessment and stopping.
//!
//! A [`Policy`] is driven round by round. What it may see depends on the
//! interaction mode, and the API enforces it:
//!
//! - active: [`Policy::decide_active`] picks both arm and subpopulation;
//! - proportional: [`Policy::decide_proportional`] receives the revealed
//!   subpopulation before choosing an arm;
//! - agnostic and oblivious: [`Policy::decide_agnostic`] takes no
//!   subpopulation; agnostic policies see it in [`Policy::observe`],
//!   oblivious ones never do.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expfam::Family;
use crate::glr::{glr_min, glr_value};
use crate::learner::AdaHedge;
use crate::model::{answer_set_of, InstanceMeta, Mode};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{call} called on a {mode} policy")]
    WrongMode { call: &'static str, mode: Mode },
    #[error("arm {0} out of range")]
    Arm(usize),
    #[error("subpopulation {0} out of range")]
    Subpop(usize),
    #[error("observation {0} invalid for this family")]
    Outcome(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Track-and-Stop.
    Tas,
    /// Best-challenger heuristic.
    Bc,
    Uniform,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Tas => "tas",
            PolicyKind::Bc => "bc",
            PolicyKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tas" => Ok(PolicyKind::Tas),
            "bc" => Ok(PolicyKind::Bc),
            "uniform" => Ok(PolicyKind::Uniform),
            other => Err(format!("unknown policy '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tracking {
    /// Track `t * w_t`.
    #[default]
    D,
    /// Track the cumulative sum of proposed weights.
    C,
}

impl FromStr for Tracking {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d" => Ok(Tracking::D),
            "c" => Ok(Tracking::C),
            other => Err(format!("unknown tracking rule '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Threshold {
    /// `ln((1 + ln t) / delta)`.
    #[default]
    Stylized,
    /// `ln(t^2 / delta) + 2`.
    Theory,
}

impl Threshold {
    /// Smallest `delta` whose threshold is crossed by `lambda` at round `t`.
    pub fn risk(self, t: u64, lambda: f64) -> f64 {
        if t == 0 {
            return 1.0;
        }
        let t = t as f64;
        let r = match self {
            Threshold::Stylized => (1.0 + t.ln()) * (-lambda).exp(),
            Threshold::Theory => t * t * (2.0 - lambda).exp(),
        };
        r.min(1.0)
    }

    pub fn value(self, t: f64, delta: f64) -> f64 {
        match self {
            Threshold::Stylized => ((1.0 + t.ln()) / delta).ln(),
            Threshold::Theory => (t * t / delta).ln() + 2.0,
        }
    }
}

impl FromStr for Threshold {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stylized" => Ok(Threshold::Stylized),
            "theory" => Ok(Threshold::Theory),
            other => Err(format!("unknown threshold '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[serde(rename = "forced")]
    ForcedExploration,
    Tracking,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ForcedExploration => "forced",
            Phase::Tracking => "tracking",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub mode: Mode,
    pub tracking: Tracking,
    pub threshold: Threshold,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, mode: Mode) -> Self {
        PolicyConfig { kind, mode, tracking: Tracking::D, threshold: Threshold::Stylized }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub arm: usize,
    /// Requested subpopulation; present exactly in active mode.
    pub subpop: Option<usize>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub t: u64,
    pub lambda: f64,
    pub delta_hat: f64,
    pub recommended: Vec<usize>,
    /// Arm attaining the GLR minimum (0 if there are no treatment arms).
    pub challenger: usize,
}

/// First round at which the risk assessment reaches `delta`.
pub fn stopping_time(trace: &[RiskReport], delta: f64) -> Option<u64> {
    trace.iter().find(|r| r.delta_hat <= delta).map(|r| r.t)
}

#[derive(Debug, Clone)]
pub struct Policy {
    cfg: PolicyConfig,
    /// What the policy models: the collapsed single population for
    /// oblivious mode, the instance itself otherwise.
    view: InstanceMeta,
    counts: Array2<u64>,
    sums: Array2<f64>,
    t: u64,
    learners: Vec<AdaHedge>,
    /// Cumulative proposed weights (C-tracking), or last proposal.
    cum: Array2<f64>,
    last: Array2<f64>,
}

impl Policy {
    pub fn new(meta: &InstanceMeta, cfg: PolicyConfig) -> Result<Self, PolicyError> {
        meta.check_mode(cfg.mode).map_err(|e| PolicyError::Config(e.to_string()))?;
        if cfg.kind == PolicyKind::Bc && cfg.mode != Mode::Agnostic {
            return Err(PolicyError::Config("the best-challenger policy runs in agnostic mode only".into()));
        }
        let view = if cfg.mode == Mode::Oblivious {
            InstanceMeta {
                arms: meta.arms,
                subpops: 1,
                family: Family::Bernoulli,
                alpha: Array1::ones(1),
                beta: Array1::ones(1),
            }
        } else {
            meta.clone()
        };
        let (arms, j) = (view.arms, view.subpops);
        let learners = match (cfg.kind, cfg.mode) {
            (PolicyKind::Tas, Mode::Active) => vec![AdaHedge::new(arms * j)],
            (PolicyKind::Tas, Mode::Proportional) => (0..j).map(|_| AdaHedge::new(arms)).collect(),
            (PolicyKind::Tas, _) => vec![AdaHedge::new(arms)],
            _ => Vec::new(),
        };
        let last = match cfg.mode {
            Mode::Proportional => Array2::from_elem((arms, j), 1.0 / arms as f64),
            Mode::Active => Array2::from_elem((arms, j), 1.0 / (arms * j) as f64),
            _ => Array2::from_elem((arms, 1), 1.0 / arms as f64),
        };
        Ok(Policy {
            cfg,
            counts: Array2::zeros((arms, j)),
            sums: Array2::zeros((arms, j)),
            t: 0,
            learners,
            cum: Array2::zeros(last.dim()),
            last,
            view,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    /// Number of observations so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Counts per cell of the policy's view (one column in oblivious mode).
    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn arm_counts(&self) -> Array1<u64> {
        self.counts.sum_axis(ndarray::Axis(1))
    }

    /// Empirical means; cells never sampled hold the domain midpoint.
    pub fn empirical_means(&self) -> Array2<f64> {
        let mid = self.view.family.cell(0, 0).placeholder_mean();
        Array2::from_shape_fn(self.counts.dim(), |(a, i)| {
            let n = self.counts[[a, i]];
            if n == 0 {
                mid
            } else {
                self.sums[[a, i]] / n as f64
            }
        })
    }

    fn weights_f64(&self) -> Array2<f64> {
        self.counts.mapv(|c| c as f64)
    }

    fn require(&self, call: &'static str, ok: bool) -> Result<(), PolicyError> {
        if ok {
            Ok(())
        } else {
            Err(PolicyError::WrongMode { call, mode: self.cfg.mode })
        }
    }

    /// Round index of the decision being made.
    fn round(&self) -> u64 {
        self.t + 1
    }

    pub fn decide_active(&mut self) -> Result<Decision, PolicyError> {
        self.require("decide_active", self.cfg.mode == Mode::Active)?;
        let (arms, j) = self.counts.dim();
        let t = self.round();
        let cells = arms * j;
        let (idx, phase) = match self.cfg.kind {
            PolicyKind::Uniform => (((t - 1) % cells as u64) as usize, Phase::Tracking),
            _ => {
                let floor = (t as f64).sqrt();
                if let Some(k) = (0..cells).find(|&k| (self.counts[[k / j, k % j]] as f64) <= floor) {
                    (k, Phase::ForcedExploration)
                } else {
                    let w = self.learn_active();
                    (self.track(&w, t, |k| (k / j, k % j), cells), Phase::Tracking)
                }
            }
        };
        Ok(Decision { arm: idx / j, subpop: Some(idx % j), phase })
    }

    pub fn decide_proportional(&mut self, subpop: usize) -> Result<Decision, PolicyError> {
        self.require("decide_proportional", self.cfg.mode == Mode::Proportional)?;
        let (arms, j) = self.counts.dim();
        if subpop >= j {
            return Err(PolicyError::Subpop(subpop));
        }
        let seen: u64 = (0..arms).map(|a| self.counts[[a, subpop]]).sum();
        let (arm, phase) = match self.cfg.kind {
            PolicyKind::Uniform => ((seen % arms as u64) as usize, Phase::Tracking),
            _ => {
                let floor = (seen as f64).sqrt();
                if let Some(a) = (0..arms).find(|&a| (self.counts[[a, subpop]] as f64) <= floor) {
                    (a, Phase::ForcedExploration)
                } else {
                    let p = self.learn_proportional();
                    for a in 0..arms {
                        self.cum[[a, subpop]] += p[[a, subpop]];
                    }
                    let target = |a: usize| match self.cfg.tracking {
                        Tracking::D => (seen + 1) as f64 * p[[a, subpop]],
                        Tracking::C => self.cum[[a, subpop]],
                    };
                    let arm = (0..arms)
                        .min_by(|&x, &y| {
                            let dx = self.counts[[x, subpop]] as f64 - target(x);
                            let dy = self.counts[[y, subpop]] as f64 - target(y);
                            dx.total_cmp(&dy)
                        })
                        .unwrap_or(0);
                    (arm, Phase::Tracking)
                }
            }
        };
        Ok(Decision { arm, subpop: None, phase })
    }

    pub fn decide_agnostic(&mut self) -> Result<Decision, PolicyError> {
        self.require("decide_agnostic", matches!(self.cfg.mode, Mode::Agnostic | Mode::Oblivious))?;
        let arms = self.counts.nrows();
        let t = self.round();
        let totals = self.arm_counts();
        let (arm, phase) = match self.cfg.kind {
            PolicyKind::Uniform => (((t - 1) % arms as u64) as usize, Phase::Tracking),
            kind => {
                let floor = (t as f64).sqrt();
                if let Some(a) = (0..arms).find(|&a| (totals[a] as f64) <= floor) {
                    (a, Phase::ForcedExploration)
                } else if kind == PolicyKind::Bc {
                    let (_, b) = glr_min(self.weights_f64().view(), self.empirical_means().view(), self.view.beta.view(), &self.view.family);
                    let arm = if totals[0] < totals[b] { 0 } else { b };
                    (arm, Phase::Tracking)
                } else {
                    let u = self.learn_agnostic();
                    let w = u.insert_axis(ndarray::Axis(1));
                    let totals2 = totals.clone().insert_axis(ndarray::Axis(1));
                    let arm = self.track_with(&w, &totals2, t);
                    (arm, Phase::Tracking)
                }
            }
        };
        Ok(Decision { arm, subpop: None, phase })
    }

    /// Argmin over cells of `N - target`, ties to the lowest index.
    fn track(&mut self, w: &Array2<f64>, t: u64, cell: impl Fn(usize) -> (usize, usize), n: usize) -> usize {
        if self.cfg.tracking == Tracking::C {
            self.cum += w;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for k in 0..n {
            let c = cell(k);
            let target = match self.cfg.tracking {
                Tracking::D => t as f64 * w[c],
                Tracking::C => self.cum[c],
            };
            let d = self.counts[c] as f64 - target;
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        best
    }

    fn track_with(&mut self, w: &Array2<f64>, counts: &Array2<u64>, t: u64) -> usize {
        if self.cfg.tracking == Tracking::C {
            self.cum += w;
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for a in 0..w.nrows() {
            let target = match self.cfg.tracking {
                Tracking::D => t as f64 * w[[a, 0]],
                Tracking::C => self.cum[[a, 0]],
            };
            let d = counts[[a, 0]] as f64 - target;
            if d < best_d {
                best_d = d;
                best = a;
            }
        }
        best
    }

    fn gradient_at(&self, w: &Array2<f64>) -> Array2<f64> {
        glr_value(w.view(), self.empirical_means().view(), self.view.beta.view(), &self.view.family).subgradient
    }

    fn learn_active(&mut self) -> Array2<f64> {
        let (arms, j) = self.counts.dim();
        let p = self.learners[0].propose();
        let w = Array2::from_shape_vec((arms, j), p).expect("learner dimension");
        let g = self.gradient_at(&w);
        let loss: Vec<f64> = g.iter().map(|x| -x).collect();
        self.learners[0].update(&loss).expect("finite loss");
        self.last = w.clone();
        w
    }

    /// Conditional arm distributions, one column per subpopulation.
    fn learn_proportional(&mut self) -> Array2<f64> {
        let (arms, j) = self.counts.dim();
        let mut p = Array2::zeros((arms, j));
        for (i, l) in self.learners.iter().enumerate() {
            for (a, v) in l.propose().into_iter().enumerate() {
                p[[a, i]] = v;
            }
        }
        let alpha = &self.view.alpha;
        let w = Array2::from_shape_fn((arms, j), |(a, i)| alpha[i] * p[[a, i]]);
        let g = self.gradient_at(&w);
        for (i, l) in self.learners.iter_mut().enumerate() {
            let loss: Vec<f64> = (0..arms).map(|a| -alpha[i] * g[[a, i]]).collect();
            l.update(&loss).expect("finite loss");
        }
        self.last = p.clone();
        p
    }

    fn learn_agnostic(&mut self) -> Array1<f64> {
        let u = Array1::from(self.learners[0].propose());
        let alpha = &self.view.alpha;
        let w = Array2::from_shape_fn((u.len(), alpha.len()), |(a, i)| u[a] * alpha[i]);
        let g = self.gradient_at(&w);
        let loss: Vec<f64> = g.dot(alpha).iter().map(|x| -x).collect();
        self.learners[0].update(&loss).expect("finite loss");
        self.last = u.clone().insert_axis(ndarray::Axis(1));
        u
    }

    /// Records an outcome. `subpop` is required in active, proportional and
    /// agnostic modes and ignored in oblivious mode.
    pub fn observe(&mut self, arm: usize, subpop: Option<usize>, x: f64) -> Result<(), PolicyError> {
        let (arms, j) = self.counts.dim();
        if arm >= arms {
            return Err(PolicyError::Arm(arm));
        }
        let i = if self.cfg.mode == Mode::Oblivious {
            0
        } else {
            match subpop {
                Some(i) if i < j => i,
                Some(i) => return Err(PolicyError::Subpop(i)),
                None => return Err(PolicyError::Config("subpopulation required in this mode".into())),
            }
        };
        let valid = match self.view.family {
            Family::Bernoulli => x == 0.0 || x == 1.0,
            Family::Gaussian { .. } => x.is_finite(),
        };
        if !valid {
            return Err(PolicyError::Outcome(x));
        }
        self.counts[[arm, i]] += 1;
        self.sums[[arm, i]] += x;
        self.t += 1;
        Ok(())
    }

    pub fn risk_report(&self) -> RiskReport {
        let means = self.empirical_means();
        let (lambda, challenger) = glr_min(self.weights_f64().view(), means.view(), self.view.beta.view(), &self.view.family);
        RiskReport {
            t: self.t,
            lambda,
            delta_hat: self.cfg.threshold.risk(self.t, lambda),
            recommended: answer_set_of(means.view(), &self.view.beta),
            challenger,
        }
    }

    /// Most recent learner proposal (active: cell weights; proportional:
    /// conditional arm distributions; agnostic/oblivious: arm weights).
    pub fn last_proposal(&self) -> &Array2<f64> {
        &self.last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn meta(arms: usize, alpha: Array1<f64>) -> InstanceMeta {
        InstanceMeta { arms, subpops: alpha.len(), family: Family::Bernoulli, beta: alpha.clone(), alpha }
    }

    fn report(t: u64, d: f64) -> RiskReport {
        RiskReport { t, lambda: 0.0, delta_hat: d, recommended: vec![], challenger: 1 }
    }

    #[test]
    fn first_active_decision_is_forced_control() {
        let mut p = Policy::new(&meta(3, array![0.5, 0.5]), PolicyConfig::new(PolicyKind::Tas, Mode::Active)).unwrap();
        let d = p.decide_active().unwrap();
        assert_eq!(d, Decision { arm: 0, subpop: Some(0), phase: Phase::ForcedExploration });
    }

    #[test]
    fn deficit_cell_is_tracked() {
        let m = meta(2, array![0.5, 0.5]);
        let mut p = Policy::new(&m, PolicyConfig::new(PolicyKind::Tas, Mode::Active)).unwrap();
        // hand-built counts: all cells at t * w except (1, 1)
        let w = array![[0.25, 0.25], [0.25, 0.25]];
        p.counts = array![[25, 25], [25, 24]];
        p.t = 99;
        let k = p.track(&w, 100, |k| (k / 2, k % 2), 4);
        assert_eq!(k, 3);
    }

    #[test]
    fn proportional_first_visit_forces_control() {
        let mut p = Policy::new(&meta(3, array![0.2, 0.8]), PolicyConfig::new(PolicyKind::Tas, Mode::Proportional)).unwrap();
        let d = p.decide_proportional(1).unwrap();
        assert_eq!((d.arm, d.phase), (0, Phase::ForcedExploration));
        assert_eq!(d.subpop, None);
        assert!(p.decide_proportional(2).is_err());
    }

    #[test]
    fn agnostic_first_and_degenerate() {
        let mut p = Policy::new(&meta(3, array![1.0]), PolicyConfig::new(PolicyKind::Tas, Mode::Agnostic)).unwrap();
        assert_eq!(p.decide_agnostic().unwrap().arm, 0);
        let mut solo = Policy::new(&meta(1, array![1.0]), PolicyConfig::new(PolicyKind::Tas, Mode::Agnostic)).unwrap();
        for _ in 0..20 {
            let d = solo.decide_agnostic().unwrap();
            assert_eq!(d.arm, 0);
            solo.observe(0, Some(0), 1.0).unwrap();
        }
    }

    #[test]
    fn api_enforces_mode() {
        let mut p = Policy::new(&meta(2, array![1.0]), PolicyConfig::new(PolicyKind::Tas, Mode::Agnostic)).unwrap();
        assert!(matches!(p.decide_active(), Err(PolicyError::WrongMode { .. })));
        assert!(p.observe(0, None, 1.0).is_err());
        assert!(p.observe(0, Some(0), 0.5).is_err());
        assert!(Policy::new(&meta(2, array![1.0]), PolicyConfig::new(PolicyKind::Bc, Mode::Active)).is_err());
        let mut m = meta(2, array![0.5, 0.5]);
        m.beta = array![0.2, 0.8];
        assert!(Policy::new(&m, PolicyConfig::new(PolicyKind::Tas, Mode::Oblivious)).is_err());
    }

    #[test]
    fn bc_picks_smaller_of_control_and_challenger() {
        let m = meta(3, array![1.0]);
        let mut p = Policy::new(&m, PolicyConfig::new(PolicyKind::Bc, Mode::Agnostic)).unwrap();
        p.counts = array![[10], [30], [30]];
        p.sums = array![[5.0], [18.0], [3.0]];
        p.t = 70;
        // challenger is arm 1 (closest to the control); control is behind
        let d = p.decide_agnostic().unwrap();
        assert_eq!(d.arm, 0);
        p.counts = array![[40], [30], [30]];
        p.sums = array![[20.0], [18.0], [3.0]];
        p.t = 100;
        assert_eq!(p.decide_agnostic().unwrap().arm, 1);
    }

    #[test]
    fn uniform_schedules() {
        let mut p = Policy::new(&meta(3, array![1.0]), PolicyConfig::new(PolicyKind::Uniform, Mode::Agnostic)).unwrap();
        for t in 0..9 {
            let d = p.decide_agnostic().unwrap();
            assert_eq!(d.arm, t % 3);
            p.observe(d.arm, Some(0), 0.0).unwrap();
        }
        assert_eq!(p.arm_counts(), array![3, 3, 3]);
        let mut p = Policy::new(&meta(2, array![0.5, 0.5]), PolicyConfig::new(PolicyKind::Uniform, Mode::Active)).unwrap();
        let mut seen = Vec::new();
        for _ in 0..4 {
            let d = p.decide_active().unwrap();
            seen.push((d.arm, d.subpop.unwrap()));
            p.observe(d.arm, d.subpop, 1.0).unwrap();
        }
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn risk_report_examples() {
        let th = Threshold::Stylized;
        assert_eq!(th.risk(5, 0.0), 1.0);
        assert_relative_eq!(th.risk(1, 20f64.ln()), 0.05, epsilon = 1e-15);
        assert_eq!(th.risk(50, (1.0 + 50f64.ln()).ln()), 1.0);
        assert_relative_eq!(Threshold::Theory.risk(10, 12.0), 100.0 * (-10f64).exp(), max_relative = 1e-12);

        let p = Policy::new(&meta(2, array![0.5, 0.5]), PolicyConfig::new(PolicyKind::Tas, Mode::Agnostic)).unwrap();
        let r = p.risk_report();
        assert_eq!((r.t, r.lambda, r.delta_hat), (0, 0.0, 1.0));
    }

    #[test]
    fn risk_is_one_until_relevant_cells_observed() {
        let mut p = Policy::new(&meta(2, array![0.5, 0.5]), PolicyConfig::new(PolicyKind::Tas, Mode::Active)).unwrap();
        for _ in 0..50 {
            p.observe(0, Some(0), 1.0).unwrap();
            p.observe(1, Some(0), 0.0).unwrap();
            p.observe(0, Some(1), 1.0).unwrap();
        }
        assert_eq!(p.risk_report().delta_hat, 1.0);
        p.observe(1, Some(1), 0.0).unwrap();
        assert!(p.risk_report().delta_hat < 1.0);
    }

    #[test]
    fn stopping_time_examples() {
        let trace = vec![report(1, 1.0), report(2, 0.5), report(3, 0.09)];
        assert_eq!(stopping_time(&trace, 0.1), Some(3));
        assert_eq!(stopping_time(&trace[..2], 0.1), None);
        assert_eq!(stopping_time(&trace, 1.0), Some(1));
    }
}
