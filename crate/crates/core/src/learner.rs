//! AdaHedge: exponential weights with a learning rate tuned from the
//! cumulative mixability gap. No horizon, range or rate parameters.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("loss vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("loss entry {index} is not finite")]
    NotFinite { index: usize },
}

#[derive(Debug, Clone)]
pub struct AdaHedge {
    cum_loss: Vec<f64>,
    gap: f64,
    rounds: u64,
}

impl AdaHedge {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "AdaHedge needs at least one expert");
        AdaHedge { cum_loss: vec![0.0; dim], gap: 0.0, rounds: 0 }
    }

    pub fn dim(&self) -> usize {
        self.cum_loss.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Cumulative mixability gap.
    pub fn mixability_gap(&self) -> f64 {
        self.gap
    }

    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cum_loss
    }

    /// Current learning rate; `f64::INFINITY` before any positive gap.
    pub fn eta(&self) -> f64 {
        if self.dim() == 1 {
            return 0.0;
        }
        if self.gap > 0.0 {
            (self.dim() as f64).ln() / self.gap
        } else {
            f64::INFINITY
        }
    }

    pub fn propose(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.dim()];
        self.propose_into(&mut w);
        w
    }

    pub fn propose_into(&self, out: &mut [f64]) {
        weights_at(&self.cum_loss, self.eta(), out);
    }

    pub fn update(&mut self, loss: &[f64]) -> Result<(), LearnerError> {
        if loss.len() != self.dim() {
            return Err(LearnerError::Dimension { expected: self.dim(), got: loss.len() });
        }
        if let Some(index) = loss.iter().position(|x| !x.is_finite()) {
            return Err(LearnerError::NotFinite { index });
        }
        let eta = self.eta();
        let mut w = vec![0.0; self.dim()];
        weights_at(&self.cum_loss, eta, &mut w);
        let expected: f64 = w.iter().zip(loss).map(|(p, l)| p * l).sum();
        let mix = if eta.is_infinite() {
            loss.iter().zip(&w).filter(|(_, &p)| p > 0.0).map(|(l, _)| *l).fold(f64::INFINITY, f64::min)
        } else if eta == 0.0 {
            expected
        } else {
            let lmin = loss.iter().copied().fold(f64::INFINITY, f64::min);
            let s: f64 = w.iter().zip(loss).map(|(p, l)| p * (-eta * (l - lmin)).exp()).sum();
            lmin - s.ln() / eta
        };
        self.gap += (expected - mix).max(0.0);
        for (c, l) in self.cum_loss.iter_mut().zip(loss) {
            *c += l;
        }
        self.rounds += 1;
        Ok(())
    }
}

fn weights_at(cum: &[f64], eta: f64, out: &mut [f64]) {
    let lmin = cum.iter().copied().fold(f64::INFINITY, f64::min);
    if eta.is_infinite() {
        let n = cum.iter().filter(|&&c| c == lmin).count() as f64;
        for (o, &c) in out.iter_mut().zip(cum) {
            *o = if c == lmin { 1.0 / n } else { 0.0 };
        }
        return;
    }
    let mut s = 0.0;
    for (o, &c) in out.iter_mut().zip(cum) {
        *o = (-eta * (c - lmin)).exp();
        s += *o;
    }
    for o in out.iter_mut() {
        *o /= s;
    }
}
