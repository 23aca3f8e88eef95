//! Event logs: `subpopulation,arm,outcome` CSV files turned into per-cell
//! pools for replay, plus a writer for synthetic logs.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expfam::Family;
use crate::model::{Instance, ModelError};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("expected header 'subpopulation,arm,outcome', found '{0}'")]
    Header(String),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("log contains no rows")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    #[default]
    Bernoulli,
    Gaussian,
}

/// Logged outcomes grouped by (arm, subpopulation).
#[derive(Debug, Clone)]
pub struct ReplayData {
    arms: usize,
    subpops: usize,
    kind: OutcomeKind,
    pools: Vec<Vec<f64>>,
    alpha: Array1<f64>,
}

#[derive(Deserialize)]
struct Row {
    subpopulation: String,
    arm: String,
    outcome: String,
}

impl ReplayData {
    /// Parses a log. `dims = Some((arms, subpops))` rejects ids outside the
    /// expected ranges; otherwise the ranges are inferred.
    pub fn parse<R: Read>(reader: R, kind: OutcomeKind, dims: Option<(usize, usize)>) -> Result<Self, LogError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if header != ["subpopulation", "arm", "outcome"] {
            return Err(LogError::Header(header.join(",")));
        }
        let mut rows: Vec<(usize, usize, f64)> = Vec::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec.map_err(|e| LogError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rows.len() as u64 + 2;
            let err = |msg: String| LogError::Parse { line, msg };
            let subpop: usize = row.subpopulation.parse().map_err(|_| err(format!("bad subpopulation '{}'", row.subpopulation)))?;
            let arm: usize = row.arm.parse().map_err(|_| err(format!("bad arm '{}'", row.arm)))?;
            let x: f64 = row.outcome.parse().map_err(|_| err(format!("non-numeric outcome '{}'", row.outcome)))?;
            match kind {
                OutcomeKind::Bernoulli if x != 0.0 && x != 1.0 => {
                    return Err(err(format!("outcome {x} is not 0 or 1")));
                }
                OutcomeKind::Gaussian if !x.is_finite() => return Err(err(format!("outcome {x} is not finite"))),
                _ => {}
            }
            if let Some((a, j)) = dims {
                if arm >= a {
                    return Err(err(format!("unknown arm {arm}")));
                }
                if subpop >= j {
                    return Err(err(format!("unknown subpopulation {subpop}")));
                }
            }
            rows.push((subpop, arm, x));
        }
        if rows.is_empty() {
            return Err(LogError::Empty);
        }
        let (arms, subpops) = dims.unwrap_or_else(|| {
            let a = rows.iter().map(|r| r.1).max().unwrap_or(0) + 1;
            let j = rows.iter().map(|r| r.0).max().unwrap_or(0) + 1;
            (a, j)
        });
        let mut pools = vec![Vec::new(); arms * subpops];
        let mut per_subpop = vec![0usize; subpops];
        for &(i, a, x) in &rows {
            pools[a * subpops + i].push(x);
            per_subpop[i] += 1;
        }
        let n = rows.len() as f64;
        let alpha = per_subpop.iter().map(|&c| c as f64 / n).collect();
        Ok(ReplayData { arms, subpops, kind, pools, alpha })
    }

    pub fn load(path: impl AsRef<Path>, kind: OutcomeKind, dims: Option<(usize, usize)>) -> Result<Self, LogError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| LogError::Io { path: path.display().to_string(), source })?;
        ReplayData::parse(std::io::BufReader::new(file), kind, dims)
    }

    pub fn arms(&self) -> usize {
        self.arms
    }
    pub fn subpops(&self) -> usize {
        self.subpops
    }
    pub fn kind(&self) -> OutcomeKind {
        self.kind
    }
    pub fn pool(&self, arm: usize, subpop: usize) -> &[f64] {
        &self.pools[arm * self.subpops + subpop]
    }
    /// Empirical subpopulation frequencies.
    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }
    /// Total number of logged observations.
    pub fn capacity(&self) -> usize {
        self.pools.iter().map(Vec::len).sum()
    }

    pub fn pool_sizes(&self) -> Array2<usize> {
        Array2::from_shape_fn((self.arms, self.subpops), |(a, i)| self.pool(a, i).len())
    }

    /// Per-cell empirical means (midpoint of the domain for empty cells).
    pub fn means(&self) -> Array2<f64> {
        let empty = match self.kind {
            OutcomeKind::Bernoulli => 0.5,
            OutcomeKind::Gaussian => 0.0,
        };
        Array2::from_shape_fn((self.arms, self.subpops), |(a, i)| {
            let p = self.pool(a, i);
            if p.is_empty() {
                empty
            } else {
                p.iter().sum::<f64>() / p.len() as f64
            }
        })
    }

    /// Instance with the empirical means and frequencies, importance equal
    /// to the frequencies. Gaussian variances are per-cell sample variances
    /// (1 where fewer than two observations exist).
    pub fn instance(&self) -> Result<Instance, LogError> {
        let means = self.means();
        let family = match self.kind {
            OutcomeKind::Bernoulli => Family::Bernoulli,
            OutcomeKind::Gaussian => Family::Gaussian {
                sigma2: Array2::from_shape_fn((self.arms, self.subpops), |(a, i)| {
                    let p = self.pool(a, i);
                    if p.len() < 2 {
                        return 1.0;
                    }
                    let m = means[[a, i]];
                    let v = p.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (p.len() - 1) as f64;
                    if v > 0.0 {
                        v
                    } else {
                        1.0
                    }
                }),
            },
        };
        Ok(Instance::with_alpha(means, family, self.alpha.clone())?)
    }
}

/// Writes `rows` synthetic log lines: subpopulation drawn from the instance
/// frequencies, arm uniformly at random, outcome from the cell's law.
pub fn write_synthetic_log<W: Write, R: Rng>(out: W, inst: &Instance, rows: usize, rng: &mut R) -> Result<(), LogError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subpopulation", "arm", "outcome"])?;
    let subpops = WeightedIndex::new(inst.alpha().iter().copied()).expect("alpha is a distribution");
    for _ in 0..rows {
        let i = subpops.sample(rng);
        let a = rng.gen_range(0..inst.arms());
        let x = inst.family().cell(a, i).sample(inst.means()[[a, i]], rng).expect("valid means");
        w.write_record([i.to_string().as_str(), a.to_string().as_str(), format_outcome(x).as_str()])?;
    }
    w.flush().map_err(|e| LogError::Io { path: "<log>".into(), source: e })?;
    Ok(())
}

/// Integers are written without a decimal point.
fn format_outcome(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}
