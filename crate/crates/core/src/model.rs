//! Bandit instances, interaction modes and sampling-weight matrices.
//!
//! Row 0 of every means matrix is the control arm; rows `1..=K` are the
//! treatments. Columns are subpopulations.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expfam::Family;

pub const SIMPLEX_TOL: f64 = 1e-12;
pub const IDENTIFIABILITY_TOL: f64 = 1e-12;
pub const NEAR_BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("unsupported transform: {0}")]
    UnsupportedTransform(&'static str),
    #[error("mode {mode} not available for this instance: {reason}")]
    ModeUnavailable { mode: Mode, reason: &'static str },
    #[error("cannot parse instance: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Who chooses and who observes the subpopulation in each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// The learner picks the subpopulation.
    Active,
    /// The subpopulation is revealed before the arm is chosen.
    Proportional,
    /// The subpopulation is revealed after the arm is chosen.
    Agnostic,
    /// The subpopulation is never revealed.
    Oblivious,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Active, Mode::Proportional, Mode::Agnostic, Mode::Oblivious];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Active => "active",
            Mode::Proportional => "proportional",
            Mode::Agnostic => "agnostic",
            Mode::Oblivious => "oblivious",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "active" => Ok(Mode::Active),
            "proportional" | "prop" => Ok(Mode::Proportional),
            "agnostic" => Ok(Mode::Agnostic),
            "oblivious" => Ok(Mode::Oblivious),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

/// Everything about an instance except its means: what a learner is allowed
/// to know.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub arms: usize,
    pub subpops: usize,
    pub family: Family,
    pub alpha: Array1<f64>,
    pub beta: Array1<f64>,
}

impl InstanceMeta {
    /// Number of treatment arms (excluding the control).
    pub fn k(&self) -> usize {
        self.arms - 1
    }

    pub fn alpha_equals_beta(&self) -> bool {
        self.alpha.iter().zip(self.beta.iter()).all(|(a, b)| (a - b).abs() <= SIMPLEX_TOL)
    }

    pub fn check_mode(&self, mode: Mode) -> Result<(), ModelError> {
        if mode == Mode::Oblivious {
            if !self.alpha_equals_beta() {
                return Err(ModelError::ModeUnavailable { mode, reason: "requires alpha == beta" });
            }
            if !self.family.is_bernoulli() {
                return Err(ModelError::ModeUnavailable { mode, reason: "requires the Bernoulli family" });
            }
        }
        Ok(())
    }
}

/// A validated bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    meta: InstanceMeta,
    means: Array2<f64>,
}

impl Instance {
    pub fn new(
        means: Array2<f64>,
        family: Family,
        alpha: Array1<f64>,
        beta: Array1<f64>,
    ) -> Result<Self, ModelError> {
        let (arms, subpops) = means.dim();
        let inst = Instance { meta: InstanceMeta { arms, subpops, family, alpha, beta }, means };
        let diag = inst.diagnostics();
        if diag.errors.is_empty() {
            Ok(inst)
        } else {
            Err(ModelError::Invalid(diag.errors))
        }
    }

    /// Instance with `beta = alpha`.
    pub fn with_alpha(means: Array2<f64>, family: Family, alpha: Array1<f64>) -> Result<Self, ModelError> {
        let beta = alpha.clone();
        Instance::new(means, family, alpha, beta)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let spec: InstanceSpec = serde_json::from_str(s)?;
        spec.into_instance()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Instance::from_json_str(&text)
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }
    pub fn means(&self) -> ArrayView2<'_, f64> {
        self.means.view()
    }
    pub fn family(&self) -> &Family {
        &self.meta.family
    }
    pub fn alpha(&self) -> &Array1<f64> {
        &self.meta.alpha
    }
    pub fn beta(&self) -> &Array1<f64> {
        &self.meta.beta
    }
    /// Number of treatment arms.
    pub fn k(&self) -> usize {
        self.meta.arms - 1
    }
    /// Number of subpopulations.
    pub fn j(&self) -> usize {
        self.meta.subpops
    }
    pub fn arms(&self) -> usize {
        self.meta.arms
    }

    pub fn weighted_mean(&self, arm: usize) -> f64 {
        self.means.row(arm).dot(&self.meta.beta)
    }

    pub fn weighted_means(&self) -> Array1<f64> {
        self.means.dot(&self.meta.beta)
    }

    /// Arms whose weighted mean strictly exceeds the control's.
    pub fn answer_set(&self) -> Vec<usize> {
        answer_set_of(self.means.view(), &self.meta.beta)
    }

    /// `gaps[b - 1] = mu_0 - mu_b`.
    pub fn gaps(&self) -> Array1<f64> {
        let m = self.weighted_means();
        m.slice(ndarray::s![1..]).mapv(|x| m[0] - x)
    }

    /// Reflects every arm above the control to the other side of it, turning
    /// the problem into one where the control is the best arm.
    pub fn abc_to_bai(&self) -> Result<Instance, ModelError> {
        if !self.meta.family.is_gaussian() {
            return Err(ModelError::UnsupportedTransform("requires the Gaussian family"));
        }
        if self.j() != 1 {
            return Err(ModelError::UnsupportedTransform("requires a single subpopulation"));
        }
        if self.meta.family.common_variance().is_none() {
            return Err(ModelError::UnsupportedTransform("requires a common variance"));
        }
        let mut means = self.means.clone();
        let c = means[[0, 0]];
        for a in 1..self.arms() {
            if means[[a, 0]] > c {
                means[[a, 0]] = 2.0 * c - means[[a, 0]];
            }
        }
        Ok(Instance { meta: self.meta.clone(), means })
    }

    /// The single-population instance whose arms are the `alpha`-mixtures of
    /// the original rows. Only meaningful for Bernoulli with `alpha == beta`.
    pub fn collapsed(&self) -> Result<Instance, ModelError> {
        self.meta.check_mode(Mode::Oblivious)?;
        let mixed = self.means.dot(&self.meta.alpha);
        let means = mixed.insert_axis(Axis(1));
        Ok(Instance {
            meta: InstanceMeta {
                arms: self.arms(),
                subpops: 1,
                family: Family::Bernoulli,
                alpha: Array1::ones(1),
                beta: Array1::ones(1),
            },
            means,
        })
    }

    pub fn with_means(&self, means: Array2<f64>) -> Result<Instance, ModelError> {
        Instance::new(means, self.meta.family.clone(), self.meta.alpha.clone(), self.meta.beta.clone())
    }

    pub fn diagnostics(&self) -> Diagnostics {
        validate_parts(self.means.view(), &self.meta.family, &self.meta.alpha, &self.meta.beta)
    }

    pub fn to_spec(&self) -> InstanceSpec {
        let family = match &self.meta.family {
            Family::Bernoulli => FamilySpec::Named(FamilyName::Bernoulli),
            Family::Gaussian { sigma2 } => FamilySpec::Gaussian {
                gaussian: GaussianSpec { sigma2: Some(Sigma2Spec::Matrix(rows_of(sigma2.view()))) },
            },
        };
        InstanceSpec {
            k: self.k(),
            j: self.j(),
            family,
            means: rows_of(self.means.view()),
            alpha: self.meta.alpha.to_vec(),
            beta: Some(self.meta.beta.to_vec()),
        }
    }
}

fn rows_of(m: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Answer set for an arbitrary means matrix.
pub fn answer_set_of(means: ArrayView2<'_, f64>, beta: &Array1<f64>) -> Vec<usize> {
    let m = means.dot(beta);
    (1..m.len()).filter(|&a| m[a] > m[0]).collect()
}

/// Validation outcome. Errors make the instance unusable; warnings flag
/// instances on or near the boundary of identifiability.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty() && self.warnings.is_empty()
    }
}

fn validate_parts(means: ArrayView2<'_, f64>, family: &Family, alpha: &Array1<f64>, beta: &Array1<f64>) -> Diagnostics {
    let mut d = Diagnostics::default();
    let (arms, j) = means.dim();
    if arms == 0 || j == 0 {
        d.errors.push("means must have at least one row and one column".into());
        return d;
    }
    if alpha.len() != j {
        d.errors.push(format!("alpha has length {}, expected {j}", alpha.len()));
    }
    if beta.len() != j {
        d.errors.push(format!("beta has length {}, expected {j}", beta.len()));
    }
    if !d.errors.is_empty() {
        return d;
    }
    if means.iter().any(|x| !x.is_finite()) {
        d.errors.push("means must be finite".into());
    }
    if alpha.iter().chain(beta.iter()).any(|x| !x.is_finite()) {
        d.errors.push("alpha and beta must be finite".into());
    }
    if alpha.iter().any(|&a| a < 0.0) || (alpha.sum() - 1.0).abs() > SIMPLEX_TOL {
        d.errors.push("alpha not on simplex".into());
    }
    if beta.iter().all(|&b| b == 0.0) {
        d.errors.push("beta has no nonzero entry".into());
    }
    for i in 0..j {
        if alpha[i] == 0.0 && beta[i] != 0.0 {
            d.errors.push(format!("subpopulation {i} has zero frequency but nonzero importance"));
        }
    }
    match family {
        Family::Bernoulli => {
            if means.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                d.errors.push("Bernoulli means must lie in [0, 1]".into());
            }
        }
        Family::Gaussian { sigma2 } => {
            if sigma2.dim() != (arms, j) {
                d.errors.push(format!("sigma2 has shape {:?}, expected {:?}", sigma2.dim(), (arms, j)));
            } else if sigma2.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
                d.errors.push("variances must be strictly positive".into());
            }
        }
    }
    if !d.errors.is_empty() {
        return d;
    }
    let m = means.dot(beta);
    for a in 1..arms {
        let gap = (m[a] - m[0]).abs();
        if gap < IDENTIFIABILITY_TOL {
            d.warnings.push(format!("arm {a} has the same weighted mean as the control (not identifiable)"));
        } else if gap < NEAR_BOUNDARY_TOL {
            d.warnings.push(format!("arm {a} is within {NEAR_BOUNDARY_TOL:e} of the control (near the identifiability boundary)"));
        }
    }
    d
}

/// JSON form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub j: usize,
    pub family: FamilySpec,
    pub means: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    Named(FamilyName),
    Gaussian { gaussian: GaussianSpec },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianSpec {
    #[serde(default)]
    pub sigma2: Option<Sigma2Spec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma2Spec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

fn matrix(rows: &[Vec<f64>], what: &str, errors: &mut Vec<String>) -> Option<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        errors.push(format!("{what} rows have unequal lengths"));
        return None;
    }
    Some(Array2::from_shape_fn((n, m), |(a, i)| rows[a][i]))
}

type Parts = (Array2<f64>, Family, Array1<f64>, Array1<f64>);

impl InstanceSpec {
    /// Builds the matrices without rejecting anything beyond shape problems.
    fn parts(&self) -> Result<Parts, Vec<String>> {
        let mut errors = Vec::new();
        let means = matrix(&self.means, "means", &mut errors);
        if let Some(m) = &means {
            if m.dim() != (self.k + 1, self.j) {
                errors.push(format!("means has shape {:?}, expected ({}, {})", m.dim(), self.k + 1, self.j));
            }
        }
        let family = match &self.family {
            FamilySpec::Named(FamilyName::Bernoulli) => Some(Family::Bernoulli),
            FamilySpec::Named(FamilyName::Gaussian) | FamilySpec::Gaussian { gaussian: GaussianSpec { sigma2: None } } => {
                Some(Family::gaussian_homoscedastic(self.k + 1, self.j, 1.0))
            }
            FamilySpec::Gaussian { gaussian: GaussianSpec { sigma2: Some(Sigma2Spec::Scalar(s)) } } => {
                Some(Family::gaussian_homoscedastic(self.k + 1, self.j, *s))
            }
            FamilySpec::Gaussian { gaussian: GaussianSpec { sigma2: Some(Sigma2Spec::Matrix(rows)) } } => {
                matrix(rows, "sigma2", &mut errors).map(|sigma2| Family::Gaussian { sigma2 })
            }
        };
        let alpha = Array1::from(self.alpha.clone());
        let beta = Array1::from(self.beta.clone().unwrap_or_else(|| self.alpha.clone()));
        match (means, family) {
            (Some(m), Some(f)) if errors.is_empty() => Ok((m, f, alpha, beta)),
            _ => Err(errors),
        }
    }

    /// Hard errors and warnings; never fails.
    pub fn validate(&self) -> Diagnostics {
        match self.parts() {
            Ok((m, f, a, b)) => validate_parts(m.view(), &f, &a, &b),
            Err(errors) => Diagnostics { errors, warnings: Vec::new() },
        }
    }

    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let (m, f, a, b) = self.parts().map_err(ModelError::Invalid)?;
        Instance::new(m, f, a, b)
    }
}

/// Free-standing validation of a JSON instance.
pub fn validate(spec: &InstanceSpec) -> Diagnostics {
    spec.validate()
}

/// A point of the `(K+1) x J` simplex: sampling proportions per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(pub Array2<f64>);

impl WeightMatrix {
    pub fn uniform(arms: usize, subpops: usize) -> Self {
        WeightMatrix(Array2::from_elem((arms, subpops), 1.0 / (arms * subpops) as f64))
    }

    /// `w[a, i] = u[a] * alpha[i]`.
    pub fn agnostic(u: &Array1<f64>, alpha: &Array1<f64>) -> Self {
        WeightMatrix(Array2::from_shape_fn((u.len(), alpha.len()), |(a, i)| u[a] * alpha[i]))
    }

    /// `w[a, i] = alpha[i] * p[a, i]` for column-stochastic `p`.
    pub fn proportional(conditional: &Array2<f64>, alpha: &Array1<f64>) -> Self {
        let mut w = conditional.clone();
        for (mut col, &a) in w.columns_mut().into_iter().zip(alpha.iter()) {
            col *= a;
        }
        WeightMatrix(w)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn arm_marginals(&self) -> Array1<f64> {
        self.0.sum_axis(Axis(1))
    }

    pub fn subpop_marginals(&self) -> Array1<f64> {
        self.0.sum_axis(Axis(0))
    }

    pub fn sup_distance(&self, other: &WeightMatrix) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn is_simplex(&self, tol: f64) -> bool {
        self.0.iter().all(|&x| x >= -tol) && (self.0.sum() - 1.0).abs() <= tol
    }

    /// Membership in the constraint set of `mode` (oblivious uses the
    /// agnostic constraints).
    pub fn is_feasible(&self, mode: Mode, alpha: &Array1<f64>, tol: f64) -> bool {
        if !self.is_simplex(tol) {
            return false;
        }
        match mode {
            Mode::Active => true,
            Mode::Proportional => self
                .subpop_marginals()
                .iter()
                .zip(alpha.iter())
                .all(|(s, a)| (s - a).abs() <= tol),
            Mode::Agnostic | Mode::Oblivious => {
                let u = self.arm_marginals();
                self.0
                    .indexed_iter()
                    .all(|((a, i), &w)| (w - u[a] * alpha[i]).abs() <= tol)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn stratified() -> Instance {
        Instance::new(
            array![[0.1, 0.4, 0.3], [0.2, 0.5, 0.2], [0.5, 0.1, 0.1]],
            Family::Bernoulli,
            array![0.4, 0.5, 0.1],
            Array1::from_elem(3, 1.0 / 3.0),
        )
        .unwrap()
    }

    fn seasonal() -> Instance {
        Instance::with_alpha(
            array![
                [0.0296, 0.0372, 0.0588, 0.0620],
                [0.0300, 0.0373, 0.0596, 0.0626],
                [0.0295, 0.0373, 0.0591, 0.0630]
            ],
            Family::Bernoulli,
            array![0.1958, 0.2950, 0.2813, 0.2279],
        )
        .unwrap()
    }

    fn gaussian_single(means: &[f64]) -> Instance {
        let m = Array2::from_shape_vec((means.len(), 1), means.to_vec()).unwrap();
        Instance::with_alpha(m, Family::gaussian_homoscedastic(means.len(), 1, 1.0), array![1.0]).unwrap()
    }

    #[test]
    fn weighted_mean_examples() {
        let one = gaussian_single(&[0.25, 0.5]);
        assert_eq!(one.weighted_mean(1), 0.5);
        assert_relative_eq!(stratified().weighted_mean(0), 0.8 / 3.0, epsilon = 1e-12);
        // 0.1958*0.03 + 0.295*0.0373 + 0.2813*0.0596 + 0.2279*0.0626
        assert_relative_eq!(seasonal().weighted_mean(1), 0.047_909_52, epsilon = 1e-12);
    }

    #[test]
    fn answer_set_examples() {
        let m = array![[0.2, 0.3], [0.3, 0.4], [0.2, 0.3]];
        let inst = Instance::with_alpha(m, Family::Bernoulli, array![0.5, 0.5]).unwrap();
        assert_eq!(inst.answer_set(), vec![1]);
        assert_eq!(stratified().answer_set(), vec![1]);
        assert_eq!(seasonal().answer_set(), vec![1, 2]);
    }

    #[test]
    fn gaps_examples() {
        let g = stratified().gaps();
        assert_relative_eq!(g[0], -0.1 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 0.1 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(gaussian_single(&[0.5, 0.3]).gaps()[0], 0.2, epsilon = 1e-15);
        assert_eq!(gaussian_single(&[0.5, 0.5]).gaps()[0], 0.0);
    }

    #[test]
    fn abc_to_bai_examples() {
        let below = gaussian_single(&[0.5, 0.2, 0.1]);
        assert_eq!(below.abc_to_bai().unwrap(), below);
        let t = gaussian_single(&[0.5, 0.7]).abc_to_bai().unwrap();
        assert_relative_eq!(t.means()[[1, 0]], 0.3, epsilon = 1e-15);
        let src = gaussian_single(&[0.5, 0.7, 0.2]);
        let t = src.abc_to_bai().unwrap();
        assert_relative_eq!(t.means()[[1, 0]], 0.3, epsilon = 1e-15);
        assert_eq!(t.means()[[2, 0]], 0.2);
        for (a, b) in t.gaps().iter().zip(src.gaps().iter()) {
            assert_relative_eq!(*a, b.abs(), epsilon = 1e-15);
        }
        assert!(matches!(stratified().abc_to_bai(), Err(ModelError::UnsupportedTransform(_))));
    }

    #[test]
    fn validate_examples() {
        let ok = InstanceSpec {
            k: 1,
            j: 2,
            family: FamilySpec::Named(FamilyName::Bernoulli),
            means: vec![vec![0.2, 0.3], vec![0.4, 0.5]],
            alpha: vec![0.5, 0.5],
            beta: None,
        };
        assert!(validate(&ok).is_clean());
        let mut bad = ok.clone();
        bad.alpha = vec![0.6, 0.6];
        assert!(validate(&bad).errors.iter().any(|e| e == "alpha not on simplex"));
        let mut tie = ok.clone();
        tie.means = vec![vec![0.2, 0.3], vec![0.2, 0.3]];
        let d = validate(&tie);
        assert!(d.errors.is_empty());
        assert_eq!(d.warnings.len(), 1);
        let mut hidden = ok.clone();
        hidden.alpha = vec![1.0, 0.0];
        hidden.beta = Some(vec![0.5, 0.5]);
        assert!(!validate(&hidden).errors.is_empty());
        let mut shape = ok;
        shape.means = vec![vec![0.2, 0.3]];
        assert!(!validate(&shape).errors.is_empty());
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let text = r#"{"K":1,"J":2,"family":{"gaussian":{"sigma2":2.0}},"means":[[0,1],[1,2]],"alpha":[0.25,0.75]}"#;
        let inst = Instance::from_json_str(text).unwrap();
        assert_eq!(inst.beta(), &array![0.25, 0.75]);
        assert_eq!(inst.family().cell(1, 1), crate::expfam::CellFamily::Gaussian { sigma2: 2.0 });
        let again = serde_json::to_string(&inst.to_spec()).unwrap();
        assert_eq!(Instance::from_json_str(&again).unwrap(), inst);
        let plain = r#"{"K":1,"J":1,"family":"gaussian","means":[[0],[1]],"alpha":[1]}"#;
        assert_eq!(Instance::from_json_str(plain).unwrap().family().common_variance(), Some(1.0));
        let bern = r#"{"K":1,"J":1,"family":"bernoulli","means":[[0.1],[1.5]],"alpha":[1]}"#;
        assert!(matches!(Instance::from_json_str(bern), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn oblivious_requires_alpha_equal_beta() {
        assert!(stratified().meta().check_mode(Mode::Oblivious).is_err());
        assert!(seasonal().meta().check_mode(Mode::Oblivious).is_ok());
        let c = seasonal().collapsed().unwrap();
        assert_eq!(c.j(), 1);
        assert_relative_eq!(c.means()[[1, 0]], seasonal().weighted_mean(1), epsilon = 1e-15);
    }

    #[test]
    fn mode_parsing() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
        assert!("passive".parse::<Mode>().is_err());
    }

    fn simplex(n: usize) -> impl Strategy<Value = Array1<f64>> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum();
            Array1::from(v) / s
        })
    }

    proptest! {
        #[test]
        fn answer_set_shift_invariant(means in prop::collection::vec(-5.0f64..5.0, 6), c in -10.0f64..10.0) {
            let m = Array2::from_shape_vec((3, 2), means).unwrap();
            let inst = Instance::with_alpha(m.clone(), Family::gaussian_homoscedastic(3, 2, 1.0), ndarray::array![0.3, 0.7]).unwrap();
            let shifted = inst.with_means(m + c).unwrap();
            // shifting changes rounding only at ties
            prop_assume!(inst.gaps().iter().all(|g| g.abs() > 1e-9));
            prop_assert_eq!(inst.answer_set(), shifted.answer_set());
        }

        #[test]
        fn abc_to_bai_control_is_best(means in prop::collection::vec(-5.0f64..5.0, 4)) {
            let inst = gaussian_single(&means);
            let t = inst.abc_to_bai().unwrap();
            prop_assert!(t.answer_set().is_empty());
            prop_assert_eq!(t.abc_to_bai().unwrap(), t);
        }

        #[test]
        fn constraint_sets_are_nested(u in simplex(3), alpha in simplex(4), cond in prop::collection::vec(simplex(3), 4)) {
            let w = WeightMatrix::agnostic(&u, &alpha);
            prop_assert!(w.is_feasible(Mode::Agnostic, &alpha, 1e-12));
            prop_assert!(w.is_feasible(Mode::Proportional, &alpha, 1e-12));
            prop_assert!(w.is_feasible(Mode::Active, &alpha, 1e-12));
            let p = Array2::from_shape_fn((3, 4), |(a, i)| cond[i][a]);
            let w = WeightMatrix::proportional(&p, &alpha);
            prop_assert!(w.is_feasible(Mode::Proportional, &alpha, 1e-12));
            prop_assert!(w.is_feasible(Mode::Active, &alpha, 1e-12));
        }
    }
}
