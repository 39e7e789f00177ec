//! Quadratic kurtosis-on-skewness panel regressions.
//!
//! Four nested specifications, numbered as in the published tables (there is
//! no model 10):
//!
//! | Model | Regressors (plus constant)        |
//! |-------|-----------------------------------|
//! | M7    | S²                                |
//! | M8    | S², S                             |
//! | M9    | S², S, S²·D                       |
//! | M11   | S², S, S²·D, D                    |
//!
//! Each is fitted by pooled OLS ([`fit_pooled_ols`]) and by one-way
//! Swamy-Arora random effects ([`fit_random_effects`]). Joint restrictions are
//! tested with a Wald chi-square ([`wald_joint_test`]) or, for OLS, the
//! equivalent F form ([`f_joint_test`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::MomentPanel;

mod joint;
mod linalg;
mod ols;
mod random_effects;
mod report;

pub use joint::{f_joint_test, wald_joint_test, TestKind, TestResult};
pub use ols::fit_pooled_ols;
pub use random_effects::fit_random_effects;
pub use report::{fit_models, significance_stars, FitsReport, ModelFit, ModelFitError, NamedTest};

/// Coefficient names as they appear in design matrices and fit output.
pub mod terms {
    pub const SKEW_SQ: &str = "skew_sq";
    pub const SKEW: &str = "skew";
    pub const SKEW_SQ_X_COVID: &str = "skew_sq_x_covid";
    pub const COVID: &str = "covid";
    pub const CONST: &str = "const";
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("panel has no records")]
    EmptyPanel,
    #[error("record {row} has a non-finite skewness or kurtosis")]
    NonFiniteValue { row: usize },
    #[error("design is rank deficient; collinear terms: {}", .terms.join(", "))]
    RankDeficient { terms: Vec<String> },
    #[error("need more rows than coefficients (rows {rows}, coefficients {coefs})")]
    TooFewRows { rows: usize, coefs: usize },
    #[error("random effects needs at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("unknown term '{0}'")]
    UnknownTerm(String),
    #[error("no terms selected for the joint test")]
    EmptyTerms,
    #[error("covariance of the tested terms is singular")]
    SingularSubcovariance,
    #[error("the F form of the joint test requires a pooled OLS fit")]
    WrongEstimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Model {
    M7,
    M8,
    M9,
    M11,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::M7, Model::M8, Model::M9, Model::M11];

    /// Regressors in column order; the constant is appended last.
    pub fn regressors(self) -> &'static [&'static str] {
        use terms::*;
        match self {
            Model::M7 => &[SKEW_SQ],
            Model::M8 => &[SKEW_SQ, SKEW],
            Model::M9 => &[SKEW_SQ, SKEW, SKEW_SQ_X_COVID],
            Model::M11 => &[SKEW_SQ, SKEW, SKEW_SQ_X_COVID, COVID],
        }
    }

    pub fn has_interaction(self) -> bool {
        matches!(self, Model::M9 | Model::M11)
    }

    pub fn number(self) -> u32 {
        match self {
            Model::M7 => 7,
            Model::M8 => 8,
            Model::M9 => 9,
            Model::M11 => 11,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.number())
    }
}

impl FromStr for Model {
    type Err = String;

    /// Accepts `7`, `M7`, `m7` or `(7)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s
            .trim()
            .trim_start_matches(['M', 'm', '('])
            .trim_end_matches(')');
        match t {
            "7" => Ok(Model::M7),
            "8" => Ok(Model::M8),
            "9" => Ok(Model::M9),
            "11" => Ok(Model::M11),
            _ => Err(format!("unknown model '{s}' (expected one of 7, 8, 9, 11)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub model: Model,
    /// Always true: the published tables report a constant.
    pub include_intercept: bool,
}

impl From<Model> for ModelSpec {
    fn from(model: Model) -> Self {
        Self {
            model,
            include_intercept: true,
        }
    }
}

/// Response, regressors and group labels of one panel regression.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    /// Group index of every row, into `group_names`.
    pub groups: Vec<usize>,
    pub group_names: Vec<String>,
    /// One name per column of `x`.
    pub term_names: Vec<String>,
    pub model: Option<Model>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Builds a design from raw parts, naming groups by their index.
    pub fn from_parts(
        y: Vec<f64>,
        x: DMatrix<f64>,
        groups: Vec<usize>,
        term_names: Vec<&str>,
    ) -> Self {
        let n_groups = groups.iter().max().map_or(0, |g| g + 1);
        Self {
            y: DVector::from_vec(y),
            x,
            groups,
            group_names: (0..n_groups).map(|g| g.to_string()).collect(),
            term_names: term_names.into_iter().map(String::from).collect(),
            model: None,
        }
    }
}

/// Kurtosis on the model's skewness terms plus a constant. Groups are the
/// distinct symbols in order of first appearance.
pub fn build_design(panel: &MomentPanel, spec: ModelSpec) -> Result<DesignMatrix, FitError> {
    if panel.is_empty() {
        return Err(FitError::EmptyPanel);
    }
    let regs = spec.model.regressors();
    let k = regs.len() + usize::from(spec.include_intercept);
    let n = panel.len();

    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    let mut groups = Vec::with_capacity(n);
    let mut group_names: Vec<String> = Vec::new();
    for (i, r) in panel.records.iter().enumerate() {
        if !(r.skewness.is_finite() && r.kurtosis.is_finite()) {
            return Err(FitError::NonFiniteValue { row: i });
        }
        let s = r.skewness;
        let d = f64::from(r.covid);
        for (j, term) in regs.iter().enumerate() {
            x[(i, j)] = match *term {
                terms::SKEW_SQ => s * s,
                terms::SKEW => s,
                terms::SKEW_SQ_X_COVID => s * s * d,
                terms::COVID => d,
                _ => unreachable!("regressor list is fixed"),
            };
        }
        if spec.include_intercept {
            x[(i, k - 1)] = 1.0;
        }
        y[i] = r.kurtosis;
        let g = match group_names.iter().rposition(|name| *name == r.symbol) {
            Some(g) => g,
            None => {
                group_names.push(r.symbol.clone());
                group_names.len() - 1
            }
        };
        groups.push(g);
    }

    let mut term_names: Vec<String> = regs.iter().map(|t| t.to_string()).collect();
    if spec.include_intercept {
        term_names.push(terms::CONST.to_string());
    }
    Ok(DesignMatrix {
        y,
        x,
        groups,
        group_names,
        term_names,
        model: Some(spec.model),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    PooledOls,
    RandomEffects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    /// t reference for pooled OLS, normal for random effects.
    pub p_value: f64,
    pub stars: String,
}

/// Squared correlations between the linear predictor and the response.
/// `None` when a transform leaves no variation to correlate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RSquared {
    pub overall: Option<f64>,
    pub within: Option<f64>,
    pub between: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceComponents {
    /// Idiosyncratic variance from the within regression; `None` when the
    /// within step has no residual degrees of freedom.
    pub sigma_e2: Option<f64>,
    /// Group-effect variance after clamping at zero.
    pub sigma_u2: f64,
    /// Unclamped Swamy-Arora estimate, when it could be formed.
    pub sigma_u2_raw: Option<f64>,
    /// True when σ²_u was set to zero, reducing the fit to pooled OLS.
    pub clamped: bool,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Terms left out of the within regression because they carry no
    /// within-group variation.
    pub within_dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: Estimator,
    pub model: Option<Model>,
    pub coefficients: Vec<Coefficient>,
    pub nobs: usize,
    pub n_groups: usize,
    pub df_resid: usize,
    pub r2: RSquared,
    /// Row-major, in coefficient order.
    pub vcov: Vec<Vec<f64>>,
    /// Residual variance of the final least-squares step.
    pub sigma2: f64,
    /// Residuals vanish to rounding; test statistics are overflow-guarded.
    pub perfect_fit: bool,
    pub variance_components: Option<VarianceComponents>,
}

impl FitResult {
    pub fn coefficient(&self, term: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.term == term)
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.estimate).collect()
    }

    pub fn vcov_matrix(&self) -> DMatrix<f64> {
        let k = self.vcov.len();
        DMatrix::from_fn(k, k, |i, j| self.vcov[i][j])
    }

    /// Every coefficient except the constant.
    pub fn slope_terms(&self) -> Vec<String> {
        self.coefficients
            .iter()
            .filter(|c| c.term != terms::CONST)
            .map(|c| c.term.clone())
            .collect()
    }
}
