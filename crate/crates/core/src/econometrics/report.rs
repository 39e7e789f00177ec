use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::MomentPanel;

use super::{
    build_design, f_joint_test, fit_pooled_ols, fit_random_effects, terms, wald_joint_test,
    Estimator, FitError, FitResult, Model, TestResult,
};

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTest {
    /// `zero_interaction` or `zero_total`.
    pub name: String,
    #[serde(flatten)]
    pub result: TestResult,
}

/// One column of a results table: a fit plus its joint tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub label: String,
    #[serde(flatten)]
    pub fit: FitResult,
    pub tests: Vec<NamedTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsReport {
    pub fits: Vec<ModelFit>,
}

#[derive(Debug, Error, PartialEq)]
#[error("model {model} ({estimator:?}): {source}")]
pub struct ModelFitError {
    pub model: Model,
    pub estimator: Estimator,
    pub source: FitError,
}

fn with_tests(model: Model, fit: FitResult) -> Result<ModelFit, FitError> {
    let test = match fit.estimator {
        Estimator::PooledOls => f_joint_test,
        Estimator::RandomEffects => wald_joint_test,
    };
    let mut tests = Vec::new();
    if model.has_interaction() {
        tests.push(NamedTest {
            name: "zero_interaction".into(),
            result: test(&fit, &[terms::SKEW_SQ_X_COVID])?,
        });
    }
    let slopes = fit.slope_terms();
    let slopes: Vec<&str> = slopes.iter().map(String::as_str).collect();
    tests.push(NamedTest {
        name: "zero_total".into(),
        result: test(&fit, &slopes)?,
    });
    Ok(ModelFit {
        label: model.to_string(),
        fit,
        tests,
    })
}

/// Fits every requested model by random effects and pooled OLS, attaching
/// the Wald (random effects) or F (OLS) tests: zero interaction for models
/// with the S²·D term and zero total effect for all of them.
pub fn fit_models(panel: &MomentPanel, models: &[Model]) -> Result<FitsReport, ModelFitError> {
    let mut fits = Vec::with_capacity(models.len() * 2);
    for &model in models {
        for estimator in [Estimator::RandomEffects, Estimator::PooledOls] {
            let wrap = |source| ModelFitError {
                model,
                estimator,
                source,
            };
            let design = build_design(panel, model.into()).map_err(wrap)?;
            let fit = match estimator {
                Estimator::RandomEffects => fit_random_effects(&design),
                Estimator::PooledOls => fit_pooled_ols(&design),
            }
            .map_err(wrap)?;
            fits.push(with_tests(model, fit).map_err(wrap)?);
        }
    }
    Ok(FitsReport { fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stars_thresholds() {
        assert_eq!(significance_stars(0.009), "***");
        assert_eq!(significance_stars(0.01), "**");
        assert_eq!(significance_stars(0.049), "**");
        assert_eq!(significance_stars(0.05), "*");
        assert_eq!(significance_stars(0.0999), "*");
        assert_eq!(significance_stars(0.1), "");
    }
}
