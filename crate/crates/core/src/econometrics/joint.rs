use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::special::{chi2_sf, f_sf};

use super::{Estimator, FitError, FitResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    WaldChi2,
    F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub terms: Vec<String>,
    /// Capped at `f64::MAX` when the fit is exact.
    pub statistic: f64,
    /// χ² degrees of freedom, or the F numerator.
    pub df: usize,
    /// F denominator degrees of freedom.
    pub df_denom: Option<usize>,
    pub p_value: f64,
    pub perfect_fit: bool,
}

/// Wald statistic β̂_q' V_q⁻¹ β̂_q for the selected coefficients.
/// `Ok(None)` stands for an exact fit with a non-zero subvector.
fn wald_form(fit: &FitResult, terms: &[&str]) -> Result<Option<f64>, FitError> {
    if terms.is_empty() {
        return Err(FitError::EmptyTerms);
    }
    let idx: Vec<usize> = terms
        .iter()
        .map(|t| {
            fit.coefficients
                .iter()
                .position(|c| c.term == *t)
                .ok_or_else(|| FitError::UnknownTerm(t.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let beta = DVector::from_iterator(idx.len(), idx.iter().map(|&i| fit.coefficients[i].estimate));
    if beta.iter().all(|b| *b == 0.0) {
        return Ok(Some(0.0));
    }
    if fit.perfect_fit {
        return Ok(None);
    }
    let v = DMatrix::from_fn(idx.len(), idx.len(), |r, c| fit.vcov[idx[r]][idx[c]]);
    let chol = v.cholesky().ok_or(FitError::SingularSubcovariance)?;
    let w = beta.dot(&chol.solve(&beta));
    if !w.is_finite() {
        return Err(FitError::SingularSubcovariance);
    }
    Ok(Some(w.max(0.0)))
}

/// Joint Wald test that the named coefficients are all zero, referred to a
/// chi-square with one degree of freedom per term.
pub fn wald_joint_test(fit: &FitResult, terms: &[&str]) -> Result<TestResult, FitError> {
    let q = terms.len();
    let w = wald_form(fit, terms)?;
    let (statistic, p_value, perfect_fit) = match w {
        Some(w) => (w, chi2_sf(w, q as f64), false),
        None => (f64::MAX, 0.0, true),
    };
    Ok(TestResult {
        kind: TestKind::WaldChi2,
        terms: terms.iter().map(|t| t.to_string()).collect(),
        statistic,
        df: q,
        df_denom: None,
        p_value,
        perfect_fit,
    })
}

/// F form of the joint test on a pooled OLS fit: F = W/q on (q, n − k)
/// degrees of freedom.
pub fn f_joint_test(fit: &FitResult, terms: &[&str]) -> Result<TestResult, FitError> {
    if fit.estimator != Estimator::PooledOls {
        return Err(FitError::WrongEstimator);
    }
    let q = terms.len();
    let w = wald_form(fit, terms)?;
    let (statistic, p_value, perfect_fit) = match w {
        Some(w) => {
            let f = w / q as f64;
            (f, f_sf(f, q as f64, fit.df_resid as f64), false)
        }
        None => (f64::MAX, 0.0, true),
    };
    Ok(TestResult {
        kind: TestKind::F,
        terms: terms.iter().map(|t| t.to_string()).collect(),
        statistic,
        df: q,
        df_denom: Some(fit.df_resid),
        p_value,
        perfect_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::{Coefficient, RSquared};

    fn fit_with(estimates: &[(&str, f64)], vcov: Vec<Vec<f64>>, estimator: Estimator) -> FitResult {
        FitResult {
            estimator,
            model: None,
            coefficients: estimates
                .iter()
                .enumerate()
                .map(|(i, (t, e))| Coefficient {
                    term: t.to_string(),
                    estimate: *e,
                    std_error: vcov[i][i].sqrt(),
                    p_value: f64::NAN,
                    stars: String::new(),
                })
                .collect(),
            nobs: 100,
            n_groups: 10,
            df_resid: 100 - estimates.len(),
            r2: RSquared {
                overall: None,
                within: None,
                between: None,
            },
            vcov,
            sigma2: 1.0,
            perfect_fit: false,
            variance_components: None,
        }
    }

    #[test]
    fn single_term_wald() {
        let fit = fit_with(
            &[("skew_sq", 2.0)],
            vec![vec![1.0]],
            Estimator::RandomEffects,
        );
        let t = wald_joint_test(&fit, &["skew_sq"]).unwrap();
        assert_eq!((t.statistic, t.df), (4.0, 1));
        assert!((t.p_value - 0.0455).abs() < 1e-4);
    }

    #[test]
    fn zero_estimates_give_unit_p() {
        let fit = fit_with(
            &[("a", 0.0), ("b", 0.0), ("const", 3.0)],
            vec![
                vec![1.0, 0.2, 0.0],
                vec![0.2, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            Estimator::PooledOls,
        );
        let w = wald_joint_test(&fit, &["a", "b"]).unwrap();
        assert_eq!((w.statistic, w.p_value), (0.0, 1.0));
        let f = f_joint_test(&fit, &["a", "b"]).unwrap();
        assert_eq!(
            (f.statistic, f.p_value, f.df, f.df_denom),
            (0.0, 1.0, 2, Some(97))
        );
    }

    #[test]
    fn correlated_pair() {
        // V = [[1, .5], [.5, 1]], b = (1, 1): W = b'V⁻¹b = 2/1.5
        let fit = fit_with(
            &[("a", 1.0), ("b", 1.0)],
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            Estimator::RandomEffects,
        );
        let t = wald_joint_test(&fit, &["a", "b"]).unwrap();
        assert!((t.statistic - 4.0 / 3.0).abs() < 1e-14);
        assert!((t.p_value - (-2.0_f64 / 3.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn errors() {
        let fit = fit_with(&[("a", 1.0)], vec![vec![1.0]], Estimator::RandomEffects);
        assert_eq!(
            wald_joint_test(&fit, &["nope"]),
            Err(FitError::UnknownTerm("nope".into()))
        );
        assert_eq!(wald_joint_test(&fit, &[]), Err(FitError::EmptyTerms));
        assert_eq!(f_joint_test(&fit, &["a"]), Err(FitError::WrongEstimator));
        let singular = fit_with(
            &[("a", 1.0), ("b", 1.0)],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            Estimator::PooledOls,
        );
        assert_eq!(
            wald_joint_test(&singular, &["a", "b"]),
            Err(FitError::SingularSubcovariance)
        );
    }
}
