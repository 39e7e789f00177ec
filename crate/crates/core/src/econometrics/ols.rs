use crate::special::t_two_sided;

use super::linalg::{dependent_columns, least_squares, squared_correlation};
use super::report::significance_stars;
use super::{Coefficient, DesignMatrix, Estimator, FitError, FitResult, RSquared};

/// Residual sum of squares at or below this fraction of Σy² counts as an
/// exact fit.
pub(crate) const PERFECT_FIT_RATIO: f64 = 1e-20;

pub(crate) fn check_shape(d: &DesignMatrix) -> Result<(), FitError> {
    let (n, k) = d.x.shape();
    if n <= k {
        return Err(FitError::TooFewRows { rows: n, coefs: k });
    }
    Ok(())
}

pub(crate) fn check_rank(d: &DesignMatrix) -> Result<(), FitError> {
    let dep = dependent_columns(&d.x);
    if dep.is_empty() {
        Ok(())
    } else {
        Err(FitError::RankDeficient {
            terms: dep.into_iter().map(|j| d.term_names[j].clone()).collect(),
        })
    }
}

pub(crate) fn is_perfect_fit(rss: f64, y_sq: f64) -> bool {
    rss <= PERFECT_FIT_RATIO * y_sq.max(f64::MIN_POSITIVE)
}

pub(crate) fn n_groups(d: &DesignMatrix) -> usize {
    let mut seen = vec![
        false;
        d.group_names
            .len()
            .max(d.groups.iter().max().map_or(0, |g| g + 1))
    ];
    for &g in &d.groups {
        seen[g] = true;
    }
    seen.into_iter().filter(|&s| s).count()
}

/// Ordinary least squares on the stacked panel with conventional
/// (homoskedastic) standard errors, σ̂² = RSS/(n − k).
pub fn fit_pooled_ols(d: &DesignMatrix) -> Result<FitResult, FitError> {
    check_shape(d)?;
    check_rank(d)?;
    let (n, k) = d.x.shape();
    let ls = least_squares(&d.x, &d.y);
    let df_resid = n - k;
    let sigma2 = ls.rss / df_resid as f64;
    let vcov = ls.xtx_inv() * sigma2;
    let perfect_fit = is_perfect_fit(ls.rss, d.y.norm_squared());

    let coefficients = (0..k)
        .map(|j| {
            let estimate = ls.beta[j];
            let std_error = vcov[(j, j)].max(0.0).sqrt();
            let p_value = coefficient_p(estimate, std_error, |t| t_two_sided(t, df_resid as f64));
            Coefficient {
                term: d.term_names[j].clone(),
                estimate,
                std_error,
                p_value,
                stars: significance_stars(p_value).to_string(),
            }
        })
        .collect();

    let fitted: Vec<f64> = (&d.x * &ls.beta).iter().copied().collect();
    Ok(FitResult {
        estimator: Estimator::PooledOls,
        model: d.model,
        coefficients,
        nobs: n,
        n_groups: n_groups(d),
        df_resid,
        r2: RSquared {
            overall: squared_correlation(&fitted, d.y.as_slice()),
            within: None,
            between: None,
        },
        vcov: rows(&vcov),
        sigma2,
        perfect_fit,
        variance_components: None,
    })
}

pub(crate) fn coefficient_p(estimate: f64, std_error: f64, tail: impl Fn(f64) -> f64) -> f64 {
    if std_error > 0.0 {
        tail(estimate / std_error)
    } else if estimate == 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn exact_line_fit() {
        let d = DesignMatrix::from_parts(
            vec![1.0, 2.0, 3.0],
            DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0]),
            vec![0, 1, 2],
            vec!["skew_sq", "const"],
        );
        let fit = fit_pooled_ols(&d).unwrap();
        assert!((fit.coefficients[0].estimate - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1].estimate - 1.0).abs() < 1e-12);
        assert!((fit.r2.overall.unwrap() - 1.0).abs() < 1e-12);
        assert!(fit.perfect_fit);
        assert_eq!(fit.df_resid, 1);
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let d = DesignMatrix::from_parts(
            vec![1.0, 2.0, 4.0, 3.0],
            DMatrix::from_row_slice(
                4,
                3,
                &[
                    0.0, 0.0, 1.0, //
                    1.0, 1.0, 1.0, //
                    2.0, 2.0, 1.0, //
                    3.0, 3.0, 1.0,
                ],
            ),
            vec![0, 0, 1, 1],
            vec!["skew_sq", "skew_sq_copy", "const"],
        );
        assert_eq!(
            fit_pooled_ols(&d),
            Err(FitError::RankDeficient {
                terms: vec!["skew_sq_copy".into()]
            })
        );
    }

    #[test]
    fn too_few_rows() {
        let d = DesignMatrix::from_parts(
            vec![1.0, 2.0],
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]),
            vec![0, 1],
            vec!["skew_sq", "const"],
        );
        assert_eq!(
            fit_pooled_ols(&d),
            Err(FitError::TooFewRows { rows: 2, coefs: 2 })
        );
    }

    #[test]
    fn textbook_standard_errors() {
        // y = 1 + 2x + e with e = (0.1, -0.1, -0.1, 0.1): RSS = 0.04, σ² = 0.02,
        // Sxx = 5, se(slope) = sqrt(0.02/5), se(const) = sqrt(0.02·(1/4 + 2.25/5))
        let d = DesignMatrix::from_parts(
            vec![1.1, 2.9, 4.9, 7.1],
            DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0]),
            vec![0, 0, 1, 1],
            vec!["skew_sq", "const"],
        );
        let fit = fit_pooled_ols(&d).unwrap();
        assert!((fit.coefficients[0].estimate - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1].estimate - 1.0).abs() < 1e-12);
        assert!((fit.sigma2 - 0.02).abs() < 1e-14);
        assert!((fit.coefficients[0].std_error - (0.02_f64 / 5.0).sqrt()).abs() < 1e-12);
        assert!(
            (fit.coefficients[1].std_error - (0.02_f64 * (0.25 + 2.25 / 5.0)).sqrt()).abs() < 1e-12
        );
        assert_eq!(fit.n_groups, 2);
    }
}
