//! Brute-force reference computations for cross-checking the estimators.
//!
//! Nothing here calls into `moments` or `econometrics`: the moment oracle
//! standardizes each value explicitly and finds the Δ extremes by sorting,
//! and the OLS oracle solves the normal equations by Gaussian elimination
//! with partial pivoting.

use thiserror::Error;

use crate::econometrics::DesignMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("window has zero variance")]
    ZeroVariance,
    #[error("normal equations are singular")]
    Singular,
}

/// (skewness, kurtosis, Δ) of a window.
pub fn moment_oracle(window: &[f64]) -> Result<(f64, f64, f64), OracleError> {
    let n = window.len();
    if n == 0 || window.iter().all(|&x| x == window[0]) {
        return Err(OracleError::ZeroVariance);
    }
    let nf = n as f64;

    let mut total = 0.0;
    for &x in window {
        total += x;
    }
    let mu = total / nf;

    let mut ss = 0.0;
    for &x in window {
        ss += (x - mu) * (x - mu);
    }
    let sigma = (ss / nf).sqrt();
    if sigma == 0.0 {
        return Err(OracleError::ZeroVariance);
    }

    let mut third = 0.0;
    let mut fourth = 0.0;
    for &x in window {
        let z = (x - mu) / sigma;
        third += z * z * z;
        fourth += z * z * z * z;
    }

    let mut abs_dev: Vec<f64> = window.iter().map(|&x| (x - mu).abs()).collect();
    abs_dev.sort_by(|a, b| b.total_cmp(a));
    let gap = if n > 1 {
        abs_dev[0] - abs_dev[1]
    } else {
        abs_dev[0]
    };

    Ok((third / nf, fourth / nf, gap / sigma))
}

/// Coefficients solving X'X β = X'y.
#[allow(clippy::needless_range_loop)]
pub fn ols_oracle(design: &DesignMatrix) -> Result<Vec<f64>, OracleError> {
    let n = design.x.nrows();
    let k = design.x.ncols();

    // augmented [X'X | X'y]
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            let mut s = 0.0;
            for i in 0..n {
                s += design.x[(i, r)] * design.x[(i, c)];
            }
            a[r][c] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += design.x[(i, r)] * design.y[i];
        }
        a[r][k] = s;
    }

    let scale = (0..k).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(OracleError::Singular);
    }
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(OracleError::Singular);
        }
        a.swap(col, pivot);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }

    let mut beta = vec![0.0; k];
    for row in (0..k).rev() {
        let mut s = a[row][k];
        for c in row + 1..k {
            s -= a[row][c] * beta[c];
        }
        beta[row] = s / a[row][row];
    }
    Ok(beta)
}
