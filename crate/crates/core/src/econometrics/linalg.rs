use nalgebra::{DMatrix, DVector};

/// A column counts as collinear when the part of it orthogonal to the
/// preceding columns is below this fraction of its norm.
pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) struct LeastSquares {
    pub beta: DVector<f64>,
    /// R⁻¹ from X = QR, so (X'X)⁻¹ = R⁻¹R⁻ᵀ.
    pub r_inv: DMatrix<f64>,
    pub rss: f64,
}

impl LeastSquares {
    pub fn xtx_inv(&self) -> DMatrix<f64> {
        &self.r_inv * self.r_inv.transpose()
    }
}

/// Columns of `x` lying (numerically) in the span of the columns before them.
pub(crate) fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let (n, k) = x.shape();
    if k == 0 {
        return Vec::new();
    }
    let r = x.clone().qr().r();
    (0..k)
        .filter(|&j| {
            let norm = x.column(j).norm();
            norm == 0.0 || j >= n || r[(j, j)].abs() <= RANK_TOL * norm
        })
        .collect()
}

pub(crate) fn independent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let dep = dependent_columns(x);
    (0..x.ncols()).filter(|j| !dep.contains(j)).collect()
}

/// Least squares through a thin QR factorization. `x` must have full column
/// rank and at least as many rows as columns.
pub(crate) fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    let k = x.ncols();
    if k == 0 {
        return LeastSquares {
            beta: DVector::zeros(0),
            r_inv: DMatrix::zeros(0, 0),
            rss: y.norm_squared(),
        };
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .expect("full-rank R has a non-zero diagonal");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("full-rank R has a non-zero diagonal");
    let rss = (y - x * &beta).norm_squared();
    LeastSquares { beta, r_inv, rss }
}

/// Squared Pearson correlation, `None` if either side is constant.
pub(crate) fn squared_correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab * sab / (saa * sbb)).min(1.0))
}
