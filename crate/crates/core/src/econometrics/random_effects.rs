//! One-way random effects with Swamy-Arora variance components on
//! unbalanced panels.
//!
//! With N rows in n groups of sizes T_i and K columns (constant included):
//!
//! * σ̂²_e = RSS_within / (N − n − K_w), K_w the regressors that vary within
//!   groups and are not collinear after demeaning.
//! * The between regression is run at observation level (group means
//!   repeated T_i times), giving SSR_b over K_b independent columns, and
//!   σ̂²_u = (SSR_b − (n − K_b)·σ̂²_e) / (N − tr[(X'PX)⁻¹ X'ZZ'X]),
//!   the unbalanced-panel degrees-of-freedom correction. It reduces to
//!   SSR_b/(T(n−K)) − σ̂²_e/T on balanced panels.
//! * σ̂²_u is clamped at zero. Each row is quasi-demeaned with
//!   θ_i = 1 − √(σ̂²_e / (T_i·σ̂²_u + σ̂²_e)) and OLS is run on the result;
//!   the covariance uses that regression's own residual variance, so a
//!   clamped fit reproduces pooled OLS exactly.

use nalgebra::{DMatrix, DVector};

use crate::special::normal_two_sided;

use super::linalg::{independent_columns, least_squares, squared_correlation, RANK_TOL};
use super::ols::{check_rank, check_shape, coefficient_p, is_perfect_fit, n_groups, rows};
use super::report::significance_stars;
use super::{
    terms, Coefficient, DesignMatrix, Estimator, FitError, FitResult, RSquared, VarianceComponents,
};

struct GroupMeans {
    sizes: Vec<usize>,
    y: Vec<f64>,
    /// n_groups × k.
    x: DMatrix<f64>,
}

fn group_means(d: &DesignMatrix, n_slots: usize) -> GroupMeans {
    let k = d.ncols();
    let mut sizes = vec![0usize; n_slots];
    let mut y = vec![0.0; n_slots];
    let mut x = DMatrix::zeros(n_slots, k);
    for (i, &g) in d.groups.iter().enumerate() {
        sizes[g] += 1;
        y[g] += d.y[i];
        for j in 0..k {
            x[(g, j)] += d.x[(i, j)];
        }
    }
    for g in 0..n_slots {
        if sizes[g] > 0 {
            let t = sizes[g] as f64;
            y[g] /= t;
            for j in 0..k {
                x[(g, j)] /= t;
            }
        }
    }
    GroupMeans { sizes, y, x }
}

struct Components {
    sigma_e2: Option<f64>,
    sigma_u2_raw: Option<f64>,
    within_dropped: Vec<String>,
}

fn variance_components(d: &DesignMatrix, gm: &GroupMeans, n_groups: usize) -> Components {
    let (n, k) = d.x.shape();

    // within: demeaned columns other than the constant
    let mut xw = DMatrix::zeros(n, k);
    let mut yw = DVector::zeros(n);
    for (i, &g) in d.groups.iter().enumerate() {
        yw[i] = d.y[i] - gm.y[g];
        for j in 0..k {
            xw[(i, j)] = d.x[(i, j)] - gm.x[(g, j)];
        }
    }
    let mut within_dropped = Vec::new();
    let mut candidates = Vec::new();
    for j in 0..k {
        if d.term_names[j] == terms::CONST {
            continue;
        }
        if xw.column(j).norm() <= RANK_TOL * d.x.column(j).norm() {
            within_dropped.push(d.term_names[j].clone());
        } else {
            candidates.push(j);
        }
    }
    let xw = xw.select_columns(candidates.iter());
    let keep = independent_columns(&xw);
    for (pos, &j) in candidates.iter().enumerate() {
        if !keep.contains(&pos) {
            within_dropped.push(d.term_names[j].clone());
        }
    }
    let xw = xw.select_columns(keep.iter());
    let k_w = xw.ncols();

    let dof_w = n as i64 - n_groups as i64 - k_w as i64;
    let sigma_e2 = (dof_w > 0).then(|| least_squares(&xw, &yw).rss / dof_w as f64);

    // between at observation level: rows √T_i·(x̄_i, ȳ_i) over present groups
    let present: Vec<usize> = (0..gm.sizes.len()).filter(|&g| gm.sizes[g] > 0).collect();
    let sqrt_t: Vec<f64> = present
        .iter()
        .map(|&g| (gm.sizes[g] as f64).sqrt())
        .collect();
    let xb = DMatrix::from_fn(present.len(), k, |r, j| sqrt_t[r] * gm.x[(present[r], j)]);
    let yb = DVector::from_fn(present.len(), |r, _| sqrt_t[r] * gm.y[present[r]]);
    let keep_b = independent_columns(&xb);
    let xb = xb.select_columns(keep_b.iter());
    let k_b = xb.ncols();

    let sigma_u2_raw = sigma_e2.and_then(|se2| {
        if n_groups <= k_b {
            return None;
        }
        let ls = least_squares(&xb, &yb);
        // X'PX = Xb'Xb and X'ZZ'X = Xb' diag(T) Xb
        let xpx_inv = ls.xtx_inv();
        let t_diag =
            DVector::from_iterator(present.len(), present.iter().map(|&g| gm.sizes[g] as f64));
        let xzzx = xb.transpose() * DMatrix::from_diagonal(&t_diag) * &xb;
        let denom = n as f64 - (xpx_inv * xzzx).trace();
        (denom > 0.0).then(|| (ls.rss - (n_groups - k_b) as f64 * se2) / denom)
    });

    Components {
        sigma_e2,
        sigma_u2_raw,
        within_dropped,
    }
}

/// Swamy-Arora random-effects GLS. See the module docs for the estimator.
pub fn fit_random_effects(d: &DesignMatrix) -> Result<FitResult, FitError> {
    check_shape(d)?;
    let groups_present = n_groups(d);
    if groups_present < 2 {
        return Err(FitError::TooFewGroups(groups_present));
    }
    check_rank(d)?;
    let (n, k) = d.x.shape();
    let n_slots = d
        .group_names
        .len()
        .max(d.groups.iter().max().map_or(0, |g| g + 1));
    let gm = group_means(d, n_slots);
    let comps = variance_components(d, &gm, groups_present);

    let (sigma_u2, clamped) = match (comps.sigma_e2, comps.sigma_u2_raw) {
        (Some(se2), Some(su2)) if su2 > 0.0 && se2 > 0.0 => (su2, false),
        _ => (0.0, true),
    };
    let theta: Vec<f64> = gm
        .sizes
        .iter()
        .map(|&t| {
            if clamped {
                0.0
            } else {
                let se2 = comps.sigma_e2.unwrap();
                1.0 - (se2 / (t as f64 * sigma_u2 + se2)).sqrt()
            }
        })
        .collect();

    let mut xs = d.x.clone();
    let mut ys = d.y.clone();
    if !clamped {
        for (i, &g) in d.groups.iter().enumerate() {
            let th = theta[g];
            ys[i] -= th * gm.y[g];
            for j in 0..k {
                xs[(i, j)] -= th * gm.x[(g, j)];
            }
        }
    }
    let ls = least_squares(&xs, &ys);
    let df_resid = n - k;
    let sigma2 = ls.rss / df_resid as f64;
    let vcov = ls.xtx_inv() * sigma2;
    let perfect_fit = is_perfect_fit(ls.rss, ys.norm_squared());

    let coefficients: Vec<Coefficient> = (0..k)
        .map(|j| {
            let estimate = ls.beta[j];
            let std_error = vcov[(j, j)].max(0.0).sqrt();
            let p_value = coefficient_p(estimate, std_error, normal_two_sided);
            Coefficient {
                term: d.term_names[j].clone(),
                estimate,
                std_error,
                p_value,
                stars: significance_stars(p_value).to_string(),
            }
        })
        .collect();

    // R² as squared correlations of Xβ̂ with y under each transform
    let xb_hat = &d.x * &ls.beta;
    let overall = squared_correlation(xb_hat.as_slice(), d.y.as_slice());
    let xbar_hat = &gm.x * &ls.beta;
    let (mut fit_w, mut y_w) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, &g) in d.groups.iter().enumerate() {
        fit_w.push(xb_hat[i] - xbar_hat[g]);
        y_w.push(d.y[i] - gm.y[g]);
    }
    let within = squared_correlation(&fit_w, &y_w);
    let present: Vec<usize> = (0..n_slots).filter(|&g| gm.sizes[g] > 0).collect();
    let fit_b: Vec<f64> = present.iter().map(|&g| xbar_hat[g]).collect();
    let y_b: Vec<f64> = present.iter().map(|&g| gm.y[g]).collect();
    let between = squared_correlation(&fit_b, &y_b);

    let present_theta = present.iter().map(|&g| theta[g]);
    let theta_min = present_theta.clone().fold(f64::INFINITY, f64::min);
    let theta_max = present_theta.fold(f64::NEG_INFINITY, f64::max);

    Ok(FitResult {
        estimator: Estimator::RandomEffects,
        model: d.model,
        coefficients,
        nobs: n,
        n_groups: groups_present,
        df_resid,
        r2: RSquared {
            overall,
            within,
            between,
        },
        vcov: rows(&vcov),
        sigma2,
        perfect_fit,
        variance_components: Some(VarianceComponents {
            sigma_e2: comps.sigma_e2,
            sigma_u2,
            sigma_u2_raw: comps.sigma_u2_raw,
            clamped,
            theta_min,
            theta_max,
            within_dropped: comps.within_dropped,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::fit_pooled_ols;

    /// Balanced 3×3 panel, y = 1 + 2x + u_g + e with hand-picked effects.
    fn small_panel(u: [f64; 3]) -> DesignMatrix {
        let xs = [0.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 2.5, 4.0];
        let es = [0.1, -0.2, 0.1, 0.05, 0.0, -0.05, -0.1, 0.2, -0.1];
        let mut y = Vec::new();
        let mut x = Vec::new();
        let mut groups = Vec::new();
        for i in 0..9 {
            let g = i / 3;
            y.push(1.0 + 2.0 * xs[i] + u[g] + es[i]);
            x.extend([xs[i], 1.0]);
            groups.push(g);
        }
        DesignMatrix::from_parts(
            y,
            DMatrix::from_row_slice(9, 2, &x),
            groups,
            vec!["skew_sq", "const"],
        )
    }

    #[test]
    fn clamped_fit_equals_pooled_ols() {
        // identical group effects: between residuals are tiny, σ̂²_u goes negative
        let d = small_panel([0.0, 0.0, 0.0]);
        let re = fit_random_effects(&d).unwrap();
        let vc = re.variance_components.as_ref().unwrap();
        assert!(vc.clamped, "{vc:?}");
        let ols = fit_pooled_ols(&d).unwrap();
        for (a, b) in re.estimates().iter().zip(ols.estimates()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn strong_effects_are_not_clamped() {
        let d = small_panel([3.0, -2.0, 0.5]);
        let re = fit_random_effects(&d).unwrap();
        let vc = re.variance_components.unwrap();
        assert!(!vc.clamped && vc.sigma_u2 > 1.0);
        assert!(vc.theta_min > 0.5 && vc.theta_max < 1.0);
        assert!(re.r2.within.is_some() && re.r2.between.is_some());
    }

    #[test]
    fn single_group_rejected() {
        let d = DesignMatrix::from_parts(
            vec![1.0, 2.0, 4.0],
            DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0]),
            vec![0, 0, 0],
            vec!["skew_sq", "const"],
        );
        assert_eq!(fit_random_effects(&d), Err(FitError::TooFewGroups(1)));
    }

    #[test]
    fn singleton_groups_degenerate_to_ols() {
        let d = DesignMatrix::from_parts(
            vec![1.0, 2.5, 2.9, 4.2, 5.1],
            DMatrix::from_row_slice(5, 2, &[0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0]),
            vec![0, 1, 2, 3, 4],
            vec!["skew_sq", "const"],
        );
        let re = fit_random_effects(&d).unwrap();
        let vc = re.variance_components.as_ref().unwrap();
        assert!(vc.clamped && vc.sigma_e2.is_none());
        let ols = fit_pooled_ols(&d).unwrap();
        assert_eq!(re.estimates(), ols.estimates());
        assert_eq!(re.vcov, ols.vcov);
    }

    #[test]
    fn group_constant_regressor_reported() {
        // second regressor is constant inside each group
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut groups = Vec::new();
        let noise = [0.3, -0.1, 0.2, -0.4, 0.1, 0.05, -0.2, 0.15];
        for (i, e) in noise.iter().enumerate() {
            let g = i / 2;
            let a = i as f64 * 0.7 % 3.0;
            let c = g as f64;
            x.extend([a, c, 1.0]);
            y.push(1.0 + a + 0.5 * c + e);
            groups.push(g);
        }
        let d = DesignMatrix::from_parts(
            y,
            DMatrix::from_row_slice(8, 3, &x),
            groups,
            vec!["skew_sq", "covid", "const"],
        );
        let re = fit_random_effects(&d).unwrap();
        assert_eq!(
            re.variance_components.unwrap().within_dropped,
            vec!["covid".to_string()]
        );
    }
}
