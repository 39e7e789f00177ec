use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use skplane::econometrics::{
    build_design, f_joint_test, fit_pooled_ols, fit_random_effects, DesignMatrix, FitResult, Model,
    ModelSpec,
};
use skplane::synth::oracle::ols_oracle;
use skplane::synth::{generate_moment_panel, replication_seed, Dgp, SynthConfig};

/// Random regressors with a trailing constant, grouped into `n / t` blocks.
fn random_design(rng: &mut ChaCha8Rng, n: usize, k: usize, t: usize) -> DesignMatrix {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut x = DMatrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k - 1 {
            x[(i, j)] = normal.sample(rng) * (j as f64 + 1.0);
        }
        x[(i, k - 1)] = 1.0;
    }
    let y: Vec<f64> = (0..n)
        .map(|i| (0..k).map(|j| x[(i, j)] * (j as f64 - 1.5)).sum::<f64>() + normal.sample(rng))
        .collect();
    let mut names: Vec<String> = (0..k - 1).map(|j| format!("x{j}")).collect();
    names.push("const".into());
    DesignMatrix::from_parts(
        y,
        x,
        (0..n).map(|i| i / t).collect(),
        names.iter().map(String::as_str).collect(),
    )
}

fn residuals(d: &DesignMatrix, fit: &FitResult) -> DVector<f64> {
    &d.y - &d.x * DVector::from_vec(fit.estimates())
}

#[test]
fn matches_normal_equation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(k + 2..=500);
        let d = random_design(&mut rng, n, k, 5);
        let fit = fit_pooled_ols(&d).unwrap();
        let oracle = ols_oracle(&d).unwrap();
        for (a, b) in fit.estimates().iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                "n={n} k={k}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn single_term_f_is_squared_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_design(&mut rng, 120, 3, 6);
    let fit = fit_pooled_ols(&d).unwrap();
    for c in &fit.coefficients {
        let f = f_joint_test(&fit, &[c.term.as_str()]).unwrap();
        let t = c.estimate / c.std_error;
        assert!((f.statistic - t * t).abs() <= 1e-9 * (t * t).max(1.0));
        assert!((f.p_value - c.p_value).abs() <= 1e-10);
    }
}

#[test]
fn recovers_random_effect_variance() {
    let mut sum = 0.0;
    let seeds = 20;
    for seed in 0..seeds {
        let cfg = SynthConfig {
            n_assets: 200,
            n_weeks: 20,
            dgp: Dgp::QuadraticSk,
            b: 10.0,
            sigma_u2: 0.5,
            sigma_e2: 1.0,
            seed: replication_seed(seed),
            ..SynthConfig::default()
        };
        let g = generate_moment_panel(&cfg).unwrap();
        assert_eq!(g.clipped, 0);
        let d = build_design(&g.panel, ModelSpec::from(Model::M7)).unwrap();
        let fit = fit_random_effects(&d).unwrap();
        let vc = fit.variance_components.unwrap();
        assert!(!vc.clamped);
        sum += vc.sigma_u2;
    }
    let mean = sum / seeds as f64;
    assert!((mean - 0.5).abs() <= 0.1, "mean sigma_u2 {mean}");
}

#[test]
fn clamped_random_effects_reduce_to_ols() {
    let mut found = 0;
    for r in 0..200 {
        let cfg = SynthConfig {
            n_assets: 8,
            n_weeks: 6,
            sigma_u2: 0.0,
            seed: replication_seed(r),
            ..SynthConfig::default()
        };
        let g = generate_moment_panel(&cfg).unwrap();
        let d = build_design(&g.panel, ModelSpec::from(Model::M8)).unwrap();
        let re = fit_random_effects(&d).unwrap();
        if !re.variance_components.as_ref().unwrap().clamped {
            continue;
        }
        found += 1;
        let ols = fit_pooled_ols(&d).unwrap();
        for (a, b) in re.coefficients.iter().zip(&ols.coefficients) {
            assert!((a.estimate - b.estimate).abs() <= 1e-12 * b.estimate.abs().max(1.0));
            assert!((a.std_error - b.std_error).abs() <= 1e-12 * b.std_error.max(1.0));
        }
    }
    assert!(found >= 10, "only {found} clamped panels");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residuals_orthogonal_to_regressors(seed in any::<u64>(), n in 10usize..300, k in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, n, k, 4);
        let fit = fit_pooled_ols(&d).unwrap();
        let e = residuals(&d, &fit);
        let xte = d.x.transpose() * &e;
        let scale = d.x.norm() * d.y.norm();
        prop_assert!(xte.amax() <= 1e-10 * scale, "{}", xte.amax());
    }

    #[test]
    fn intercept_absorbs_shift(seed in any::<u64>(), c in -100.0f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, 80, 3, 4);
        let mut shifted = d.clone();
        shifted.y.add_scalar_mut(c);
        let a = fit_pooled_ols(&d).unwrap();
        let b = fit_pooled_ols(&shifted).unwrap();
        for (ca, cb) in a.coefficients.iter().zip(&b.coefficients) {
            let expected = if ca.term == "const" { ca.estimate + c } else { ca.estimate };
            prop_assert!((cb.estimate - expected).abs() <= 1e-9 * expected.abs().max(1.0));
            prop_assert!((cb.std_error - ca.std_error).abs() <= 1e-9 * ca.std_error.max(1.0));
        }
    }

    #[test]
    fn random_effects_estimates_are_finite(seed in any::<u64>(), t in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, 60, 3, t);
        let fit = fit_random_effects(&d).unwrap();
        let vc = fit.variance_components.unwrap();
        prop_assert!(vc.sigma_u2 >= 0.0);
        prop_assert!(vc.theta_min >= 0.0 && vc.theta_max < 1.0);
        prop_assert!(fit.coefficients.iter().all(|c| c.estimate.is_finite() && c.std_error >= 0.0));
    }
}
