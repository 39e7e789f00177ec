use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal, StudentT};
use skplane::moments::{descriptive_stats, kurtosis, skewness, window_moments};
use skplane::synth::oracle::moment_oracle;

fn heavy_window(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(5..=7);
    let normal = Normal::new(0.0, 0.03).unwrap();
    let t2 = StudentT::new(2.0).unwrap();
    let cauchy = Cauchy::new(0.0, 0.01).unwrap();
    let kind = rng.random_range(0..4);
    (0..n)
        .map(|_| match kind {
            0 => normal.sample(rng),
            1 => 0.02 * t2.sample(rng),
            2 => cauchy.sample(rng),
            _ => {
                if rng.random::<f64>() < 0.15 {
                    0.5 * t2.sample(rng)
                } else {
                    normal.sample(rng)
                }
            }
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn matches_brute_force_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let w = heavy_window(&mut rng);
        let (s, k, d) = window_moments(&w).unwrap();
        let (os, ok, od) = moment_oracle(&w).unwrap();
        worst = worst
            .max(rel_err(s, os))
            .max(rel_err(k, ok))
            .max(rel_err(d, od));
        assert_eq!(skewness(&w).unwrap(), s);
        assert_eq!(kurtosis(&w).unwrap(), k);
    }
    assert!(worst <= 1e-12, "worst relative error {worst:e}");
}

#[test]
fn spike_window_attains_both_bounds() {
    for n in 3..=12usize {
        let mut w = vec![-1.0; n];
        w[0] = (n - 1) as f64;
        let nf = n as f64;
        let s_max = (nf - 2.0) / (nf - 1.0).sqrt();
        let k_max = (nf * nf - 3.0 * nf + 3.0) / (nf - 1.0);
        assert!((skewness(&w).unwrap() - s_max).abs() <= 1e-12, "n = {n}");
        assert!((kurtosis(&w).unwrap() - k_max).abs() <= 1e-12, "n = {n}");
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        assert!((skewness(&neg).unwrap() + s_max).abs() <= 1e-12);
    }
}

#[test]
fn normal_sample_percentiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|_| normal.sample(&mut rng)).collect();
    let st = descriptive_stats(&xs).unwrap();
    assert!(st.p50.abs() <= 0.05, "p50 {}", st.p50);
    assert!((st.sd - 1.0).abs() <= 0.05, "sd {}", st.sd);

    // independent sort-and-interpolate
    let mut sorted = xs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |q: f64| {
        let pos = q * (sorted.len() as f64 - 1.0);
        let i = pos as usize;
        let frac = pos - i as f64;
        if i + 1 < sorted.len() {
            sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
        } else {
            sorted[i]
        }
    };
    for (got, q) in [
        (st.p1, 0.01),
        (st.p25, 0.25),
        (st.p50, 0.5),
        (st.p75, 0.75),
        (st.p99, 0.99),
    ] {
        assert!((got - pct(q)).abs() <= 1e-12, "q = {q}");
    }
    assert_eq!((st.min, st.max), (sorted[0], sorted[9_999]));
}

proptest! {
    #[test]
    fn pearson_and_length_bounds(w in prop::collection::vec(-1e3f64..1e3, 3..=9)) {
        if let Ok((s, k, d)) = window_moments(&w) {
            let n = w.len() as f64;
            prop_assert!(k >= s * s + 1.0 - 1e-9);
            prop_assert!(s.abs() <= (n - 2.0) / (n - 1.0).sqrt() + 1e-9);
            prop_assert!(k <= (n * n - 3.0 * n + 3.0) / (n - 1.0) + 1e-9);
            prop_assert!(k >= 1.0 - 1e-9);
            prop_assert!(d >= 0.0);
        }
    }

    #[test]
    fn affine_invariance(
        w in prop::collection::vec(-10.0f64..10.0, 5..=7),
        a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        b in -100.0f64..100.0,
    ) {
        let base = window_moments(&w);
        prop_assume!(base.is_ok());
        let (s, k, _) = base.unwrap();
        // keep windows whose spread is not swamped by the shift
        let spread = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - w.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let moved: Vec<f64> = w.iter().map(|x| a * x + b).collect();
        let (s2, k2, _) = window_moments(&moved).unwrap();
        prop_assert!((s2 - a.signum() * s).abs() <= 1e-10, "{} vs {}", s2, s);
        prop_assert!((k2 - k).abs() <= 1e-10, "{} vs {}", k2, k);
    }
}
