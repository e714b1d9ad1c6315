//! Distributional checks of the conjugate conditionals: empirical draws
//! against exact CDFs (Kolmogorov-Smirnov), and the slice sampler against a
//! brute-force grid posterior.

use mutbayes_core::engine::{draw_gamma, gamma_conditional};
use mutbayes_core::rate_model::{cluster_conditional, draw_cluster_value};
use mutbayes_core::rng::stream_rng;
use statrs::distribution::{ContinuousCDF, Gamma};

fn ks_distance<F: Fn(f64) -> f64>(draws: &mut [f64], cdf: F) -> f64 {
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = draws.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

#[test]
fn gamma_conditional_draws_pass_ks() {
    let mut rng = stream_rng(400, "test", 0);
    let prior = (1.0, 2.4e-7);
    let clusters = [3.1e-7, 9.4e-6, 7.7e-5];
    let (shape, rate) = gamma_conditional(prior, &clusters);
    let mut draws: Vec<f64> = (0..10_000)
        .map(|_| draw_gamma(shape, rate, &mut rng))
        .collect();
    let exact = Gamma::new(shape, rate).unwrap();
    let d = ks_distance(&mut draws, |x| exact.cdf(x));
    assert!(d < 0.05, "KS distance {d}");
}

#[test]
fn single_cluster_lambda_conditional_passes_ks() {
    let mut rng = stream_rng(401, "test", 0);
    let (sum_x, sum_e, gamma) = (6.0, 2.5e6, 8e5);
    let mut draws: Vec<f64> = (0..10_000)
        .map(|_| draw_cluster_value(sum_x, sum_e, gamma, &mut rng))
        .collect();
    let (shape, rate) = cluster_conditional(sum_x, sum_e, gamma);
    let exact = Gamma::new(shape, rate).unwrap();
    let d = ks_distance(&mut draws, |x| exact.cdf(x));
    assert!(d < 0.05, "KS distance {d}");
}

/// Single-driver increment posterior: slice-sampled draws against the
/// normalized brute-force grid CDF of the unnormalized density
/// (lambda0+theta)^x exp(-theta E) * gamma exp(-gamma theta).
#[test]
fn increment_slice_sampler_matches_grid_posterior() {
    let lambda0 = 3.68e-7;
    let exposure = 1.2e6;
    let x = 9.0;
    let gamma = 2.0e5;

    // Run the slice sampler through the public driver-model surface: one
    // driver gene pinned as a singleton cluster, repeated value refreshes.
    let mut b = mutbayes_core::DatasetBuilder::new(vec![mutbayes_core::dataset::MutationType {
        label: "t".into(),
    }])
    .unwrap();
    b.add_coverage_cell("g0", "t", "s0", exposure as i64).unwrap();
    b.add_count("g0", "t", "s0", x as u32).unwrap();
    let data = b.build().unwrap();
    let cache = mutbayes_core::ExposureCache::build(&data, &[1.0], &[1.0]).unwrap();
    let config = mutbayes_core::ModelConfig {
        lambda0: Some(lambda0),
        ..mutbayes_core::ModelConfig::default()
    };
    let mut model = mutbayes_core::driver_model::DriverModel::init(&data, &config).unwrap();
    // X = 9 >= 2, so the gene starts as a driver in one cluster.
    assert_eq!(model.delta_slice(), &[true]);
    model.set_pi(1.0 - 1e-12); // keep delta pinned at driver
    let mut rng = stream_rng(402, "test", 0);
    let mut draws = Vec::with_capacity(10_000);
    for _ in 0..10_500 {
        model.update_delta(&cache, 0, gamma, &mut rng);
        model.update_increments(&cache, gamma, &mut rng);
        assert!(model.delta_slice()[0]);
        draws.push(model.increment(0));
    }
    let mut draws: Vec<f64> = draws[500..].to_vec();

    // Brute-force grid CDF over theta.
    let log_density = |theta: f64| {
        x * (lambda0 + theta).ln() - exposure * theta - gamma * theta
    };
    let hi = 60.0 / exposure.min(gamma) + x / exposure * 20.0;
    let n = 400_000usize;
    let h = hi / n as f64;
    let mut mass = Vec::with_capacity(n);
    let mut total = 0.0;
    let log_max = log_density(x / exposure);
    for i in 0..n {
        let theta = (i as f64 + 0.5) * h;
        let w = (log_density(theta) - log_max).exp();
        total += w;
        mass.push(total);
    }
    let cdf = |theta: f64| {
        let idx = ((theta / h) as usize).min(n - 1);
        mass[idx] / total
    };
    let d = ks_distance(&mut draws, cdf);
    assert!(d < 0.05, "KS distance {d}");
}
