//! Dry run of the desk-scale study designs used by the acceptance suite.

use mutbayes_core::baselines::{
    bayes_fdr_curve, bh_fdr, compute_baseline, rank_ascending, rank_descending, true_fdr_curve,
};
use mutbayes_core::engine::{run_chain, ModelKind};
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::summary::{driver_probability_summary, posterior_rate_summary};
use mutbayes_core::{ExposureCache, ModelConfig};

fn main() {
    let lambda0 = 3.68e-7;
    let base_config = ModelConfig {
        iterations: 20_000,
        burn_in: 10_000,
        thin: 10,
        lambda0: Some(lambda0),
        ..ModelConfig::default()
    };

    for seed in 1..=5u64 {
        let spec = ScenarioSpec::paper_scale(seed).desk_scale(2000).unwrap();
        let study = generate(&spec).unwrap();
        let config = ModelConfig {
            seed,
            ..base_config.clone()
        };

        // criterion 1 & 6 inputs: rate fit
        let rate_trace = run_chain(&study.dataset, &config, ModelKind::Rate).unwrap();
        let rate_summary = posterior_rate_summary(&rate_trace).unwrap();
        let mut zero_sum = 0.0;
        let mut zero_n = 0.0;
        for g in 0..study.dataset.n_genes() {
            if study.dataset.gene_count_total(g) == 0 {
                zero_sum += rate_summary.genes[g].mean;
                zero_n += 1.0;
            }
        }
        let zero_mean = zero_sum / zero_n;
        println!(
            "seed {seed}: zero-mutation mean rate {:.3e} (ratio to lambda0 {:.3})",
            zero_mean,
            zero_mean / lambda0
        );

        // criterion 2: pi CI
        let driver_trace = run_chain(&study.dataset, &config, ModelKind::Driver).unwrap();
        let driver_summary = driver_probability_summary(&driver_trace).unwrap();
        let covered = driver_summary.genome.pi_lo90 <= 0.0305
            && 0.0305 <= driver_summary.genome.pi_hi90;
        println!(
            "seed {seed}: pi mean {:.4} CI ({:.4}, {:.4}) covers true: {covered}",
            driver_summary.genome.pi_mean,
            driver_summary.genome.pi_lo90,
            driver_summary.genome.pi_hi90
        );

        // criterion 6: first true passenger by rate rank vs MLE rank
        let truth = study.driver_labels();
        let means: Vec<f64> = rate_summary.genes.iter().map(|s| s.mean).collect();
        let bayes_rank = rank_descending(&means);
        let cache =
            ExposureCache::build(&study.dataset, &study.alpha, &study.beta).unwrap();
        let mles: Vec<f64> = (0..study.dataset.n_genes())
            .map(|g| study.dataset.gene_count_total(g) as f64 / cache.exposure(g))
            .collect();
        let mle_rank = rank_descending(&mles);
        let first_passenger =
            |order: &[usize]| order.iter().position(|&g| !truth[g]).unwrap() + 1;
        println!(
            "seed {seed}: first passenger position — rate model {}, MLE {}",
            first_passenger(&bayes_rank),
            first_passenger(&mle_rank)
        );

        if seed == 1 {
            // criterion 3: FDR curves
            let p_driver: Vec<f64> =
                driver_summary.genes.iter().map(|s| s.p_driver).collect();
            let ks: Vec<usize> = (1..=200).collect();
            let bayes_est = bayes_fdr_curve(&p_driver, &ks).unwrap();
            let bayes_order = rank_descending(&p_driver);
            let bayes_true = true_fdr_curve(&bayes_order, &truth);
            let max_dev = (0..200)
                .map(|i| (bayes_est[i] - bayes_true[i]).abs())
                .fold(0.0f64, f64::max);
            println!("seed 1: max |bayes est - true| over k<=200: {:.4}", max_dev);

            let baseline = compute_baseline(&study.dataset, &cache, lambda0).unwrap();
            let ps: Vec<f64> = baseline.iter().map(|r| r.p_value).collect();
            let qs = bh_fdr(&ps);
            let lrt_order = rank_ascending(&ps);
            let lrt_true = true_fdr_curve(&lrt_order, &truth);
            let mut worst_factor = 0.0f64;
            let mut at_k = 0;
            for k in 1..=200usize {
                let t = lrt_true[k - 1];
                if t >= 0.1 {
                    let est = qs[lrt_order[k - 1]];
                    let factor = (est / t).max(t / est.max(1e-12));
                    if factor > worst_factor {
                        worst_factor = factor;
                        at_k = k;
                    }
                }
            }
            println!(
                "seed 1: BH worst factor vs true (true >= 0.1): {:.2} at k={at_k}",
                worst_factor
            );

            // criteria 4 & 5: lambda0 sensitivity
            let mut pis = Vec::new();
            let mut tops: Vec<Vec<usize>> = Vec::new();
            for mult in [0.5, 1.0, 2.0] {
                let cfg = ModelConfig {
                    lambda0: Some(lambda0 * mult),
                    seed,
                    ..base_config.clone()
                };
                let tr = run_chain(&study.dataset, &cfg, ModelKind::Driver).unwrap();
                let ds = driver_probability_summary(&tr).unwrap();
                pis.push(ds.genome.pi_mean);
                let pd: Vec<f64> = ds.genes.iter().map(|s| s.p_driver).collect();
                tops.push(rank_descending(&pd)[..50].to_vec());
            }
            println!(
                "seed 1: pi at lambda0/2, lambda0, 2*lambda0 = {:.4} {:.4} {:.4}",
                pis[0], pis[1], pis[2]
            );
            let high: std::collections::HashSet<usize> = tops[2].iter().cloned().collect();
            let overlap = tops[0].iter().filter(|g| high.contains(g)).count();
            println!("seed 1: top-50 overlap between 2*lambda0 and lambda0/2: {overlap}/50");
        }
    }
}
