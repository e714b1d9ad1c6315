//! Desk-scale behavior of the rate model under fixed vs sampled gamma,
//! with the production sampler and the independent collapsed sampler.

use mutbayes_core::engine::ModelPlugin;
use mutbayes_core::rate_model::RateModel;
use mutbayes_core::rng::stream_rng;
use mutbayes_core::simulator::{generate, ScenarioSpec};
use mutbayes_core::{ExposureCache, ModelConfig};
use rand::Rng;
use rand_distr::Distribution;
use statrs::function::gamma::ln_gamma;

fn predictive(x: f64, e: f64, sx: f64, se: f64, gamma: f64) -> f64 {
    let rate = gamma + se;
    ln_gamma(1.0 + sx + x) - ln_gamma(1.0 + sx) + (1.0 + sx) * (rate.ln() - (rate + e).ln())
        + x * (e.ln() - (rate + e).ln())
}

struct CollapsedChain {
    assignment: Vec<usize>,
    clusters: Vec<(usize, f64, f64)>,
    concentration: f64,
}

impl CollapsedChain {
    fn sweep(&mut self, xs: &[f64], es: &[f64], gamma: f64, rng: &mut rand_chacha::ChaCha12Rng) {
        for g in 0..self.assignment.len() {
            let c = self.assignment[g];
            self.clusters[c].0 -= 1;
            self.clusters[c].1 -= xs[g];
            self.clusters[c].2 -= es[g];
            if self.clusters[c].0 == 0 {
                self.clusters.remove(c);
                for a in self.assignment.iter_mut() {
                    if *a > c {
                        *a -= 1;
                    }
                }
            }
            let mut weights: Vec<f64> = self
                .clusters
                .iter()
                .map(|&(n, sx, se)| (n as f64).ln() + predictive(xs[g], es[g], sx, se, gamma))
                .collect();
            weights.push(self.concentration.ln() + predictive(xs[g], es[g], 0.0, 0.0, gamma));
            let pick = mutbayes_core::math::sample_log_weights(&weights, rng.random::<f64>());
            if pick < self.clusters.len() {
                self.clusters[pick].0 += 1;
                self.clusters[pick].1 += xs[g];
                self.clusters[pick].2 += es[g];
                self.assignment[g] = pick;
            } else {
                self.clusters.push((1, xs[g], es[g]));
                self.assignment[g] = self.clusters.len() - 1;
            }
        }
    }
}

fn main() {
    let spec = ScenarioSpec::paper_scale(1).desk_scale(2000).unwrap();
    let study = generate(&spec).unwrap();
    let data = &study.dataset;
    let cache = ExposureCache::build(data, &study.alpha, &study.beta).unwrap();
    let xs: Vec<f64> = (0..data.n_genes()).map(|g| cache.count_total(g)).collect();
    let es: Vec<f64> = (0..data.n_genes()).map(|g| cache.exposure(g)).collect();
    let zero: Vec<usize> = (0..data.n_genes())
        .filter(|&g| data.gene_count_total(g) == 0)
        .collect();
    let crude_gamma = 1.0 / data.crude_rate();
    let sweeps = 20_000;
    let burn = 5_000;
    let kept = (sweeps - burn) as f64;
    println!("gamma_fixed = {crude_gamma:.3e}");

    for sampled_gamma in [false, true] {
        // Collapsed reference.
        let mut rng = stream_rng(900, "a", sampled_gamma as u64);
        let mut chain = CollapsedChain {
            assignment: vec![0; data.n_genes()],
            clusters: vec![(data.n_genes(), xs.iter().sum(), es.iter().sum())],
            concentration: 1.0,
        };
        let mut gamma = crude_gamma;
        let (mut zacc, mut cacc, mut gacc) = (0.0, 0.0, 0.0);
        for s in 0..sweeps {
            chain.sweep(&xs, &es, gamma, &mut rng);
            if sampled_gamma {
                // Instantiate values to update gamma, matching production.
                let values: Vec<f64> = chain
                    .clusters
                    .iter()
                    .map(|&(_, sx, se)| {
                        rand_distr::Gamma::new(1.0 + sx, 1.0 / (gamma + se))
                            .unwrap()
                            .sample(&mut rng)
                    })
                    .collect();
                let (sh, ra) =
                    mutbayes_core::engine::gamma_conditional((1.0, data.crude_rate()), &values);
                gamma = mutbayes_core::engine::draw_gamma(sh, ra, &mut rng);
            }
            if s >= burn {
                zacc += zero
                    .iter()
                    .map(|&g| {
                        let (_, sx, se) = chain.clusters[chain.assignment[g]];
                        (1.0 + sx) / (gamma + se)
                    })
                    .sum::<f64>()
                    / zero.len() as f64;
                cacc += chain.clusters.len() as f64;
                gacc += gamma;
            }
        }
        println!(
            "collapsed  sampled_gamma={sampled_gamma}: zero-mean ratio {:.3}, clusters {:.1}, gamma {:.2e}",
            zacc / kept / 3.68e-7,
            cacc / kept,
            gacc / kept
        );

        // Production sampler.
        let mut rng = stream_rng(901, "b", sampled_gamma as u64);
        let config = ModelConfig::default();
        let mut model = RateModel::init(data, &config);
        let mut gamma = crude_gamma;
        let (mut zacc, mut cacc) = (0.0, 0.0);
        for s in 0..sweeps {
            model.sweep_genes(data, &cache, gamma, &mut rng);
            if sampled_gamma {
                let values = model.cluster_values();
                let (sh, ra) =
                    mutbayes_core::engine::gamma_conditional((1.0, data.crude_rate()), &values);
                gamma = mutbayes_core::engine::draw_gamma(sh, ra, &mut rng);
            }
            if s >= burn {
                zacc += zero.iter().map(|&g| model.lambdas()[g]).sum::<f64>()
                    / zero.len() as f64;
                cacc += model.n_clusters() as f64;
            }
        }
        println!(
            "production sampled_gamma={sampled_gamma}: zero-mean ratio {:.3}, clusters {:.1}",
            zacc / kept / 3.68e-7,
            cacc / kept
        );
    }
}
