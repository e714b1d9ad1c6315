//! Cross-check of the production rate sampler against an independent,
//! fully collapsed (predictive-weight) partition sampler on a mid-size
//! instance with desk-like per-gene information.

use mutbayes_core::engine::ModelPlugin;
use mutbayes_core::rate_model::RateModel;
use mutbayes_core::rng::stream_rng;
use mutbayes_core::simulator::{generate, ScenarioSpec, TierSpec};
use mutbayes_core::{ExposureCache, ModelConfig};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Collapsed CRP Gibbs: clusters carry only (n, sum_x, sum_e); assignment
/// weights use the Gamma-Poisson posterior predictive throughout.
struct CollapsedChain {
    assignment: Vec<usize>,
    clusters: Vec<(usize, f64, f64)>, // (n, sx, se)
    concentration: f64,
}

fn predictive(x: f64, e: f64, sx: f64, se: f64, gamma: f64) -> f64 {
    let rate = gamma + se;
    ln_gamma(1.0 + sx + x) - ln_gamma(1.0 + sx) + (1.0 + sx) * (rate.ln() - (rate + e).ln())
        + x * (e.ln() - (rate + e).ln())
}

impl CollapsedChain {
    fn new(n: usize, xs: &[f64], es: &[f64], concentration: f64) -> Self {
        CollapsedChain {
            assignment: vec![0; n],
            clusters: vec![(n, xs.iter().sum(), es.iter().sum())],
            concentration,
        }
    }

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

    /// Posterior-mean rate per gene under the current partition.
    fn mean_rates(&self, gamma: f64) -> Vec<f64> {
        self.assignment
            .iter()
            .map(|&c| {
                let (_, sx, se) = self.clusters[c];
                (1.0 + sx) / (gamma + se)
            })
            .collect()
    }
}

fn main() {
    // Mid-size instance with desk-like weak per-gene counts.
    let spec = ScenarioSpec {
        n_genes: 300,
        driver_tiers: vec![
            TierSpec {
                fraction: 0.02,
                multiplier: 10.0,
            },
            TierSpec {
                fraction: 0.01,
                multiplier: 30.0,
            },
            TierSpec {
                fraction: 0.004,
                multiplier: 200.0,
            },
        ],
        ..ScenarioSpec::paper_scale(2)
    };
    let study = generate(&spec).unwrap();
    let data = &study.dataset;
    let cache = ExposureCache::build(data, &study.alpha, &study.beta).unwrap();
    let xs: Vec<f64> = (0..data.n_genes()).map(|g| cache.count_total(g)).collect();
    let es: Vec<f64> = (0..data.n_genes()).map(|g| cache.exposure(g)).collect();
    let zero_genes: Vec<usize> = (0..data.n_genes())
        .filter(|&g| data.gene_count_total(g) == 0)
        .collect();
    let gamma = 1.0 / data.crude_rate();
    println!(
        "n={} zero genes={} total X={} fixed gamma={:.3e}",
        data.n_genes(),
        zero_genes.len(),
        data.total_count(),
        gamma
    );

    // Independent collapsed sampler.
    let mut rng = stream_rng(777, "alg3", 0);
    let mut chain = CollapsedChain::new(data.n_genes(), &xs, &es, 1.0);
    let sweeps = 60_000;
    let burn = 10_000;
    let mut zero_acc = 0.0;
    let mut cl_acc = 0.0;
    for s in 0..sweeps {
        chain.sweep(&xs, &es, gamma, &mut rng);
        if s >= burn {
            let rates = chain.mean_rates(gamma);
            zero_acc +=
                zero_genes.iter().map(|&g| rates[g]).sum::<f64>() / zero_genes.len() as f64;
            cl_acc += chain.clusters.len() as f64;
        }
    }
    let kept = (sweeps - burn) as f64;
    println!(
        "collapsed reference: zero-gene mean {:.4e} ({:.3} of lambda0), clusters {:.2}",
        zero_acc / kept,
        zero_acc / kept / 3.68e-7,
        cl_acc / kept
    );

    // Production sampler, fixed gamma, same data.
    let config = ModelConfig::default();
    let mut model = RateModel::init(data, &config);
    let mut rng = stream_rng(778, "prod", 0);
    let mut zero_acc = 0.0;
    let mut cl_acc = 0.0;
    for s in 0..sweeps {
        model.sweep_genes(data, &cache, gamma, &mut rng);
        if s >= burn {
            zero_acc += zero_genes
                .iter()
                .map(|&g| model.lambdas()[g])
                .sum::<f64>()
                / zero_genes.len() as f64;
            cl_acc += model.n_clusters() as f64;
        }
    }
    println!(
        "production sampler:  zero-gene mean {:.4e} ({:.3} of lambda0), clusters {:.2}",
        zero_acc / kept,
        zero_acc / kept / 3.68e-7,
        cl_acc / kept
    );
}
