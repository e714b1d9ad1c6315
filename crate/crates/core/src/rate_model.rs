//! Per-gene mutation-rate model: a Dirichlet-process prior with
//! Exponential(gamma) base over the gene rates, sampled by collapsed Gibbs
//! reassignment with instantiated cluster values.
//!
//! The Exponential base is Gamma(1, gamma), conjugate to the Poisson gene
//! likelihood lambda^X exp(-lambda E), so the new-cluster predictive and the
//! cluster-value conditionals are closed-form.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma};

use crate::config::ModelConfig;
use crate::dataset::MutationDataset;
use crate::engine::{initial_gamma, ModelKind, ModelPlugin};
use crate::exposure::ExposureCache;
use crate::math::{poisson_log_kernel, sample_log_weights};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy)]
pub struct Cluster {
    pub value: f64,
    pub size: usize,
}

const SPLIT_MERGE_MOVES_PER_SWEEP: usize = 5;
const SPLIT_MERGE_SCANS: usize = 2;

/// Log of the new-cluster predictive: the Poisson likelihood integrated
/// against the Exponential(gamma) base, a geometric distribution in the
/// count: P(X = x) = (gamma / (gamma + E)) * (E / (gamma + E))^x.
pub fn new_cluster_log_predictive(x: f64, exposure: f64, gamma: f64) -> f64 {
    if exposure == 0.0 {
        return 0.0; // x is necessarily 0
    }
    let denom = (gamma + exposure).ln();
    gamma.ln() - denom + x * (exposure.ln() - denom)
}

/// Conjugate conditional of a cluster value given its members' totals:
/// Gamma(1 + sum X, gamma + sum E).
pub fn cluster_conditional(sum_x: f64, sum_e: f64, gamma: f64) -> (f64, f64) {
    (1.0 + sum_x, gamma + sum_e)
}

pub fn draw_cluster_value(sum_x: f64, sum_e: f64, gamma: f64, rng: &mut ChaCha12Rng) -> f64 {
    let (shape, rate) = cluster_conditional(sum_x, sum_e, gamma);
    Gamma::new(shape, 1.0 / rate)
        .expect("positive conditional parameters")
        .sample(rng)
}

#[derive(Debug, Clone)]
pub struct RateModel {
    concentration: f64,
    assignment: Vec<u32>,
    clusters: Vec<Cluster>,
    lambdas: Vec<f64>,
}

impl RateModel {
    pub fn init(data: &MutationDataset, config: &ModelConfig) -> Self {
        let theta0 = 1.0 / initial_gamma(config, data.crude_rate());
        let n = data.n_genes();
        RateModel {
            concentration: config.concentration,
            assignment: vec![0; n],
            clusters: if n > 0 {
                vec![Cluster {
                    value: theta0,
                    size: n,
                }]
            } else {
                Vec::new()
            },
            lambdas: vec![theta0; n],
        }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    fn detach(&mut self, g: usize) {
        let c = self.assignment[g] as usize;
        self.clusters[c].size -= 1;
        if self.clusters[c].size == 0 {
            self.clusters.remove(c);
            for a in self.assignment.iter_mut() {
                if *a as usize > c {
                    *a -= 1;
                }
            }
        }
    }

    /// Collapsed-Gibbs reassignment of gene g: existing cluster c with
    /// weight n_c * Poisson(X_g | theta_c E_g), a fresh cluster with weight
    /// a * predictive; fresh values are drawn from the Gamma(1+X, gamma+E)
    /// posterior.
    pub fn reassign_gene(
        &mut self,
        cache: &ExposureCache,
        g: usize,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        self.detach(g);
        let x = cache.count_total(g);
        let e = cache.exposure(g);

        let mut log_weights = Vec::with_capacity(self.clusters.len() + 1);
        for cluster in &self.clusters {
            log_weights
                .push((cluster.size as f64).ln() + poisson_log_kernel(x, cluster.value * e));
        }
        // Existing-cluster weights drop the common 1/x! of the Poisson pmf;
        // the integrated predictive must drop it too.
        log_weights.push(
            self.concentration.ln() + ln_gamma(x + 1.0) + new_cluster_log_predictive(x, e, gamma),
        );

        let pick = sample_log_weights(&log_weights, rng.random::<f64>());
        if pick < self.clusters.len() {
            self.clusters[pick].size += 1;
            self.assignment[g] = pick as u32;
        } else {
            let value = draw_cluster_value(x, e, gamma, rng);
            self.clusters.push(Cluster { value, size: 1 });
            self.assignment[g] = (self.clusters.len() - 1) as u32;
        }
    }

    /// Split-merge Metropolis move with restricted-Gibbs proposals.
    ///
    /// Single-gene reassignment mixes poorly across cluster merges: two
    /// clusters with similar rates trade members in proportion to their
    /// sizes and random-walk for thousands of sweeps. This move proposes
    /// whole-cluster merges (and the matching splits) with the collapsed
    /// Gamma-Poisson marginals, so passenger genes coalesce quickly.
    pub fn split_merge(
        &mut self,
        cache: &ExposureCache,
        gamma: f64,
        intermediate_scans: usize,
        rng: &mut ChaCha12Rng,
    ) {
        let n = self.assignment.len();
        if n < 2 {
            return;
        }
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let ci = self.assignment[i] as usize;
        let cj = self.assignment[j] as usize;
        let proposing_split = ci == cj;

        // Genes under restricted Gibbs: everyone in the affected clusters
        // except the two seeds.
        let shuffled: Vec<usize> = (0..n)
            .filter(|&g| {
                g != i && g != j && {
                    let c = self.assignment[g] as usize;
                    c == ci || c == cj
                }
            })
            .collect();

        // Sub-cluster bookkeeping; side A is seeded by gene i, B by gene j.
        let mut side_a: Vec<bool> = Vec::with_capacity(shuffled.len());
        let mut sums_a = (cache.count_total(i), cache.exposure(i), 1usize);
        let mut sums_b = (cache.count_total(j), cache.exposure(j), 1usize);
        for &g in &shuffled {
            let to_a = rng.random::<bool>();
            side_a.push(to_a);
            let sums = if to_a { &mut sums_a } else { &mut sums_b };
            sums.0 += cache.count_total(g);
            sums.1 += cache.exposure(g);
            sums.2 += 1;
        }

        let predictive = |x: f64, e: f64, sums: &(f64, f64, usize)| -> f64 {
            let post_rate = gamma + sums.1;
            ln_gamma(1.0 + sums.0 + x) - ln_gamma(1.0 + sums.0)
                + (1.0 + sums.0) * (post_rate.ln() - (post_rate + e).ln())
                + x * (e.ln() - (post_rate + e).ln())
        };

        // Restricted Gibbs over the shuffled genes. `forced` replays a fixed
        // assignment instead of sampling; the return value is the log
        // probability of whatever assignment was realized.
        let scan = |side_a: &mut Vec<bool>,
                        sums_a: &mut (f64, f64, usize),
                        sums_b: &mut (f64, f64, usize),
                        forced: Option<&[bool]>,
                        rng: &mut ChaCha12Rng|
         -> f64 {
            let mut log_prob = 0.0;
            for (idx, &g) in shuffled.iter().enumerate() {
                let x = cache.count_total(g);
                let e = cache.exposure(g);
                {
                    let current = if side_a[idx] { &mut *sums_a } else { &mut *sums_b };
                    current.0 -= x;
                    current.1 -= e;
                    current.2 -= 1;
                }
                let wa = (sums_a.2 as f64).ln() + predictive(x, e, sums_a);
                let wb = (sums_b.2 as f64).ln() + predictive(x, e, sums_b);
                let p_a = 1.0 / (1.0 + (wb - wa).exp());
                let to_a = match forced {
                    Some(target) => target[idx],
                    None => rng.random::<f64>() < p_a,
                };
                log_prob += if to_a { p_a.ln() } else { (1.0 - p_a).ln() };
                side_a[idx] = to_a;
                let chosen = if to_a { &mut *sums_a } else { &mut *sums_b };
                chosen.0 += x;
                chosen.1 += e;
                chosen.2 += 1;
            }
            log_prob
        };

        for _ in 0..intermediate_scans {
            scan(&mut side_a, &mut sums_a, &mut sums_b, None, rng);
        }

        let log_marginal = |sums: &(f64, f64, usize)| -> f64 {
            gamma.ln() + ln_gamma(1.0 + sums.0) - (1.0 + sums.0) * (gamma + sums.1).ln()
        };

        if proposing_split {
            let log_q = scan(&mut side_a, &mut sums_a, &mut sums_b, None, rng);
            let merged = (
                sums_a.0 + sums_b.0,
                sums_a.1 + sums_b.1,
                sums_a.2 + sums_b.2,
            );
            let log_ratio = self.concentration.ln()
                + ln_gamma(sums_a.2 as f64)
                + ln_gamma(sums_b.2 as f64)
                - ln_gamma(merged.2 as f64)
                + log_marginal(&sums_a)
                + log_marginal(&sums_b)
                - log_marginal(&merged)
                - log_q;
            if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
                self.apply_split(ci, i, j, &shuffled, &side_a, &sums_a, &sums_b, gamma, rng);
            }
        } else {
            // Ghost scan: probability of re-creating the current split from
            // the launch state.
            let original: Vec<bool> = shuffled
                .iter()
                .map(|&g| self.assignment[g] as usize == ci)
                .collect();
            let log_q = scan(&mut side_a, &mut sums_a, &mut sums_b, Some(&original), rng);
            debug_assert_eq!(side_a, original);
            let merged = (
                sums_a.0 + sums_b.0,
                sums_a.1 + sums_b.1,
                sums_a.2 + sums_b.2,
            );
            let log_ratio = -(self.concentration.ln()
                + ln_gamma(sums_a.2 as f64)
                + ln_gamma(sums_b.2 as f64)
                - ln_gamma(merged.2 as f64)
                + log_marginal(&sums_a)
                + log_marginal(&sums_b)
                - log_marginal(&merged))
                + log_q;
            if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
                self.apply_merge(ci, cj, &merged, gamma, rng);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_split(
        &mut self,
        cluster: usize,
        seed_a: usize,
        seed_b: usize,
        shuffled: &[usize],
        side_a: &[bool],
        sums_a: &(f64, f64, usize),
        sums_b: &(f64, f64, usize),
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        self.clusters.remove(cluster);
        for a in self.assignment.iter_mut() {
            if *a as usize > cluster {
                *a -= 1;
            }
        }
        let a_idx = self.clusters.len() as u32;
        self.clusters.push(Cluster {
            value: draw_cluster_value(sums_a.0, sums_a.1, gamma, rng),
            size: sums_a.2,
        });
        let b_idx = self.clusters.len() as u32;
        self.clusters.push(Cluster {
            value: draw_cluster_value(sums_b.0, sums_b.1, gamma, rng),
            size: sums_b.2,
        });
        self.assignment[seed_a] = a_idx;
        self.assignment[seed_b] = b_idx;
        for (idx, &g) in shuffled.iter().enumerate() {
            self.assignment[g] = if side_a[idx] { a_idx } else { b_idx };
        }
    }

    fn apply_merge(
        &mut self,
        ci: usize,
        cj: usize,
        merged: &(f64, f64, usize),
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        let (first, second) = if ci < cj { (ci, cj) } else { (cj, ci) };
        self.clusters.remove(second);
        self.clusters.remove(first);
        let target = self.clusters.len() as u32;
        self.clusters.push(Cluster {
            value: draw_cluster_value(merged.0, merged.1, gamma, rng),
            size: merged.2,
        });
        for a in self.assignment.iter_mut() {
            let c = *a as usize;
            if c == ci || c == cj {
                *a = target;
            } else {
                let mut shift = 0;
                if c > first {
                    shift += 1;
                }
                if c > second {
                    shift += 1;
                }
                *a = (c - shift) as u32;
            }
        }
    }

    /// Refresh every occupied cluster value from its exact conjugate
    /// conditional (once per sweep, after all reassignments).
    pub fn resample_cluster_values(
        &mut self,
        cache: &ExposureCache,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        let mut sums = vec![(0.0f64, 0.0f64); self.clusters.len()];
        for (g, &c) in self.assignment.iter().enumerate() {
            let entry = &mut sums[c as usize];
            entry.0 += cache.count_total(g);
            entry.1 += cache.exposure(g);
        }
        for (cluster, (sx, se)) in self.clusters.iter_mut().zip(sums) {
            cluster.value = draw_cluster_value(sx, se, gamma, rng);
        }
    }

    fn refresh_lambdas(&mut self) {
        for (g, &c) in self.assignment.iter().enumerate() {
            self.lambdas[g] = self.clusters[c as usize].value;
        }
    }
}

impl ModelPlugin for RateModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Rate
    }

    fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    fn cluster_values(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    fn sweep_genes(
        &mut self,
        data: &MutationDataset,
        cache: &ExposureCache,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        for g in 0..data.n_genes() {
            self.reassign_gene(cache, g, gamma, rng);
        }
        for _ in 0..SPLIT_MERGE_MOVES_PER_SWEEP {
            self.split_merge(cache, gamma, SPLIT_MERGE_SCANS, rng);
        }
        self.resample_cluster_values(cache, gamma, rng);
        self.refresh_lambdas();
    }
}
