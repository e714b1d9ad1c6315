//! Driver-probability model: passengers sit at the known per-base rate
//! lambda_0, drivers at lambda_0 + an increment drawn from a
//! Dirichlet-process mixture with Exponential(gamma) base.
//!
//! The +lambda_0 offset breaks Gamma-Poisson conjugacy, so assignment moves
//! use auxiliary components (fresh Exponential(gamma) candidates, with a
//! singleton's current value recycled as the first candidate) and occupied
//! cluster values are refreshed by slice sampling on the log increment.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Exp};

use crate::config::ModelConfig;
use crate::dataset::MutationDataset;
use crate::engine::{initial_gamma, ModelKind, ModelPlugin};
use crate::error::{Error, Result};
use crate::exposure::ExposureCache;
use crate::math::{poisson_log_kernel, sample_log_weights};
use crate::rate_model::Cluster;
use crate::slice::slice_sample;

const NO_CLUSTER: u32 = u32::MAX;

/// Unnormalized log-weights for one gene's joint (delta, assignment) draw.
///
/// Layout: `[passenger?] existing clusters... auxiliary candidates...`.
/// The passenger entry is present only when `pi` is given; assignment-only
/// moves (delta held at 1) pass `pi = None` and the shared CRP normalizer
/// drops out.
fn assignment_log_weights(
    x: f64,
    exposure: f64,
    lambda0: f64,
    pi: Option<f64>,
    n_other_drivers: usize,
    concentration: f64,
    clusters: &[Cluster],
    aux_values: &[f64],
) -> Vec<f64> {
    let mut weights = Vec::with_capacity(clusters.len() + aux_values.len() + 1);
    let crp_denom = (n_other_drivers as f64 + concentration).ln();
    let (ln_pi, ln_not_pi) = match pi {
        Some(p) => (p.ln(), (1.0 - p).ln()),
        None => (0.0, 0.0),
    };
    if pi.is_some() {
        weights.push(ln_not_pi + poisson_log_kernel(x, lambda0 * exposure));
    }
    let denom = if pi.is_some() { crp_denom } else { 0.0 };
    for cluster in clusters {
        weights.push(
            ln_pi + (cluster.size as f64).ln() - denom
                + poisson_log_kernel(x, (lambda0 + cluster.value) * exposure),
        );
    }
    let ln_aux_prior = (concentration / aux_values.len() as f64).ln();
    for &theta in aux_values {
        weights.push(
            ln_pi + ln_aux_prior - denom + poisson_log_kernel(x, (lambda0 + theta) * exposure),
        );
    }
    weights
}

/// Log-conditional of a cluster's increment on the log scale, given member
/// totals (sum X, sum E): sx*ln(lambda0+theta) - (se+gamma)*theta, plus the
/// log-scale Jacobian.
fn increment_log_conditional(log_theta: f64, sx: f64, se: f64, lambda0: f64, gamma: f64) -> f64 {
    let theta = log_theta.exp();
    sx * (lambda0 + theta).ln() - (se + gamma) * theta + log_theta
}

#[derive(Debug, Clone)]
pub struct DriverModel {
    lambda0: f64,
    concentration: f64,
    aux: usize,
    pi_prior: (f64, f64),
    delta: Vec<bool>,
    assignment: Vec<u32>,
    clusters: Vec<Cluster>,
    n_drivers: usize,
    pi: f64,
    lambdas: Vec<f64>,
}

impl DriverModel {
    /// Requires `lambda0` in the config.
    pub fn init(data: &MutationDataset, config: &ModelConfig) -> Result<Self> {
        let lambda0 = config
            .lambda0
            .ok_or_else(|| Error::config("the driver model requires lambda0"))?;
        if !(lambda0 > 0.0) {
            return Err(Error::config("lambda0 must be > 0"));
        }
        let n = data.n_genes();
        // Start drivers at genes with 2+ mutations, all in one cluster.
        let delta: Vec<bool> = (0..n).map(|g| data.gene_count_total(g) >= 2).collect();
        let n_drivers = delta.iter().filter(|&&d| d).count();
        let theta0 = 1.0 / initial_gamma(config, data.crude_rate());
        let clusters = if n_drivers > 0 {
            vec![Cluster {
                value: theta0,
                size: n_drivers,
            }]
        } else {
            Vec::new()
        };
        let assignment = delta
            .iter()
            .map(|&d| if d { 0 } else { NO_CLUSTER })
            .collect();
        let (a_pi, b_pi) = config.pi_prior;
        let pi = (a_pi + n_drivers as f64) / (a_pi + b_pi + n as f64);
        let lambdas = delta
            .iter()
            .map(|&d| if d { lambda0 + theta0 } else { lambda0 })
            .collect();
        Ok(DriverModel {
            lambda0,
            concentration: config.concentration,
            aux: config.aux_components,
            pi_prior: config.pi_prior,
            delta,
            assignment,
            clusters,
            n_drivers,
            pi,
            lambdas,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn delta_slice(&self) -> &[bool] {
        &self.delta
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn current_pi(&self) -> f64 {
        self.pi
    }

    pub fn set_pi(&mut self, pi: f64) {
        self.pi = pi;
    }

    /// Increment of gene g under the current state (0 for passengers).
    pub fn increment(&self, g: usize) -> f64 {
        if self.delta[g] {
            self.clusters[self.assignment[g] as usize].value
        } else {
            0.0
        }
    }

    /// Detach a driver gene from its cluster; returns the orphaned value if
    /// the gene was a singleton (recycled as the first auxiliary candidate).
    fn detach(&mut self, g: usize) -> Option<f64> {
        let c = self.assignment[g] as usize;
        self.assignment[g] = NO_CLUSTER;
        self.clusters[c].size -= 1;
        if self.clusters[c].size == 0 {
            let value = self.clusters[c].value;
            self.clusters.remove(c);
            for a in self.assignment.iter_mut() {
                if *a != NO_CLUSTER && *a as usize > c {
                    *a -= 1;
                }
            }
            Some(value)
        } else {
            None
        }
    }

    fn draw_aux(&self, seed_value: Option<f64>, gamma: f64, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let exp = Exp::new(gamma).expect("gamma > 0");
        let mut aux = Vec::with_capacity(self.aux);
        if let Some(v) = seed_value {
            aux.push(v);
        }
        while aux.len() < self.aux {
            aux.push(exp.sample(rng));
        }
        aux
    }

    /// Joint Gibbs draw of (delta_g, cluster assignment).
    pub fn update_delta(
        &mut self,
        cache: &ExposureCache,
        g: usize,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        let was_driver = self.delta[g];
        let orphan = if was_driver { self.detach(g) } else { None };
        if was_driver {
            self.n_drivers -= 1;
            self.delta[g] = false;
        }
        let aux = self.draw_aux(orphan, gamma, rng);
        let weights = assignment_log_weights(
            cache.count_total(g),
            cache.exposure(g),
            self.lambda0,
            Some(self.pi),
            self.n_drivers,
            self.concentration,
            &self.clusters,
            &aux,
        );
        let pick = sample_log_weights(&weights, rng.random::<f64>());
        if pick == 0 {
            return; // stays / becomes passenger
        }
        self.delta[g] = true;
        self.n_drivers += 1;
        let cluster_pick = pick - 1;
        if cluster_pick < self.clusters.len() {
            self.clusters[cluster_pick].size += 1;
            self.assignment[g] = cluster_pick as u32;
        } else {
            let theta = aux[cluster_pick - self.clusters.len()];
            self.clusters.push(Cluster {
                value: theta,
                size: 1,
            });
            self.assignment[g] = (self.clusters.len() - 1) as u32;
        }
    }

    /// Auxiliary-component reassignment of every driver gene among the
    /// increment clusters, then a slice-sampling refresh of each occupied
    /// cluster value. No-op when no gene is a driver.
    pub fn update_increments(
        &mut self,
        cache: &ExposureCache,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        for g in 0..self.delta.len() {
            if !self.delta[g] {
                continue;
            }
            let orphan = self.detach(g);
            let aux = self.draw_aux(orphan, gamma, rng);
            let weights = assignment_log_weights(
                cache.count_total(g),
                cache.exposure(g),
                self.lambda0,
                None,
                self.n_drivers - 1,
                self.concentration,
                &self.clusters,
                &aux,
            );
            let pick = sample_log_weights(&weights, rng.random::<f64>());
            if pick < self.clusters.len() {
                self.clusters[pick].size += 1;
                self.assignment[g] = pick as u32;
            } else {
                let theta = aux[pick - self.clusters.len()];
                self.clusters.push(Cluster {
                    value: theta,
                    size: 1,
                });
                self.assignment[g] = (self.clusters.len() - 1) as u32;
            }
        }

        // Slice refresh of occupied cluster values on the log scale.
        let mut sums = vec![(0.0f64, 0.0f64); self.clusters.len()];
        for (g, &c) in self.assignment.iter().enumerate() {
            if c != NO_CLUSTER {
                let entry = &mut sums[c as usize];
                entry.0 += cache.count_total(g);
                entry.1 += cache.exposure(g);
            }
        }
        let lambda0 = self.lambda0;
        for (cluster, (sx, se)) in self.clusters.iter_mut().zip(sums) {
            let target = |log_theta: f64| increment_log_conditional(log_theta, sx, se, lambda0, gamma);
            let new_log = slice_sample(cluster.value.ln(), target, 1.0, 64, rng);
            cluster.value = new_log.exp();
        }
    }

    /// Conjugate Beta draw of the genome-wide driver proportion.
    pub fn update_pi(&mut self, rng: &mut ChaCha12Rng) {
        let (a, b) = self.pi_prior;
        let n1 = self.n_drivers as f64;
        let n0 = (self.delta.len() - self.n_drivers) as f64;
        self.pi = Beta::new(a + n1, b + n0)
            .expect("positive Beta parameters")
            .sample(rng);
    }

    fn refresh_lambdas(&mut self) {
        for g in 0..self.delta.len() {
            self.lambdas[g] = self.lambda0 + self.increment(g);
        }
    }
}

impl ModelPlugin for DriverModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Driver
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

    fn pi(&self) -> Option<f64> {
        Some(self.pi)
    }

    fn delta(&self) -> Option<Vec<bool>> {
        Some(self.delta.clone())
    }

    fn sweep_genes(
        &mut self,
        data: &MutationDataset,
        cache: &ExposureCache,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    ) {
        for g in 0..data.n_genes() {
            self.update_delta(cache, g, gamma, rng);
        }
        self.update_increments(cache, gamma, rng);
        self.refresh_lambdas();
    }

    fn post_sweep(&mut self, rng: &mut ChaCha12Rng) {
        self.update_pi(rng);
    }
}
