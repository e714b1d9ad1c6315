//! The MCMC loop: sweep scheduling, shared-parameter updates, trace
//! recording. Gene-rate moves are delegated to the active model plug-in.
//!
//! Sweep order: gene-rate updates (plug-in) -> alpha pass -> beta pass ->
//! gamma -> plug-in extras (pi for the driver model) -> record.
//!
//! The type and sample effects live in log space on the sum-zero hyperplane.
//! A proposal perturbs one coordinate and subtracts the mean from the whole
//! log-vector, an exact projection that keeps the product-one constraint;
//! the acceptance ratio is evaluated for the projected proposal, which is
//! symmetric along its one-dimensional direction, so plain likelihood ratios
//! suffice.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::config::ModelConfig;
use crate::dataset::MutationDataset;
use crate::error::{Error, Result};
use crate::exposure::ExposureCache;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rate,
    Driver,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Rate => "rate",
            ModelKind::Driver => "driver",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "rate" => Some(ModelKind::Rate),
            "driver" => Some(ModelKind::Driver),
            _ => None,
        }
    }
}

/// Gene-rate machinery each model supplies to the engine.
pub trait ModelPlugin {
    fn kind(&self) -> ModelKind;
    /// Current per-gene rates lambda_g.
    fn lambdas(&self) -> &[f64];
    /// Values of the occupied clusters (increment clusters for the driver
    /// model); these are the Exponential(gamma) draws the gamma update sees.
    fn cluster_values(&self) -> Vec<f64>;
    fn n_clusters(&self) -> usize;
    fn pi(&self) -> Option<f64> {
        None
    }
    fn delta(&self) -> Option<Vec<bool>> {
        None
    }
    /// One full pass of gene-rate updates.
    fn sweep_genes(
        &mut self,
        data: &MutationDataset,
        cache: &ExposureCache,
        gamma: f64,
        rng: &mut ChaCha12Rng,
    );
    /// Updates that follow the shared-parameter block (pi for drivers).
    fn post_sweep(&mut self, _rng: &mut ChaCha12Rng) {}
}

// ---------------------------------------------------------------------------
// Effects
// ---------------------------------------------------------------------------

/// Log-parameterized effect vectors with per-coordinate proposal scales.
#[derive(Debug, Clone)]
pub struct EffectState {
    pub log_alpha: Vec<f64>,
    pub log_beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_scales: Vec<f64>,
    pub beta_scales: Vec<f64>,
    /// 1 / sigma^2 of the Normal log-effect prior; 0 means flat.
    pub prior_precision: f64,
}

impl EffectState {
    pub fn unit(n_types: usize, n_samples: usize, scales: (f64, f64)) -> Self {
        EffectState::with_prior(n_types, n_samples, scales, f64::INFINITY)
    }

    pub fn with_prior(
        n_types: usize,
        n_samples: usize,
        scales: (f64, f64),
        prior_sigma: f64,
    ) -> Self {
        EffectState {
            log_alpha: vec![0.0; n_types],
            log_beta: vec![0.0; n_samples],
            alpha: vec![1.0; n_types],
            beta: vec![1.0; n_samples],
            alpha_scales: vec![scales.0; n_types],
            beta_scales: vec![scales.1; n_samples],
            prior_precision: if prior_sigma.is_finite() {
                1.0 / (prior_sigma * prior_sigma)
            } else {
                0.0
            },
        }
    }

    /// Subtract the mean from a log-vector and re-exponentiate.
    fn recenter(log_values: &mut [f64], values: &mut [f64]) {
        let mean = log_values.iter().sum::<f64>() / log_values.len() as f64;
        for (lv, v) in log_values.iter_mut().zip(values.iter_mut()) {
            *lv -= mean;
            *v = lv.exp();
        }
    }
}

const ADAPT_TARGET: f64 = 0.44;
const SCALE_MIN: f64 = 1e-4;
const SCALE_MAX: f64 = 10.0;

/// One Metropolis pass over a log-effect vector.
///
/// `count_marginals[i]` is the total count attached to coordinate i and
/// `rate_weights[i]` the coefficient of effect i in the Poisson rate sum,
/// holding everything else fixed. Returns the number of accepted proposals.
#[allow(clippy::too_many_arguments)]
fn metropolis_pass(
    log_values: &mut [f64],
    values: &mut [f64],
    scales: &mut [f64],
    count_marginals: &[f64],
    rate_weights: &[f64],
    prior_precision: f64,
    adapting: bool,
    sweep: u64,
    rng: &mut ChaCha12Rng,
) -> usize {
    let n = log_values.len();
    if n == 0 {
        return 0;
    }
    let marginal_total: f64 = count_marginals.iter().sum();
    let kappa = (sweep.max(1) as f64).powf(-0.6);
    let mut accepted = 0;

    for i in 0..n {
        let scale = scales[i];
        let step = if scale > 0.0 {
            Normal::new(0.0, scale).expect("finite scale").sample(rng)
        } else {
            0.0
        };
        // Projected proposal: +step on coordinate i, -step/n everywhere.
        let shift = step / n as f64;
        let mut delta_ll = step * (count_marginals[i] - marginal_total / n as f64);
        for j in 0..n {
            let extra = if j == i { step } else { 0.0 };
            let new_log = log_values[j] - shift + extra;
            delta_ll -= (new_log.exp() - values[j]) * rate_weights[j];
            if prior_precision > 0.0 {
                delta_ll -=
                    0.5 * prior_precision * (new_log * new_log - log_values[j] * log_values[j]);
            }
        }
        let accept = delta_ll >= 0.0 || rng.random::<f64>() < delta_ll.exp();
        if accept {
            for j in 0..n {
                let extra = if j == i { step } else { 0.0 };
                log_values[j] = log_values[j] - shift + extra;
                values[j] = log_values[j].exp();
            }
            accepted += 1;
        }
        if adapting && scale > 0.0 {
            let acc = if accept { 1.0 } else { 0.0 };
            scales[i] = (scales[i] * (kappa * (acc - ADAPT_TARGET)).exp())
                .clamp(SCALE_MIN, SCALE_MAX);
        }
    }
    accepted
}

/// Coefficients of each alpha_m in sum_cells lambda * alpha * beta * T,
/// under the current lambdas and betas.
fn alpha_rate_weights(data: &MutationDataset, cache: &ExposureCache, lambdas: &[f64]) -> Vec<f64> {
    let pattern_beta = cache.pattern_beta();
    (0..data.n_types())
        .map(|m| {
            data.type_rows(m)
                .iter()
                .map(|row| {
                    lambdas[row.gene as usize]
                        * row.bases as f64
                        * pattern_beta[row.pattern as usize]
                })
                .sum()
        })
        .collect()
}

/// Coefficients of each beta_k, under the current lambdas and alphas.
fn beta_rate_weights(data: &MutationDataset, cache: &ExposureCache, lambdas: &[f64]) -> Vec<f64> {
    let mut pattern_acc = vec![0.0; data.patterns().len()];
    for g in 0..data.n_genes() {
        let lam = lambdas[g];
        for &(p, c) in cache.gene_patterns(g) {
            pattern_acc[p as usize] += lam * c;
        }
    }
    let mut weights = vec![0.0; data.n_samples()];
    for (p, pat) in data.patterns().iter().enumerate() {
        for &k in pat {
            weights[k as usize] += pattern_acc[p];
        }
    }
    weights
}

/// One Metropolis pass over alpha then beta, with the exposure cache kept in
/// step incrementally. Rejected proposals leave the state unchanged.
pub fn update_effects(
    data: &MutationDataset,
    cache: &mut ExposureCache,
    lambdas: &[f64],
    effects: &mut EffectState,
    adapting: bool,
    sweep: u64,
    rng: &mut ChaCha12Rng,
) -> Result<()> {
    let alpha_weights = alpha_rate_weights(data, cache, lambdas);
    metropolis_pass(
        &mut effects.log_alpha,
        &mut effects.alpha,
        &mut effects.alpha_scales,
        data.type_count_totals(),
        &alpha_weights,
        effects.prior_precision,
        adapting,
        sweep,
        rng,
    );
    EffectState::recenter(&mut effects.log_alpha, &mut effects.alpha);
    cache.set_alpha(data, &effects.alpha)?;

    let beta_weights = beta_rate_weights(data, cache, lambdas);
    metropolis_pass(
        &mut effects.log_beta,
        &mut effects.beta,
        &mut effects.beta_scales,
        data.sample_count_totals(),
        &beta_weights,
        effects.prior_precision,
        adapting,
        sweep,
        rng,
    );
    EffectState::recenter(&mut effects.log_beta, &mut effects.beta);
    cache.set_beta(data, &effects.beta)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Gamma
// ---------------------------------------------------------------------------

/// Conjugate conditional of the base-measure rate gamma: cluster values are
/// Exponential(gamma) draws under a Gamma(shape, rate) prior.
pub fn gamma_conditional(prior: (f64, f64), cluster_values: &[f64]) -> (f64, f64) {
    (
        prior.0 + cluster_values.len() as f64,
        prior.1 + cluster_values.iter().sum::<f64>(),
    )
}

pub fn draw_gamma(shape: f64, rate: f64, rng: &mut ChaCha12Rng) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("positive gamma parameters")
        .sample(rng)
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

/// Total Poisson log-likelihood over cells with positive coverage.
///
/// Zero-count cells contribute only their -lambda*alpha*beta*T term, which
/// arrives through the exposure sums without enumerating the zero cells.
pub fn log_likelihood(
    data: &MutationDataset,
    cache: &ExposureCache,
    lambdas: &[f64],
    alpha: &[f64],
    beta: &[f64],
) -> Result<f64> {
    let mut ll = 0.0;
    for g in 0..data.n_genes() {
        ll -= lambdas[g] * cache.exposure(g);
    }
    for g in 0..data.n_genes() {
        for cell in data.count_cells(g) {
            let mean = lambdas[g]
                * alpha[cell.type_idx as usize]
                * beta[cell.sample_idx as usize]
                * cell.coverage as f64;
            ll += cell.count as f64 * mean.ln();
        }
    }
    ll -= data.ln_factorial_total();
    if !ll.is_finite() {
        return Err(Error::Numerical {
            iteration: 0,
            message: format!("log-likelihood is {ll}"),
        });
    }
    Ok(ll)
}

// ---------------------------------------------------------------------------
// Trace
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub gamma: f64,
    pub pi: Option<f64>,
    pub n_clusters: usize,
    pub log_likelihood: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub delta: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub model: ModelKind,
    pub gene_names: Vec<String>,
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn n_records(&self) -> usize {
        self.records.len()
    }

    /// Draws of lambda_g across records.
    pub fn lambda_draws(&self, g: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.lambda[g]).collect()
    }

    pub fn pi_draws(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.pi).collect()
    }

    /// Fraction of records with delta_g = 1.
    pub fn driver_fraction(&self, g: usize) -> f64 {
        let mut hits = 0usize;
        let mut total = 0usize;
        for r in &self.records {
            if let Some(delta) = &r.delta {
                total += 1;
                if delta[g] {
                    hits += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }
}

fn join_floats(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&format!("{v}"));
    }
    s
}

/// Newline-delimited trace format, one record per kept iteration. Field
/// order is stable: iteration, gamma, pi, n_clusters, log_likelihood,
/// alpha, beta, lambda, delta.
pub fn write_trace(trace: &Trace, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "#mutbayes-trace\tv1")?;
    writeln!(w, "#model\t{}", trace.model.as_str())?;
    writeln!(w, "#genes\t{}", trace.gene_names.join(","))?;
    writeln!(
        w,
        "#fields\titeration\tgamma\tpi\tn_clusters\tlog_likelihood\talpha\tbeta\tlambda\tdelta"
    )?;
    for r in &trace.records {
        let pi = r.pi.map(|p| format!("{p}")).unwrap_or_else(|| "NA".into());
        let delta = match &r.delta {
            Some(d) => d.iter().map(|&b| if b { '1' } else { '0' }).collect(),
            None => "NA".to_string(),
        };
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.iteration,
            r.gamma,
            pi,
            r.n_clusters,
            r.log_likelihood,
            join_floats(&r.alpha),
            join_floats(&r.beta),
            join_floats(&r.lambda),
            delta
        )?;
    }
    Ok(())
}

fn parse_floats(s: &str, path: &Path, line: usize) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("invalid float '{v}'")))
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut model = None;
    let mut gene_names = Vec::new();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.splitn(2, '\t');
            match (parts.next(), parts.next()) {
                (Some("model"), Some(m)) => {
                    model = ModelKind::parse(m);
                }
                (Some("genes"), Some(g)) => {
                    gene_names = g.split(',').map(str::to_string).collect();
                }
                _ => {}
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 9 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 9 fields, found {}", cols.len()),
            ));
        }
        let iteration = cols[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "invalid iteration"))?;
        let gamma = cols[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "invalid gamma"))?;
        let pi = if cols[2] == "NA" {
            None
        } else {
            Some(
                cols[2]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, "invalid pi"))?,
            )
        };
        let n_clusters = cols[3]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "invalid cluster count"))?;
        let log_likelihood = cols[4]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "invalid log-likelihood"))?;
        let alpha = parse_floats(cols[5], path, lineno)?;
        let beta = parse_floats(cols[6], path, lineno)?;
        let lambda = parse_floats(cols[7], path, lineno)?;
        let delta = if cols[8] == "NA" {
            None
        } else {
            Some(cols[8].chars().map(|c| c == '1').collect())
        };
        records.push(TraceRecord {
            iteration,
            gamma,
            pi,
            n_clusters,
            log_likelihood,
            alpha,
            beta,
            lambda,
            delta,
        });
    }
    Ok(Trace {
        model: model.ok_or_else(|| Error::parse(path, 1, "missing #model header"))?,
        gene_names,
        records,
    })
}

// ---------------------------------------------------------------------------
// Chain driver
// ---------------------------------------------------------------------------

/// How often the exposure cache is rebuilt from scratch to keep incremental
/// float drift bounded far below the 1e-9 contract.
const CACHE_REFRESH_INTERVAL: u64 = 64;

pub(crate) fn initial_gamma(config: &ModelConfig, crude_rate: f64) -> f64 {
    if crude_rate > 0.0 {
        1.0 / crude_rate
    } else {
        let (s, r) = config.resolved_gamma_prior(crude_rate);
        s / r
    }
}

/// Run one chain of the given plug-in. Deterministic given (data, config).
pub fn run_chain_with<P: ModelPlugin>(
    data: &MutationDataset,
    config: &ModelConfig,
    mut plugin: P,
) -> Result<Trace> {
    config.validate()?;
    data.validate_for_fit()?;
    let mut rng = stream_rng(config.seed, "mcmc", 0);
    let gamma_prior = config.resolved_gamma_prior(data.crude_rate());
    let mut gamma = initial_gamma(config, data.crude_rate());
    let mut effects = EffectState::with_prior(
        data.n_types(),
        data.n_samples(),
        config.proposal_scales,
        config.effect_prior_sigma,
    );
    let mut cache = ExposureCache::build(data, &effects.alpha, &effects.beta)?;

    let mut records = Vec::with_capacity(config.n_records() as usize);
    for sweep in 1..=config.iterations {
        plugin.sweep_genes(data, &cache, gamma, &mut rng);

        let adapting = sweep <= config.burn_in;
        update_effects(
            data,
            &mut cache,
            plugin.lambdas(),
            &mut effects,
            adapting,
            sweep,
            &mut rng,
        )
        .map_err(|e| attach_iteration(e, sweep))?;

        let values = plugin.cluster_values();
        let (shape, rate) = gamma_conditional(gamma_prior, &values);
        gamma = draw_gamma(shape, rate, &mut rng);

        plugin.post_sweep(&mut rng);

        if sweep % CACHE_REFRESH_INTERVAL == 0 {
            cache.refresh(data);
        }

        if sweep > config.burn_in && (sweep - config.burn_in) % config.thin == 0 {
            let ll = log_likelihood(data, &cache, plugin.lambdas(), &effects.alpha, &effects.beta)
                .map_err(|e| attach_iteration(e, sweep))?;
            records.push(TraceRecord {
                iteration: sweep,
                gamma,
                pi: plugin.pi(),
                n_clusters: plugin.n_clusters(),
                log_likelihood: ll,
                alpha: effects.alpha.clone(),
                beta: effects.beta.clone(),
                lambda: plugin.lambdas().to_vec(),
                delta: plugin.delta(),
            });
        }
    }

    Ok(Trace {
        model: plugin.kind(),
        gene_names: data.gene_names().to_vec(),
        records,
    })
}

fn attach_iteration(e: Error, sweep: u64) -> Error {
    match e {
        Error::Numerical { message, .. } => Error::Numerical {
            iteration: sweep,
            message,
        },
        other => other,
    }
}

/// Run a chain of the named model.
pub fn run_chain(
    data: &MutationDataset,
    config: &ModelConfig,
    kind: ModelKind,
) -> Result<Trace> {
    match kind {
        ModelKind::Rate => {
            let plugin = crate::rate_model::RateModel::init(data, config);
            run_chain_with(data, config, plugin)
        }
        ModelKind::Driver => {
            let plugin = crate::driver_model::DriverModel::init(data, config)?;
            run_chain_with(data, config, plugin)
        }
    }
}

// ---------------------------------------------------------------------------
// Convergence
// ---------------------------------------------------------------------------

/// Split-chain potential scale reduction factor. Each chain is halved, the
/// halves treated as separate sequences.
pub fn split_r_hat(chains: &[Vec<f64>]) -> f64 {
    let mut sequences: Vec<&[f64]> = Vec::new();
    let half_len = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half_len < 2 {
        return f64::NAN;
    }
    for chain in chains {
        sequences.push(&chain[..half_len]);
        sequences.push(&chain[chain.len() - half_len..]);
    }
    let m = sequences.len() as f64;
    let n = half_len as f64;
    let means: Vec<f64> = sequences
        .iter()
        .map(|s| s.iter().sum::<f64>() / n)
        .collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|&x| (x - grand).powi(2)).sum::<f64>();
    let w = sequences
        .iter()
        .zip(means.iter())
        .map(|(s, &mu)| s.iter().map(|&x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatasetBuilder, MutationType};

    fn single_cell_dataset(count: u32, coverage: i64) -> MutationDataset {
        let mut b = DatasetBuilder::new(vec![MutationType {
            label: "t0".into(),
        }])
        .unwrap();
        b.add_coverage_cell("g1", "t0", "s1", coverage).unwrap();
        if count > 0 {
            b.add_count("g1", "t0", "s1", count).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn zero_count_cell_contributes_minus_rate() {
        let data = single_cell_dataset(0, 1000);
        let cache = ExposureCache::build(&data, &[1.0], &[1.0]).unwrap();
        let ll = log_likelihood(&data, &cache, &[1e-6], &[1.0], &[1.0]).unwrap();
        assert!((ll - (-1e-3)).abs() < 1e-15, "{ll}");
    }

    #[test]
    fn unit_mean_poisson_at_one_count() {
        let data = single_cell_dataset(1, 1000);
        let cache = ExposureCache::build(&data, &[1.0], &[1.0]).unwrap();
        let ll = log_likelihood(&data, &cache, &[1e-3], &[1.0], &[1.0]).unwrap();
        assert!((ll - (-1.0)).abs() < 1e-12, "{ll}");
    }

    #[test]
    fn likelihood_matches_dense_brute_force() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(21);
        let mut b = DatasetBuilder::new(
            (0..2)
                .map(|i| MutationType {
                    label: format!("t{i}"),
                })
                .collect(),
        )
        .unwrap();
        let mut cells = Vec::new();
        for g in 0..5 {
            for m in 0..2 {
                for k in 0..3 {
                    let t = rng.random_range(500..5000i64);
                    b.add_coverage_cell(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), t)
                        .unwrap();
                    let x = rng.random_range(0..4u32);
                    if x > 0 {
                        b.add_count(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), x)
                            .unwrap();
                    }
                    cells.push((g, m, k, t, x));
                }
            }
        }
        let data = b.build().unwrap();
        let alpha = [1.4, 1.0 / 1.4];
        let beta = [0.8, 1.0, 1.25];
        let lambdas: Vec<f64> = (0..5).map(|_| rng.random_range(1e-5..1e-3)).collect();
        let cache = ExposureCache::build(&data, &alpha, &beta).unwrap();
        let ll = log_likelihood(&data, &cache, &lambdas, &alpha, &beta).unwrap();

        let mut brute = 0.0;
        for &(g, m, k, t, x) in &cells {
            let mean = lambdas[g] * alpha[m] * beta[k] * t as f64;
            brute += crate::math::poisson_log_pmf(x, mean);
        }
        assert!(
            (ll - brute).abs() < 1e-10 * brute.abs().max(1.0),
            "{ll} vs {brute}"
        );
    }

    #[test]
    fn rescaling_invariance_of_rate_model_states() {
        // Multiplying alphas by c, betas by d and lambdas by 1/(cd) leaves
        // the likelihood unchanged.
        let data = single_cell_dataset(2, 1500);
        let alpha = [1.0];
        let beta = [1.0];
        let lambdas = [2e-4];
        let cache = ExposureCache::build(&data, &alpha, &beta).unwrap();
        let base = log_likelihood(&data, &cache, &lambdas, &alpha, &beta).unwrap();

        let (c, d) = (1.7, 0.6);
        let alpha2 = [alpha[0] * c];
        let beta2 = [beta[0] * d];
        let lambdas2 = [lambdas[0] / (c * d)];
        let cache2 = ExposureCache::build(&data, &alpha2, &beta2).unwrap();
        let scaled = log_likelihood(&data, &cache2, &lambdas2, &alpha2, &beta2).unwrap();
        assert!((base - scaled).abs() < 1e-10, "{base} vs {scaled}");
    }

    #[test]
    fn gamma_conditional_is_conjugate_arithmetic() {
        let (shape, rate) = gamma_conditional((1.0, 0.5), &[2.0, 3.0]);
        assert_eq!(shape, 3.0);
        assert_eq!(rate, 0.5 + 5.0);
        // No clusters: conditional equals the prior.
        let (shape, rate) = gamma_conditional((1.5, 0.25), &[]);
        assert_eq!((shape, rate), (1.5, 0.25));
    }

    #[test]
    fn gamma_draws_match_conditional_moments() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let (shape, rate) = gamma_conditional((1.0, 0.5), &[2.0, 3.0]);
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| draw_gamma(shape, rate, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let expect = shape / rate;
        let sd = (shape / rate / rate / n as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * sd, "{mean} vs {expect}");
    }

    #[test]
    fn zero_width_proposal_keeps_state() {
        use rand::SeedableRng;
        let data = single_cell_dataset(3, 1000);
        let mut cache = ExposureCache::build(&data, &[1.0], &[1.0]).unwrap();
        let mut effects = EffectState::unit(1, 1, (0.0, 0.0));
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        update_effects(&data, &mut cache, &[1e-3], &mut effects, true, 1, &mut rng).unwrap();
        assert_eq!(effects.alpha, vec![1.0]);
        assert_eq!(effects.beta, vec![1.0]);
    }

    #[test]
    fn constraint_holds_after_many_sweeps() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let mut b = DatasetBuilder::new(
            (0..3)
                .map(|i| MutationType {
                    label: format!("t{i}"),
                })
                .collect(),
        )
        .unwrap();
        for g in 0..4 {
            for m in 0..3 {
                for k in 0..3 {
                    b.add_coverage_cell(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), 10_000)
                        .unwrap();
                    let x = rng.random_range(0..5u32);
                    if x > 0 {
                        b.add_count(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), x)
                            .unwrap();
                    }
                }
            }
        }
        let data = b.build().unwrap();
        let mut cache = ExposureCache::build(&data, &[1.0; 3], &[1.0; 3]).unwrap();
        let mut effects = EffectState::unit(3, 3, (0.1, 0.1));
        let lambdas = vec![1e-4; 4];
        for sweep in 1..=10_000u64 {
            update_effects(
                &data,
                &mut cache,
                &lambdas,
                &mut effects,
                sweep <= 5000,
                sweep,
                &mut rng,
            )
            .unwrap();
            if sweep % 64 == 0 {
                cache.refresh(&data);
            }
        }
        assert!(effects.log_alpha.iter().sum::<f64>().abs() < 1e-10);
        assert!(effects.log_beta.iter().sum::<f64>().abs() < 1e-10);
        assert!(cache.max_relative_drift(&data) < 1e-9);
    }

    #[test]
    fn split_r_hat_near_one_for_identical_chains() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..500).map(|_| rng.random::<f64>()).collect())
            .collect();
        let rhat = split_r_hat(&chains);
        assert!((rhat - 1.0).abs() < 0.05, "{rhat}");
    }

    #[test]
    fn trace_roundtrip_preserves_records() {
        let trace = Trace {
            model: ModelKind::Driver,
            gene_names: vec!["gA".into(), "gB".into()],
            records: vec![TraceRecord {
                iteration: 60,
                gamma: 1.5e6,
                pi: Some(0.031),
                n_clusters: 2,
                log_likelihood: -145.25,
                alpha: vec![1.25, 0.8],
                beta: vec![1.0],
                lambda: vec![3.68e-7, 4.1e-6],
                delta: Some(vec![false, true]),
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.tsv");
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(trace, back);
    }
}
