//! Synthetic studies with planted driver genes: realistic coverage shapes,
//! type and sample effects, Poisson counts, and ground-truth labels for
//! calibration runs.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample as index_sample;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::dataset::{default_type_catalogue, DatasetBuilder, MutationDataset};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// One planted-driver tier: `fraction` of genes at `multiplier` times the
/// passenger rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierSpec {
    pub fraction: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoverageSource {
    /// Gene lengths from a log-normal, split across types by fixed
    /// nucleotide-context frequencies; identical across samples.
    Synthetic {
        median_length: f64,
        sigma_log: f64,
        min_length: i64,
    },
    /// Reuse coverage from an existing coverage TSV (optionally with its
    /// own type catalogue), subsampled uniformly to the requested gene count.
    File {
        coverage: PathBuf,
        types: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_genes: usize,
    pub n_samples: usize,
    pub lambda0: f64,
    pub driver_tiers: Vec<TierSpec>,
    /// Type effects, product constrained to 1.
    pub alpha: Vec<f64>,
    /// Sample effects, product constrained to 1.
    pub beta: Vec<f64>,
    pub coverage: CoverageSource,
    pub seed: u64,
}

/// Fraction of a gene's bases in each context of the default catalogue,
/// repeated across the context's three target types; indels put every base
/// at risk.
const CONTEXT_FRACTIONS: [f64; 25] = [
    0.01, 0.01, 0.01, // C in CpG
    0.01, 0.01, 0.01, // G in CpG
    0.07, 0.07, 0.07, // G in GpA
    0.07, 0.07, 0.07, // C in TpC
    0.28, 0.28, 0.28, // A
    0.14, 0.14, 0.14, // Other C
    0.14, 0.14, 0.14, // Other G
    0.28, 0.28, 0.28, // T
    1.0,  // indel
];

/// Relative type-effect shape: CpG transitions elevated, indels rare.
const ALPHA_SHAPE: [f64; 25] = [
    1.2, 1.2, 8.0, // C in CpG -> A, G, T
    8.0, 1.2, 1.2, // G in CpG -> A, C, T
    1.5, 1.5, 1.5, // G in GpA
    1.5, 1.5, 1.5, // C in TpC
    0.7, 1.2, 0.7, // A -> C, G, T
    0.8, 0.8, 2.0, // Other C -> A, G, T
    2.0, 0.8, 0.8, // Other G -> A, C, T
    0.7, 1.2, 0.7, // T -> A, C, G
    0.4,  // indel
];

fn normalize_product(values: &[f64]) -> Vec<f64> {
    let mean_log = values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v.ln() - mean_log).exp()).collect()
}

/// Default type effects: the built-in shape normalized to product 1.
pub fn default_alpha() -> Vec<f64> {
    normalize_product(&ALPHA_SHAPE)
}

/// Default sample effects: log-spaced between 1/2 and 2, product 1.
pub fn default_beta(n_samples: usize) -> Vec<f64> {
    if n_samples == 1 {
        return vec![1.0];
    }
    let spread = 2.0f64.ln();
    let raw: Vec<f64> = (0..n_samples)
        .map(|k| {
            let t = k as f64 / (n_samples - 1) as f64;
            ((2.0 * t - 1.0) * spread).exp()
        })
        .collect();
    normalize_product(&raw)
}

impl ScenarioSpec {
    /// The published full-scale scenario: 20,671 genes, 24 samples,
    /// lambda0 = 3.68e-7, tiers 2% x10, 1% x30, 0.05% x200.
    pub fn paper_scale(seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            n_genes: 20_671,
            n_samples: 24,
            lambda0: 3.68e-7,
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
                    fraction: 0.0005,
                    multiplier: 200.0,
                },
            ],
            alpha: default_alpha(),
            beta: default_beta(24),
            coverage: CoverageSource::Synthetic {
                median_length: 1500.0,
                sigma_log: 0.7,
                min_length: 60,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_genes == 0 || self.n_samples == 0 {
            return Err(Error::config("scenario needs at least one gene and sample"));
        }
        if !(self.lambda0 > 0.0) {
            return Err(Error::config("lambda0 must be > 0"));
        }
        let frac_sum: f64 = self.driver_tiers.iter().map(|t| t.fraction).sum();
        if !(frac_sum < 1.0) || self.driver_tiers.iter().any(|t| !(t.fraction > 0.0)) {
            return Err(Error::config(
                "tier fractions must be positive and sum to < 1",
            ));
        }
        if self.driver_tiers.iter().any(|t| !(t.multiplier > 1.0)) {
            return Err(Error::config("tier multipliers must be > 1"));
        }
        if self.beta.len() != self.n_samples {
            return Err(Error::config("beta length must equal n_samples"));
        }
        for (name, v) in [("alpha", &self.alpha), ("beta", &self.beta)] {
            if v.is_empty() || v.iter().any(|x| !(x > &0.0)) {
                return Err(Error::config(format!("{name} must be strictly positive")));
            }
            let log_sum: f64 = v.iter().map(|x| x.ln()).sum();
            if log_sum.abs() > 1e-10 {
                return Err(Error::config(format!(
                    "{name} product must be 1 (|sum log| = {:.2e})",
                    log_sum.abs()
                )));
            }
        }
        Ok(())
    }

    /// Stratified desk-scale replica: same tiers and effects over
    /// `target_genes` genes, tier counts re-derived by largest remainder.
    pub fn desk_scale(&self, target_genes: usize) -> Result<ScenarioSpec> {
        if target_genes > self.n_genes {
            return Err(Error::config(format!(
                "target gene count {target_genes} exceeds scenario size {}",
                self.n_genes
            )));
        }
        // Fails early when a tier would round to zero genes.
        tier_counts(target_genes, &self.driver_tiers)?;
        Ok(ScenarioSpec {
            n_genes: target_genes,
            ..self.clone()
        })
    }
}

/// Largest-remainder apportionment of driver genes to tiers.
pub fn tier_counts(n_genes: usize, tiers: &[TierSpec]) -> Result<Vec<usize>> {
    let quotas: Vec<f64> = tiers.iter().map(|t| t.fraction * n_genes as f64).collect();
    let house = quotas.iter().sum::<f64>().round() as usize;
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remainders: Vec<(usize, f64)> = quotas
        .iter()
        .enumerate()
        .map(|(i, q)| (i, q - q.floor()))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let assigned: usize = counts.iter().sum();
    for (i, _) in remainders.iter().take(house.saturating_sub(assigned)) {
        counts[*i] += 1;
    }
    if let Some(tier) = counts.iter().position(|&c| c == 0) {
        return Err(Error::config(format!(
            "gene count {n_genes} is too small to place one gene in tier {tier} \
             (fraction {})",
            tiers[tier].fraction
        )));
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthRecord {
    pub gene: String,
    pub multiplier: f64,
    pub lambda: f64,
    pub is_driver: bool,
}

#[derive(Debug)]
pub struct SimulatedStudy {
    pub dataset: MutationDataset,
    /// Indexed like the dataset's genes.
    pub truth: Vec<TruthRecord>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SimulatedStudy {
    pub fn driver_labels(&self) -> Vec<bool> {
        self.truth.iter().map(|t| t.is_driver).collect()
    }

    pub fn true_lambdas(&self) -> Vec<f64> {
        self.truth.iter().map(|t| t.lambda).collect()
    }
}

fn gene_name(i: usize, width: usize) -> String {
    format!("g{:0width$}", i, width = width)
}

fn sample_label(k: usize, width: usize) -> String {
    format!("s{:0width$}", k + 1, width = width)
}

/// Per-gene, per-type coverage values from the configured source.
fn build_coverage(
    spec: &ScenarioSpec,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<(Vec<String>, Vec<crate::dataset::MutationType>, Vec<Vec<i64>>)> {
    match &spec.coverage {
        CoverageSource::Synthetic {
            median_length,
            sigma_log,
            min_length,
        } => {
            let types = default_type_catalogue();
            if spec.alpha.len() != types.len() {
                return Err(Error::config(format!(
                    "synthetic coverage uses the {}-type catalogue; alpha has {}",
                    types.len(),
                    spec.alpha.len()
                )));
            }
            let dist = LogNormal::new(median_length.ln(), *sigma_log)
                .map_err(|_| Error::config("invalid coverage length distribution"))?;
            let width = spec.n_genes.to_string().len().max(4);
            let mut names = Vec::with_capacity(spec.n_genes);
            let mut cov = Vec::with_capacity(spec.n_genes);
            for g in 0..spec.n_genes {
                let length = dist.sample(rng).round().max(*min_length as f64) as i64;
                names.push(gene_name(g, width));
                cov.push(
                    CONTEXT_FRACTIONS
                        .iter()
                        .map(|f| (f * length as f64).round() as i64)
                        .collect(),
                );
            }
            Ok((names, types, cov))
        }
        CoverageSource::File { coverage, types } => {
            let catalogue = match types {
                Some(p) => crate::dataset::load_types(p)?,
                None => default_type_catalogue(),
            };
            if spec.alpha.len() != catalogue.len() {
                return Err(Error::config(
                    "alpha length must match the coverage file's type catalogue",
                ));
            }
            let loaded = load_coverage_rows(coverage, &catalogue)?;
            if loaded.is_empty() {
                return Err(Error::validation("coverage file lists no genes"));
            }
            if spec.n_genes > loaded.len() {
                return Err(Error::config(format!(
                    "scenario wants {} genes but the coverage file has {}",
                    spec.n_genes,
                    loaded.len()
                )));
            }
            let picked = index_sample(rng, loaded.len(), spec.n_genes);
            let mut idx: Vec<usize> = picked.into_iter().collect();
            idx.sort_unstable();
            let mut names = Vec::with_capacity(spec.n_genes);
            let mut cov = Vec::with_capacity(spec.n_genes);
            for i in idx {
                names.push(loaded[i].0.clone());
                cov.push(loaded[i].1.clone());
            }
            Ok((names, catalogue, cov))
        }
    }
}

/// Minimal coverage-file reader for the simulator's reuse path: broadcast
/// rows only, one value per (gene, type).
fn load_coverage_rows(
    path: &Path,
    types: &[crate::dataset::MutationType],
) -> Result<Vec<(String, Vec<i64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut genes: Vec<(String, Vec<i64>)> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') || lineno == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(Error::parse(path, lineno + 1, "expected 3+ columns"));
        }
        let (gene, type_label, value) = if cols.len() == 3 {
            (cols[0], cols[1], cols[2])
        } else {
            (cols[0], cols[1], cols[3])
        };
        let m = types
            .iter()
            .position(|t| t.label == type_label)
            .ok_or_else(|| {
                Error::parse(path, lineno + 1, format!("unknown type '{type_label}'"))
            })?;
        let bases: i64 = value
            .parse()
            .map_err(|_| Error::parse(path, lineno + 1, "invalid coverage"))?;
        let gi = *index.entry(gene.to_string()).or_insert_with(|| {
            genes.push((gene.to_string(), vec![0; types.len()]));
            genes.len() - 1
        });
        genes[gi].1[m] = genes[gi].1[m].max(bases);
    }
    genes.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(genes)
}

/// Generate one study: drivers planted per tier without overlap, counts
/// drawn cell-by-cell from Poisson(lambda_g alpha_m beta_k T_gmk).
/// Deterministic given the spec (including its seed).
pub fn generate(spec: &ScenarioSpec) -> Result<SimulatedStudy> {
    spec.validate()?;
    let counts_per_tier = tier_counts(spec.n_genes, &spec.driver_tiers)?;

    let mut cov_rng = stream_rng(spec.seed, "sim-coverage", 0);
    let (names, types, coverage) = build_coverage(spec, &mut cov_rng)?;

    // Plant drivers: one shuffled draw, then contiguous tier slices.
    let mut assign_rng = stream_rng(spec.seed, "sim-tiers", 0);
    let total_drivers: usize = counts_per_tier.iter().sum();
    let picked = index_sample(&mut assign_rng, spec.n_genes, total_drivers);
    let picked: Vec<usize> = picked.into_iter().collect();
    let mut multiplier = vec![1.0f64; spec.n_genes];
    let mut offset = 0;
    for (tier, &count) in spec.driver_tiers.iter().zip(&counts_per_tier) {
        for &g in &picked[offset..offset + count] {
            multiplier[g] = tier.multiplier;
        }
        offset += count;
    }

    let sample_width = spec.n_samples.to_string().len().max(2);
    let sample_labels: Vec<String> = (0..spec.n_samples)
        .map(|k| sample_label(k, sample_width))
        .collect();

    let mut builder = DatasetBuilder::new(types.clone())?;
    for label in &sample_labels {
        builder.register_sample(label);
    }

    let mut count_rng = stream_rng(spec.seed, "sim-counts", 0);
    for g in 0..spec.n_genes {
        let lambda = spec.lambda0 * multiplier[g];
        for (m, t) in coverage[g].iter().enumerate() {
            if *t > 0 {
                builder.add_coverage_broadcast(&names[g], &types[m].label, *t)?;
            }
            for k in 0..spec.n_samples {
                let mean = lambda * spec.alpha[m] * spec.beta[k] * *t as f64;
                if mean > 0.0 {
                    let x = Poisson::new(mean)
                        .expect("positive mean")
                        .sample(&mut count_rng) as u32;
                    if x > 0 {
                        builder.add_count(&names[g], &types[m].label, &sample_labels[k], x)?;
                    }
                }
            }
        }
    }
    let dataset = builder.build()?;

    // Truth indexed by the dataset's canonical gene order.
    let mut truth = vec![
        TruthRecord {
            gene: String::new(),
            multiplier: 1.0,
            lambda: spec.lambda0,
            is_driver: false,
        };
        spec.n_genes
    ];
    for g in 0..spec.n_genes {
        let id = dataset
            .gene_index(&names[g])
            .expect("generated gene is present");
        truth[id] = TruthRecord {
            gene: names[g].clone(),
            multiplier: multiplier[g],
            lambda: spec.lambda0 * multiplier[g],
            is_driver: multiplier[g] > 1.0,
        };
    }

    Ok(SimulatedStudy {
        dataset,
        truth,
        alpha: spec.alpha.clone(),
        beta: spec.beta.clone(),
    })
}

/// Expected total mutation count of the scenario realized by `study`.
pub fn expected_total_count(study: &SimulatedStudy) -> f64 {
    let cache = crate::exposure::ExposureCache::build(&study.dataset, &study.alpha, &study.beta)
        .expect("simulated effects are valid");
    study
        .truth
        .iter()
        .enumerate()
        .map(|(g, t)| t.lambda * cache.exposure(g))
        .sum()
}

pub fn write_truth(truth: &[TruthRecord], w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "gene\ttier_multiplier\ttrue_lambda\tis_driver")?;
    for t in truth {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            t.gene,
            t.multiplier,
            t.lambda,
            if t.is_driver { 1 } else { 0 }
        )?;
    }
    Ok(())
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') || i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(path, i + 1, "expected 4 columns"));
        }
        out.push(TruthRecord {
            gene: cols[0].to_string(),
            multiplier: cols[1]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "invalid multiplier"))?,
            lambda: cols[2]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "invalid lambda"))?,
            is_driver: cols[3] == "1",
        });
    }
    Ok(out)
}

/// Effects table: `kind<TAB>label<TAB>value` rows for alpha then beta.
pub fn write_effects(
    data: &MutationDataset,
    alpha: &[f64],
    beta: &[f64],
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(w, "kind\tlabel\tvalue")?;
    for (m, t) in data.types().iter().enumerate() {
        writeln!(w, "alpha\t{}\t{}", t.label, alpha[m])?;
    }
    for (k, s) in data.samples().iter().enumerate() {
        writeln!(w, "beta\t{}\t{}", s.label, beta[k])?;
    }
    Ok(())
}

/// Read an effects table back, aligned to the dataset's type/sample order.
pub fn read_effects(path: &Path, data: &MutationDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut alpha = vec![1.0; data.n_types()];
    let mut beta = vec![1.0; data.n_samples()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') || i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, i + 1, "expected 3 columns"));
        }
        let value: f64 = cols[2]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "invalid effect value"))?;
        match cols[0] {
            "alpha" => {
                let m = data.type_index(cols[1]).ok_or_else(|| {
                    Error::parse(path, i + 1, format!("unknown type '{}'", cols[1]))
                })?;
                alpha[m] = value;
            }
            "beta" => {
                let k = data
                    .samples()
                    .iter()
                    .position(|s| s.label == cols[1])
                    .ok_or_else(|| {
                        Error::parse(path, i + 1, format!("unknown sample '{}'", cols[1]))
                    })?;
                beta[k] = value;
            }
            other => {
                return Err(Error::parse(path, i + 1, format!("unknown kind '{other}'")));
            }
        }
    }
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_spec(seed: u64, n_genes: usize) -> ScenarioSpec {
        ScenarioSpec::paper_scale(seed).desk_scale(n_genes).unwrap()
    }

    /// Small scenario whose mountain tier stays populated below G = 2000.
    fn small_spec(seed: u64, n_genes: usize) -> ScenarioSpec {
        let mut spec = ScenarioSpec::paper_scale(seed);
        spec.driver_tiers[2].fraction = 0.0025;
        spec.desk_scale(n_genes).unwrap()
    }

    #[test]
    fn default_effects_satisfy_constraints() {
        let alpha = default_alpha();
        assert_eq!(alpha.len(), 25);
        assert!(alpha.iter().map(|a| a.ln()).sum::<f64>().abs() < 1e-10);
        let beta = default_beta(24);
        assert!(beta.iter().map(|b| b.ln()).sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn largest_remainder_tier_arithmetic() {
        let tiers = ScenarioSpec::paper_scale(0).driver_tiers;
        assert_eq!(tier_counts(2000, &tiers).unwrap(), vec![40, 20, 1]);
        // Paper scale: quotas 413.42 / 206.71 / 10.34, house 630.
        assert_eq!(tier_counts(20_671, &tiers).unwrap(), vec![413, 207, 10]);
        // Too small to give the 0.05% tier a gene.
        assert!(tier_counts(500, &tiers).is_err());
    }

    #[test]
    fn desk_scale_identity_and_bounds() {
        let spec = ScenarioSpec::paper_scale(1);
        let same = spec.desk_scale(spec.n_genes).unwrap();
        assert_eq!(same, spec);
        assert!(spec.desk_scale(spec.n_genes + 1).is_err());
    }

    #[test]
    fn generates_planted_fraction_exactly() {
        let spec = desk_spec(7, 2000);
        let study = generate(&spec).unwrap();
        let drivers = study.truth.iter().filter(|t| t.is_driver).count();
        assert_eq!(drivers, 61);
        let frac = drivers as f64 / 2000.0;
        assert!((frac - 0.0305).abs() < 1e-12);
        assert_eq!(study.dataset.n_genes(), 2000);
        assert_eq!(study.dataset.n_samples(), 24);
        assert_eq!(study.dataset.n_types(), 25);
    }

    #[test]
    fn same_seed_reproduces_byte_identical_files() {
        let spec = small_spec(3, 400);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.truth, b.truth);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        a.dataset.write_counts(&mut buf_a).unwrap();
        b.dataset.write_counts(&mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn degenerate_multipliers_rejected_but_unit_tier_labels_emitted() {
        // multiplier 1 tiers are invalid per the contract
        let mut spec = small_spec(3, 400);
        spec.driver_tiers[0].multiplier = 1.0;
        assert!(spec.validate().is_err());
        // while valid specs still label every gene
        let spec = small_spec(3, 400);
        let study = generate(&spec).unwrap();
        assert_eq!(study.truth.len(), 400);
        assert!(study.truth.iter().all(|t| t.lambda > 0.0));
    }

    #[test]
    fn empirical_totals_match_expectation_over_seeds() {
        // Sum of all counts across seeds is Poisson with the summed mean.
        let mut observed = 0.0f64;
        let mut expected = 0.0f64;
        for seed in 0..50 {
            let spec = ScenarioSpec {
                n_genes: 120,
                n_samples: 4,
                beta: default_beta(4),
                ..ScenarioSpec::paper_scale(seed)
            };
            let spec = ScenarioSpec {
                // keep every tier populated at this size
                driver_tiers: vec![
                    TierSpec {
                        fraction: 0.05,
                        multiplier: 10.0,
                    },
                    TierSpec {
                        fraction: 0.02,
                        multiplier: 200.0,
                    },
                ],
                ..spec
            };
            let study = generate(&spec).unwrap();
            observed += study.dataset.total_count() as f64;
            expected += expected_total_count(&study);
        }
        let sd = expected.sqrt();
        assert!(
            (observed - expected).abs() < 4.0 * sd,
            "observed {observed} vs expected {expected} (sd {sd})"
        );
    }

    #[test]
    fn truth_and_effects_roundtrip() {
        let spec = small_spec(9, 300);
        let study = generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let tpath = dir.path().join("truth.tsv");
        let epath = dir.path().join("effects.tsv");
        let mut buf = Vec::new();
        write_truth(&study.truth, &mut buf).unwrap();
        std::fs::write(&tpath, &buf).unwrap();
        let back = read_truth(&tpath).unwrap();
        assert_eq!(back, study.truth);

        let mut buf = Vec::new();
        write_effects(&study.dataset, &study.alpha, &study.beta, &mut buf).unwrap();
        std::fs::write(&epath, &buf).unwrap();
        let (alpha, beta) = read_effects(&epath, &study.dataset).unwrap();
        for (a, b) in alpha.iter().zip(study.alpha.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in beta.iter().zip(study.beta.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn passenger_counts_fit_their_poisson_law() {
        // Chi-square goodness of fit of pooled passenger cell counts against
        // the heterogeneous Poisson law, bins {0, 1, 2+}, 1% level.
        let mut failures = 0;
        for seed in 0..20 {
            let spec = ScenarioSpec {
                n_genes: 150,
                n_samples: 6,
                beta: default_beta(6),
                driver_tiers: vec![TierSpec {
                    fraction: 0.04,
                    multiplier: 30.0,
                }],
                ..ScenarioSpec::paper_scale(seed)
            };
            let study = generate(&spec).unwrap();
            let cache = crate::exposure::ExposureCache::build(
                &study.dataset,
                &study.alpha,
                &study.beta,
            )
            .unwrap();
            // Expected bin masses summed over passenger cells.
            let mut expect = [0.0f64; 3];
            let mut observe = [0.0f64; 3];
            for g in 0..study.dataset.n_genes() {
                if study.truth[g].is_driver {
                    continue;
                }
                // Broadcast coverage: each segment covers its pattern's
                // samples with the same bases.
                for seg in study.dataset.coverage_segments(g) {
                    for &k in study.dataset.pattern(seg.pattern) {
                        let mean = spec.lambda0
                            * study.alpha[seg.type_idx as usize]
                            * study.beta[k as usize]
                            * seg.bases as f64;
                        let p0 = (-mean).exp();
                        let p1 = mean * p0;
                        expect[0] += p0;
                        expect[1] += p1;
                        expect[2] += 1.0 - p0 - p1;
                        observe[0] += 1.0;
                    }
                }
                let _ = cache; // cells with counts corrected below
                for cell in study.dataset.count_cells(g) {
                    observe[0] -= 1.0;
                    if cell.count == 1 {
                        observe[1] += 1.0;
                    } else {
                        observe[2] += 1.0;
                    }
                }
            }
            let chi2: f64 = expect
                .iter()
                .zip(observe.iter())
                .filter(|(e, _)| **e > 1e-9)
                .map(|(e, o)| (o - e).powi(2) / e)
                .sum();
            // df = 2, 1% critical value 9.21.
            if chi2 > 9.21 {
                failures += 1;
            }
        }
        assert_eq!(failures, 0, "{failures} of 20 seeds failed the 1% GOF test");
    }
}
