//! Posterior summaries over finished traces: rate ranking with credible
//! intervals, driver probabilities, genome-wide driver proportion, per-sample
//! driver burden, and the new-sample predictive probability.

use std::collections::BTreeMap;
use std::io::Write;

use crate::dataset::MutationDataset;
use crate::engine::{ModelKind, Trace};
use crate::error::{Error, Result};
use crate::math::{credible_interval, mean};

/// Records below this make equal-tailed intervals unreliable.
const MIN_RECORDS_FOR_INTERVALS: usize = 20;

#[derive(Debug, Clone)]
pub struct GeneRateSummary {
    pub gene: usize,
    pub mean: f64,
    pub lo90: f64,
    pub hi90: f64,
    /// 1-based position when sorted by mean rate, descending.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct RateSummary {
    /// Indexed by gene id.
    pub genes: Vec<GeneRateSummary>,
    /// Set when the trace has too few records for stable intervals.
    pub unreliable_intervals: bool,
}

fn assign_ranks<K: PartialOrd>(scores: &[K]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; scores.len()];
    for (pos, &g) in order.iter().enumerate() {
        ranks[g] = pos + 1;
    }
    ranks
}

/// Per-gene posterior mean and 90% equal-tailed interval of the rate draws.
pub fn posterior_rate_summary(trace: &Trace) -> Result<RateSummary> {
    if trace.records.is_empty() {
        return Err(Error::validation("trace has no records to summarize"));
    }
    let n_genes = trace.records[0].lambda.len();
    let mut genes = Vec::with_capacity(n_genes);
    let mut means = Vec::with_capacity(n_genes);
    for g in 0..n_genes {
        let draws = trace.lambda_draws(g);
        let m = mean(&draws);
        let (lo, hi) = credible_interval(&draws, 0.9);
        means.push(m);
        genes.push(GeneRateSummary {
            gene: g,
            mean: m,
            lo90: lo,
            hi90: hi,
            rank: 0,
        });
    }
    for (g, rank) in assign_ranks(&means).into_iter().enumerate() {
        genes[g].rank = rank;
    }
    Ok(RateSummary {
        genes,
        unreliable_intervals: trace.records.len() < MIN_RECORDS_FOR_INTERVALS,
    })
}

pub fn write_rate_summary(
    summary: &RateSummary,
    data: &MutationDataset,
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(
        w,
        "gene\tn_mutations\tcoverage_total\tlambda_mean\tlambda_lo90\tlambda_hi90\trank"
    )?;
    let mut order: Vec<&GeneRateSummary> = summary.genes.iter().collect();
    order.sort_by_key(|s| s.rank);
    for s in order {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            data.gene_name(s.gene),
            data.gene_count_total(s.gene),
            data.gene_coverage_total(s.gene),
            s.mean,
            s.lo90,
            s.hi90,
            s.rank
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GeneDriverSummary {
    pub gene: usize,
    pub p_driver: f64,
    pub lambda_mean: f64,
    /// 1-based position when sorted by driver probability, descending,
    /// ties broken by gene id.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct GenomeSummary {
    pub pi_mean: f64,
    pub pi_lo90: f64,
    pub pi_hi90: f64,
    pub total_mean: f64,
    pub total_median: f64,
    pub total_lo90: f64,
    pub total_hi90: f64,
}

#[derive(Debug, Clone)]
pub struct DriverSummary {
    pub genes: Vec<GeneDriverSummary>,
    pub genome: GenomeSummary,
    pub unreliable_intervals: bool,
}

/// Driver probabilities (fraction of recorded draws with delta = 1), the
/// genome-wide pi posterior, and the total-driver-count posterior.
pub fn driver_probability_summary(trace: &Trace) -> Result<DriverSummary> {
    if trace.model != ModelKind::Driver {
        return Err(Error::validation(
            "driver summaries require a driver-model trace",
        ));
    }
    if trace.records.is_empty() {
        return Err(Error::validation("trace has no records to summarize"));
    }
    let n_genes = trace.records[0].lambda.len();
    let mut genes = Vec::with_capacity(n_genes);
    let mut probs = Vec::with_capacity(n_genes);
    for g in 0..n_genes {
        let p = trace.driver_fraction(g);
        let draws = trace.lambda_draws(g);
        probs.push(p);
        genes.push(GeneDriverSummary {
            gene: g,
            p_driver: p,
            lambda_mean: mean(&draws),
            rank: 0,
        });
    }
    for (g, rank) in assign_ranks(&probs).into_iter().enumerate() {
        genes[g].rank = rank;
    }

    let pi_draws = trace.pi_draws();
    let (pi_lo, pi_hi) = credible_interval(&pi_draws, 0.9);
    let totals: Vec<f64> = trace
        .records
        .iter()
        .map(|r| {
            r.delta
                .as_ref()
                .map(|d| d.iter().filter(|&&b| b).count() as f64)
                .unwrap_or(0.0)
        })
        .collect();
    let (t_lo, t_hi) = credible_interval(&totals, 0.9);
    let mut sorted_totals = totals.clone();
    sorted_totals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let genome = GenomeSummary {
        pi_mean: mean(&pi_draws),
        pi_lo90: pi_lo,
        pi_hi90: pi_hi,
        total_mean: mean(&totals),
        total_median: crate::math::quantile_type7(&sorted_totals, 0.5),
        total_lo90: t_lo,
        total_hi90: t_hi,
    };
    Ok(DriverSummary {
        genes,
        genome,
        unreliable_intervals: trace.records.len() < MIN_RECORDS_FOR_INTERVALS,
    })
}

pub fn write_driver_summary(
    summary: &DriverSummary,
    data: &MutationDataset,
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(
        w,
        "gene\tn_mutations\tcoverage_total\tp_driver\tlambda_mean\trank"
    )?;
    let mut order: Vec<&GeneDriverSummary> = summary.genes.iter().collect();
    order.sort_by_key(|s| s.rank);
    for s in order {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            data.gene_name(s.gene),
            data.gene_count_total(s.gene),
            data.gene_coverage_total(s.gene),
            s.p_driver,
            s.lambda_mean,
            s.rank
        )?;
    }
    Ok(())
}

pub fn write_genome_summary(genome: &GenomeSummary, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        w,
        "pi_mean\tpi_lo90\tpi_hi90\ttotal_mean\ttotal_median\ttotal_lo90\ttotal_hi90"
    )?;
    writeln!(
        w,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        genome.pi_mean,
        genome.pi_lo90,
        genome.pi_hi90,
        genome.total_mean,
        genome.total_median,
        genome.total_lo90,
        genome.total_hi90
    )
}

/// Posterior distribution of the number of mutated drivers in each sample:
/// for each recorded draw and sample k, the count of genes with delta = 1
/// and an observed mutation in k.
///
/// Refused for pooled stage units, where "per sample" has no meaning.
pub fn mutated_drivers_per_sample(
    trace: &Trace,
    data: &MutationDataset,
) -> Result<Vec<BTreeMap<usize, usize>>> {
    if trace.model != ModelKind::Driver {
        return Err(Error::validation(
            "per-sample driver burden requires a driver-model trace",
        ));
    }
    if data.has_pooled_stages() {
        return Err(Error::validation(
            "per-sample driver burden is undefined for pooled stage units; \
             this dataset reports counts by stage, not by tumor sample",
        ));
    }
    // Genes with any mutation per sample, precomputed once.
    let mut mutated: Vec<Vec<usize>> = vec![Vec::new(); data.n_samples()];
    for g in 0..data.n_genes() {
        for cell in data.count_cells(g) {
            let k = cell.sample_idx as usize;
            if mutated[k].last() != Some(&g) {
                mutated[k].push(g);
            }
        }
    }
    let mut histograms = vec![BTreeMap::new(); data.n_samples()];
    for record in &trace.records {
        let delta = record
            .delta
            .as_ref()
            .ok_or_else(|| Error::validation("driver trace record lacks delta"))?;
        for (k, genes) in mutated.iter().enumerate() {
            let burden = genes.iter().filter(|&&g| delta[g]).count();
            *histograms[k].entry(burden).or_insert(0) += 1;
        }
    }
    Ok(histograms)
}

pub fn write_drivers_per_sample(
    histograms: &[BTreeMap<usize, usize>],
    data: &MutationDataset,
    n_records: usize,
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(w, "sample\tn_drivers\tposterior_probability")?;
    for (k, hist) in histograms.iter().enumerate() {
        for (&burden, &count) in hist {
            writeln!(
                w,
                "{}\t{}\t{}",
                data.samples()[k].label,
                burden,
                count as f64 / n_records as f64
            )?;
        }
    }
    Ok(())
}

/// Predictive probability of observing at least one mutation of gene `g` in
/// a hypothetical new sample: the posterior average of
/// 1 - exp(-lambda_g * sum_m alpha_m * T_new_gm), with the new sample's
/// effect fixed at the geometric-mean unit (beta = 1).
///
/// By default the new sample's coverage is the gene's mean observed
/// per-sample coverage; `total_coverage` overrides its total, distributed
/// across types proportionally to the observed mean.
pub fn predictive_mutation_probability(
    trace: &Trace,
    data: &MutationDataset,
    gene: &str,
    total_coverage: Option<f64>,
) -> Result<f64> {
    let g = data
        .gene_index(gene)
        .ok_or_else(|| Error::validation(format!("unknown gene '{gene}'")))?;
    if trace.records.is_empty() {
        return Err(Error::validation("trace has no records"));
    }
    let mut type_cov = data.mean_sample_coverage(g);
    if let Some(total) = total_coverage {
        if !(total >= 0.0) {
            return Err(Error::validation("coverage override must be nonnegative"));
        }
        let current: f64 = type_cov.iter().sum();
        if current > 0.0 {
            let scale = total / current;
            type_cov.iter_mut().for_each(|t| *t *= scale);
        }
    }
    let mut acc = 0.0;
    for record in &trace.records {
        let exposure: f64 = record
            .alpha
            .iter()
            .zip(type_cov.iter())
            .map(|(a, t)| a * t)
            .sum();
        acc += 1.0 - (-record.lambda[g] * exposure).exp();
    }
    Ok(acc / trace.records.len() as f64)
}
