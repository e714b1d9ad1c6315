//! Count/coverage data: ingestion, validation, canonical indexing.
//!
//! Counts are sparse (one cell per nonzero count). Coverage is stored per
//! (gene, type) as segments `(sample pattern, bases)`: all samples in the
//! pattern share the same per-sample base count. One-stage studies collapse
//! to a single full-sample pattern per row; multi-stage designs get one
//! pattern per stage. Likelihood sums over samples then reduce to sums over
//! patterns, which is what keeps the samplers off the full G x M x K grid.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::ln_factorial;

/// Sample labels with this prefix denote a pooled stage rather than a single
/// tumor sample (two-stage designs reported at stage level).
pub const STAGE_PREFIX: &str = "stage:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MutationType {
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleUnit {
    pub label: String,
    /// Set when the unit is a pooled stage, derived from the label prefix.
    pub stage: Option<String>,
}

impl SampleUnit {
    fn from_label(label: &str) -> Self {
        let stage = label
            .strip_prefix(STAGE_PREFIX)
            .map(|s| s.to_string())
            .filter(|s| !s.is_empty());
        SampleUnit {
            label: label.to_string(),
            stage,
        }
    }

    pub fn is_pooled_stage(&self) -> bool {
        self.stage.is_some()
    }
}

/// One nonzero count with its resolved coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountCell {
    pub type_idx: u16,
    pub sample_idx: u16,
    pub count: u32,
    /// Bases at risk for this (gene, type, sample); always > 0.
    pub coverage: i64,
}

/// Coverage of one (gene, type) over one sample pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageSeg {
    pub type_idx: u16,
    pub pattern: u32,
    /// Per-sample bases, shared by every sample in the pattern; always > 0.
    pub bases: i64,
}

/// Flattened (gene, pattern, bases) row used for incremental cache updates,
/// grouped by type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeRow {
    pub gene: u32,
    pub pattern: u32,
    pub bases: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutationDataset {
    gene_names: Vec<String>,
    types: Vec<MutationType>,
    samples: Vec<SampleUnit>,
    patterns: Vec<Vec<u16>>,

    counts: Vec<CountCell>,
    count_offsets: Vec<usize>,
    coverage: Vec<CoverageSeg>,
    coverage_offsets: Vec<usize>,

    // Static aggregates.
    gene_count_totals: Vec<u32>,
    gene_coverage_totals: Vec<i64>,
    type_count_totals: Vec<f64>,
    sample_count_totals: Vec<f64>,
    type_coverage_totals: Vec<i64>,
    sample_coverage_totals: Vec<i64>,
    ln_factorial_total: f64,
    type_rows: Vec<TypeRow>,
    type_row_offsets: Vec<usize>,
    patterns_by_sample: Vec<Vec<u32>>,
}

impl MutationDataset {
    pub fn n_genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn gene_name(&self, g: usize) -> &str {
        &self.gene_names[g]
    }

    pub fn gene_index(&self, name: &str) -> Option<usize> {
        self.gene_names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn types(&self) -> &[MutationType] {
        &self.types
    }

    pub fn type_index(&self, label: &str) -> Option<usize> {
        self.types.iter().position(|t| t.label == label)
    }

    pub fn samples(&self) -> &[SampleUnit] {
        &self.samples
    }

    pub fn has_pooled_stages(&self) -> bool {
        self.samples.iter().any(|s| s.is_pooled_stage())
    }

    pub fn patterns(&self) -> &[Vec<u16>] {
        &self.patterns
    }

    pub fn pattern(&self, p: u32) -> &[u16] {
        &self.patterns[p as usize]
    }

    pub fn count_cells(&self, g: usize) -> &[CountCell] {
        &self.counts[self.count_offsets[g]..self.count_offsets[g + 1]]
    }

    pub fn coverage_segments(&self, g: usize) -> &[CoverageSeg] {
        &self.coverage[self.coverage_offsets[g]..self.coverage_offsets[g + 1]]
    }

    pub fn n_coverage_rows(&self) -> usize {
        self.coverage.len()
    }

    /// X_g: total mutations in gene g.
    pub fn gene_count_total(&self, g: usize) -> u32 {
        self.gene_count_totals[g]
    }

    /// Raw coverage total of gene g over all types and samples.
    pub fn gene_coverage_total(&self, g: usize) -> i64 {
        self.gene_coverage_totals[g]
    }

    /// Per-type count marginals (sums over genes and samples).
    pub fn type_count_totals(&self) -> &[f64] {
        &self.type_count_totals
    }

    pub fn sample_count_totals(&self) -> &[f64] {
        &self.sample_count_totals
    }

    pub fn type_rows(&self, m: usize) -> &[TypeRow] {
        &self.type_rows[self.type_row_offsets[m]..self.type_row_offsets[m + 1]]
    }

    pub fn patterns_containing(&self, k: usize) -> &[u32] {
        &self.patterns_by_sample[k]
    }

    /// Sum of ln(X!) over all nonzero cells.
    pub fn ln_factorial_total(&self) -> f64 {
        self.ln_factorial_total
    }

    pub fn total_count(&self) -> u64 {
        self.gene_count_totals.iter().map(|&x| x as u64).sum()
    }

    pub fn total_coverage(&self) -> i64 {
        self.gene_coverage_totals.iter().sum()
    }

    /// Crude genome-wide per-base rate, total counts over total coverage.
    pub fn crude_rate(&self) -> f64 {
        let cov = self.total_coverage();
        if cov <= 0 {
            return 0.0;
        }
        self.total_count() as f64 / cov as f64
    }

    /// True when gene g has at least one mutation in sample k.
    pub fn gene_mutated_in_sample(&self, g: usize, k: usize) -> bool {
        self.count_cells(g)
            .iter()
            .any(|c| c.sample_idx as usize == k && c.count > 0)
    }

    /// Mean per-sample coverage of gene g for each type (zeros included).
    pub fn mean_sample_coverage(&self, g: usize) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_types()];
        for seg in self.coverage_segments(g) {
            totals[seg.type_idx as usize] +=
                seg.bases as f64 * self.pattern(seg.pattern).len() as f64;
        }
        let k = self.n_samples().max(1) as f64;
        totals.iter_mut().for_each(|t| *t /= k);
        totals
    }

    /// Checks the posterior-propriety condition for fitting: every type and
    /// every sample unit must carry positive total coverage.
    pub fn validate_for_fit(&self) -> Result<()> {
        for (m, &cov) in self.type_coverage_totals.iter().enumerate() {
            if cov <= 0 {
                return Err(Error::validation(format!(
                    "mutation type '{}' has zero total coverage; effects are not identifiable",
                    self.types[m].label
                )));
            }
        }
        for (k, &cov) in self.sample_coverage_totals.iter().enumerate() {
            if cov <= 0 {
                return Err(Error::validation(format!(
                    "sample unit '{}' has zero total coverage; effects are not identifiable",
                    self.samples[k].label
                )));
            }
        }
        Ok(())
    }
}

/// The 24 point-mutation types plus one insertion/deletion category.
pub fn default_type_catalogue() -> Vec<MutationType> {
    let contexts: [(&str, [&str; 3]); 8] = [
        ("C_in_CpG", ["A", "G", "T"]),
        ("G_in_CpG", ["A", "C", "T"]),
        ("G_in_GpA", ["A", "C", "T"]),
        ("C_in_TpC", ["A", "G", "T"]),
        ("A", ["C", "G", "T"]),
        ("Other_C", ["A", "G", "T"]),
        ("Other_G", ["A", "C", "T"]),
        ("T", ["A", "C", "G"]),
    ];
    let mut types = Vec::with_capacity(25);
    for (from, targets) in contexts {
        for to in targets {
            types.push(MutationType {
                label: format!("{from}->{to}"),
            });
        }
    }
    types.push(MutationType {
        label: "indel".to_string(),
    });
    types
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RawKey {
    gene: u32,
    type_idx: u16,
}

/// Assembles a dataset from raw rows, applying the same resolution and
/// validation regardless of whether the rows came from TSV files or the
/// simulator.
#[derive(Debug, Default)]
pub struct DatasetBuilder {
    types: Vec<MutationType>,
    gene_ids: HashMap<String, u32>,
    gene_names: Vec<String>,
    sample_ids: HashMap<String, u16>,
    sample_labels: Vec<String>,
    // (gene, type, sample) -> count, only nonzero kept after build
    counts: HashMap<(u32, u16, u16), u32>,
    broadcast_cov: HashMap<RawKey, i64>,
    explicit_cov: HashMap<(u32, u16, u16), i64>,
}

impl DatasetBuilder {
    pub fn new(types: Vec<MutationType>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            if seen.insert(t.label.clone(), i).is_some() {
                return Err(Error::validation(format!(
                    "duplicate mutation type label '{}'",
                    t.label
                )));
            }
        }
        Ok(DatasetBuilder {
            types,
            ..Default::default()
        })
    }

    pub fn with_default_types() -> Self {
        DatasetBuilder::new(default_type_catalogue()).expect("catalogue labels are unique")
    }

    fn gene_id(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.gene_ids.get(name) {
            return id;
        }
        let id = self.gene_names.len() as u32;
        self.gene_names.push(name.to_string());
        self.gene_ids.insert(name.to_string(), id);
        id
    }

    fn sample_id(&mut self, label: &str) -> u16 {
        if let Some(&id) = self.sample_ids.get(label) {
            return id;
        }
        let id = self.sample_labels.len() as u16;
        self.sample_labels.push(label.to_string());
        self.sample_ids.insert(label.to_string(), id);
        id
    }

    fn type_id(&self, label: &str) -> Option<u16> {
        self.types
            .iter()
            .position(|t| t.label == label)
            .map(|i| i as u16)
    }

    /// Add a sample unit to the roster even if no row mentions it (used by
    /// direct construction; TSV inputs register samples through their rows).
    pub fn register_sample(&mut self, label: &str) {
        self.sample_id(label);
    }

    pub fn add_count(&mut self, gene: &str, type_label: &str, sample: &str, count: u32) -> Result<()> {
        let m = self
            .type_id(type_label)
            .ok_or_else(|| Error::validation(format!("unknown type label '{type_label}'")))?;
        let g = self.gene_id(gene);
        let k = self.sample_id(sample);
        if self.counts.insert((g, m, k), count).is_some() {
            return Err(Error::validation(format!(
                "duplicate count row for ({gene}, {type_label}, {sample})"
            )));
        }
        Ok(())
    }

    /// Coverage shared by every sample unit (broadcast form).
    pub fn add_coverage_broadcast(&mut self, gene: &str, type_label: &str, bases: i64) -> Result<()> {
        let m = self
            .type_id(type_label)
            .ok_or_else(|| Error::validation(format!("unknown type label '{type_label}'")))?;
        let g = self.gene_id(gene);
        if self.broadcast_cov.insert(RawKey { gene: g, type_idx: m }, bases).is_some() {
            return Err(Error::validation(format!(
                "duplicate broadcast coverage row for ({gene}, {type_label})"
            )));
        }
        Ok(())
    }

    /// Coverage for one (gene, type, sample); overrides any broadcast value.
    pub fn add_coverage_cell(
        &mut self,
        gene: &str,
        type_label: &str,
        sample: &str,
        bases: i64,
    ) -> Result<()> {
        let m = self
            .type_id(type_label)
            .ok_or_else(|| Error::validation(format!("unknown type label '{type_label}'")))?;
        let g = self.gene_id(gene);
        let k = self.sample_id(sample);
        if self.explicit_cov.insert((g, m, k), bases).is_some() {
            return Err(Error::validation(format!(
                "duplicate coverage row for ({gene}, {type_label}, {sample})"
            )));
        }
        Ok(())
    }

    pub fn build(self) -> Result<MutationDataset> {
        let DatasetBuilder {
            types,
            gene_names: raw_gene_names,
            sample_labels: raw_sample_labels,
            counts: raw_counts,
            broadcast_cov,
            explicit_cov,
            ..
        } = self;

        // Canonical indexing: genes sorted by name, samples by label. Input
        // row order then has no effect on any downstream draw or summary.
        let mut gene_order: Vec<u32> = (0..raw_gene_names.len() as u32).collect();
        gene_order.sort_by(|&a, &b| raw_gene_names[a as usize].cmp(&raw_gene_names[b as usize]));
        let gene_remap: HashMap<u32, u32> = gene_order
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new as u32))
            .collect();
        let gene_names: Vec<String> = gene_order
            .iter()
            .map(|&old| raw_gene_names[old as usize].clone())
            .collect();

        let mut sample_order: Vec<u16> = (0..raw_sample_labels.len() as u16).collect();
        sample_order
            .sort_by(|&a, &b| raw_sample_labels[a as usize].cmp(&raw_sample_labels[b as usize]));
        let sample_remap: HashMap<u16, u16> = sample_order
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new as u16))
            .collect();
        let samples: Vec<SampleUnit> = sample_order
            .iter()
            .map(|&old| SampleUnit::from_label(&raw_sample_labels[old as usize]))
            .collect();

        let n_genes = gene_names.len();
        let n_types = types.len();
        let n_samples = samples.len();

        // Genes appearing in counts with mutations but with no coverage row
        // at all: reject rather than drop, so FDR denominators stay honest.
        let mut has_coverage = vec![false; n_genes];
        for key in broadcast_cov.keys() {
            has_coverage[gene_remap[&key.gene] as usize] = true;
        }
        for (g, _, _) in explicit_cov.keys() {
            has_coverage[gene_remap[g] as usize] = true;
        }
        for ((g, _, _), &x) in &raw_counts {
            let g_new = gene_remap[g] as usize;
            if x > 0 && !has_coverage[g_new] {
                return Err(Error::validation(format!(
                    "gene '{}' has mutations but no coverage rows",
                    gene_names[g_new]
                )));
            }
        }

        // Resolve coverage per (gene, type): explicit per-sample values win
        // over the broadcast value; equal values collapse into one pattern.
        let mut resolved_broadcast: HashMap<(u32, u16), i64> = HashMap::new();
        for (key, &bases) in &broadcast_cov {
            resolved_broadcast.insert((gene_remap[&key.gene], key.type_idx), bases);
        }
        let mut resolved_explicit: HashMap<(u32, u16), Vec<(u16, i64)>> = HashMap::new();
        for (&(g, m, k), &bases) in &explicit_cov {
            resolved_explicit
                .entry((gene_remap[&g], m))
                .or_default()
                .push((sample_remap[&k], bases));
        }

        let mut pattern_ids: HashMap<Vec<u16>, u32> = HashMap::new();
        let mut patterns: Vec<Vec<u16>> = Vec::new();
        let mut intern = |samples: Vec<u16>, patterns: &mut Vec<Vec<u16>>| -> u32 {
            if let Some(&id) = pattern_ids.get(&samples) {
                return id;
            }
            let id = patterns.len() as u32;
            pattern_ids.insert(samples.clone(), id);
            patterns.push(samples);
            id
        };

        let mut coverage: Vec<CoverageSeg> = Vec::new();
        let mut coverage_offsets = Vec::with_capacity(n_genes + 1);
        coverage_offsets.push(0);
        // Cell-level lookup used to resolve count coverages.
        let mut cell_cov: HashMap<(u32, u16, u16), i64> = HashMap::new();

        for g in 0..n_genes as u32 {
            for m in 0..n_types as u16 {
                let broadcast = resolved_broadcast.get(&(g, m)).copied();
                let mut explicit = resolved_explicit.remove(&(g, m)).unwrap_or_default();
                if broadcast.is_none() && explicit.is_empty() {
                    continue;
                }
                explicit.sort_unstable();
                // value -> samples carrying it
                let mut by_value: BTreeMap<i64, Vec<u16>> = BTreeMap::new();
                let mut listed = vec![false; n_samples];
                for (k, bases) in &explicit {
                    listed[*k as usize] = true;
                    if *bases > 0 {
                        by_value.entry(*bases).or_default().push(*k);
                    }
                    if *bases < 0 {
                        return Err(Error::validation(format!(
                            "negative coverage for gene index {g} type index {m}"
                        )));
                    }
                }
                if let Some(bases) = broadcast {
                    if bases < 0 {
                        return Err(Error::validation(format!(
                            "negative coverage for gene index {g} type index {m}"
                        )));
                    }
                    if bases > 0 {
                        let rest: Vec<u16> = (0..n_samples as u16)
                            .filter(|&k| !listed[k as usize])
                            .collect();
                        if !rest.is_empty() {
                            by_value.entry(bases).or_default().append(
                                &mut rest.clone(),
                            );
                        }
                    }
                }
                for (bases, mut ks) in by_value {
                    ks.sort_unstable();
                    ks.dedup();
                    for &k in &ks {
                        cell_cov.insert((g, m, k), bases);
                    }
                    let pat = intern(ks, &mut patterns);
                    coverage.push(CoverageSeg {
                        type_idx: m,
                        pattern: pat,
                        bases,
                    });
                }
            }
            coverage_offsets.push(coverage.len());
        }

        // Counts: keep nonzero cells, resolve their coverage, validate.
        let mut counts_by_gene: Vec<Vec<CountCell>> = vec![Vec::new(); n_genes];
        for (&(g, m, k), &x) in &raw_counts {
            if x == 0 {
                continue;
            }
            let g_new = gene_remap[&g];
            let k_new = sample_remap[&k];
            let cov = cell_cov.get(&(g_new, m, k_new)).copied().unwrap_or(0);
            if cov == 0 {
                return Err(Error::validation(format!(
                    "count {x} with zero coverage at (gene '{}', type '{}', sample '{}')",
                    gene_names[g_new as usize],
                    types[m as usize].label,
                    samples[k_new as usize].label
                )));
            }
            counts_by_gene[g_new as usize].push(CountCell {
                type_idx: m,
                sample_idx: k_new,
                count: x,
                coverage: cov,
            });
        }
        let mut counts = Vec::new();
        let mut count_offsets = Vec::with_capacity(n_genes + 1);
        count_offsets.push(0);
        for cells in &mut counts_by_gene {
            cells.sort_by_key(|c| (c.type_idx, c.sample_idx));
            counts.extend_from_slice(cells);
            count_offsets.push(counts.len());
        }

        // Static aggregates.
        let mut gene_count_totals = vec![0u32; n_genes];
        let mut type_count_totals = vec![0.0; n_types];
        let mut sample_count_totals = vec![0.0; n_samples];
        let mut ln_factorial_total = 0.0;
        for (g, cells) in counts_by_gene.iter().enumerate() {
            for c in cells {
                gene_count_totals[g] += c.count;
                type_count_totals[c.type_idx as usize] += c.count as f64;
                sample_count_totals[c.sample_idx as usize] += c.count as f64;
                ln_factorial_total += ln_factorial(c.count);
            }
        }

        let mut gene_coverage_totals = vec![0i64; n_genes];
        let mut type_coverage_totals = vec![0i64; n_types];
        let mut sample_coverage_totals = vec![0i64; n_samples];
        let mut type_rows_grouped: Vec<Vec<TypeRow>> = vec![Vec::new(); n_types];
        for g in 0..n_genes {
            for seg in &coverage[coverage_offsets[g]..coverage_offsets[g + 1]] {
                let pat_len = patterns[seg.pattern as usize].len() as i64;
                gene_coverage_totals[g] += seg.bases * pat_len;
                type_coverage_totals[seg.type_idx as usize] += seg.bases * pat_len;
                for &k in &patterns[seg.pattern as usize] {
                    sample_coverage_totals[k as usize] += seg.bases;
                }
                type_rows_grouped[seg.type_idx as usize].push(TypeRow {
                    gene: g as u32,
                    pattern: seg.pattern,
                    bases: seg.bases,
                });
            }
        }
        let mut type_rows = Vec::new();
        let mut type_row_offsets = Vec::with_capacity(n_types + 1);
        type_row_offsets.push(0);
        for rows in type_rows_grouped {
            type_rows.extend(rows);
            type_row_offsets.push(type_rows.len());
        }

        let mut patterns_by_sample: Vec<Vec<u32>> = vec![Vec::new(); n_samples];
        for (p, pat) in patterns.iter().enumerate() {
            for &k in pat {
                patterns_by_sample[k as usize].push(p as u32);
            }
        }

        Ok(MutationDataset {
            gene_names,
            types,
            samples,
            patterns,
            counts,
            count_offsets,
            coverage,
            coverage_offsets,
            gene_count_totals,
            gene_coverage_totals,
            type_count_totals,
            sample_count_totals,
            type_coverage_totals,
            sample_coverage_totals,
            ln_factorial_total,
            type_rows,
            type_row_offsets,
            patterns_by_sample,
        })
    }
}

// ---------------------------------------------------------------------------
// TSV ingestion
// ---------------------------------------------------------------------------

const COUNTS_HEADER: [&str; 4] = ["gene", "type", "sample", "count"];
const COVERAGE_HEADER_4: [&str; 4] = ["gene", "type", "sample", "coverage"];
const COVERAGE_HEADER_3: [&str; 3] = ["gene", "type", "coverage"];

/// Broadcast marker accepted in the 4-column coverage form's sample column.
const BROADCAST_SAMPLE: &str = "*";

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn parse_u32(path: &Path, line: usize, field: &str, what: &str) -> Result<u32> {
    field
        .parse::<u32>()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} '{field}'")))
}

fn parse_i64(path: &Path, line: usize, field: &str, what: &str) -> Result<i64> {
    let v = field
        .parse::<i64>()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} '{field}'")))?;
    if v < 0 {
        return Err(Error::parse(path, line, format!("negative {what} '{field}'")));
    }
    Ok(v)
}

/// Load the type catalogue from a one-label-per-line file.
pub fn load_types(path: &Path) -> Result<Vec<MutationType>> {
    let mut types = Vec::new();
    for (_, line) in read_lines(path)? {
        types.push(MutationType {
            label: line.trim().to_string(),
        });
    }
    if types.is_empty() {
        return Err(Error::validation(format!(
            "types file {} contains no labels",
            path.display()
        )));
    }
    Ok(types)
}

/// Load and validate a dataset from counts/coverage TSV files.
///
/// `types_path` absent selects the built-in 25-type catalogue.
pub fn load_dataset(
    counts_path: &Path,
    coverage_path: &Path,
    types_path: Option<&Path>,
) -> Result<MutationDataset> {
    let types = match types_path {
        Some(p) => load_types(p)?,
        None => default_type_catalogue(),
    };
    let mut builder = DatasetBuilder::new(types)?;

    let count_lines = read_lines(counts_path)?;
    let mut rows = count_lines.iter();
    match rows.next() {
        Some((lineno, header)) => {
            let cols: Vec<&str> = header.split('\t').collect();
            if cols != COUNTS_HEADER {
                return Err(Error::parse(
                    counts_path,
                    *lineno,
                    format!("expected header '{}'", COUNTS_HEADER.join("\\t")),
                ));
            }
        }
        None => {
            return Err(Error::parse(counts_path, 1, "missing header"));
        }
    }
    for (lineno, line) in rows {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::parse(
                counts_path,
                *lineno,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        let count = parse_u32(counts_path, *lineno, cols[3], "count")?;
        builder
            .add_count(cols[0], cols[1], cols[2], count)
            .map_err(|e| Error::parse(counts_path, *lineno, e.to_string()))?;
    }

    let cov_lines = read_lines(coverage_path)?;
    let mut rows = cov_lines.iter();
    let per_sample_form = match rows.next() {
        Some((lineno, header)) => {
            let cols: Vec<&str> = header.split('\t').collect();
            if cols == COVERAGE_HEADER_4 {
                true
            } else if cols == COVERAGE_HEADER_3 {
                false
            } else {
                return Err(Error::parse(
                    coverage_path,
                    *lineno,
                    format!(
                        "expected header '{}' or '{}'",
                        COVERAGE_HEADER_4.join("\\t"),
                        COVERAGE_HEADER_3.join("\\t")
                    ),
                ));
            }
        }
        None => {
            return Err(Error::parse(coverage_path, 1, "missing header"));
        }
    };
    for (lineno, line) in rows {
        let cols: Vec<&str> = line.split('\t').collect();
        let expected = if per_sample_form { 4 } else { 3 };
        if cols.len() != expected {
            return Err(Error::parse(
                coverage_path,
                *lineno,
                format!("expected {expected} columns, found {}", cols.len()),
            ));
        }
        let result = if per_sample_form {
            let bases = parse_i64(coverage_path, *lineno, cols[3], "coverage")?;
            if cols[2] == BROADCAST_SAMPLE {
                builder.add_coverage_broadcast(cols[0], cols[1], bases)
            } else {
                builder.add_coverage_cell(cols[0], cols[1], cols[2], bases)
            }
        } else {
            let bases = parse_i64(coverage_path, *lineno, cols[2], "coverage")?;
            builder.add_coverage_broadcast(cols[0], cols[1], bases)
        };
        result.map_err(|e| Error::parse(coverage_path, *lineno, e.to_string()))?;
    }

    builder.build()
}

// ---------------------------------------------------------------------------
// TSV emission
// ---------------------------------------------------------------------------

impl MutationDataset {
    /// Nonzero count rows, plus one zero row per sample that would otherwise
    /// not appear anywhere, so the sample roster survives a reload.
    pub fn write_counts(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", COUNTS_HEADER.join("\t"))?;
        let mut sample_seen = vec![false; self.n_samples()];
        for g in 0..self.n_genes() {
            for c in self.count_cells(g) {
                sample_seen[c.sample_idx as usize] = true;
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}",
                    self.gene_names[g],
                    self.types[c.type_idx as usize].label,
                    self.samples[c.sample_idx as usize].label,
                    c.count
                )?;
            }
        }
        // Registration rows for mutation-free samples.
        if self.n_genes() > 0 {
            for (k, seen) in sample_seen.iter().enumerate() {
                if !seen {
                    writeln!(
                        w,
                        "{}\t{}\t{}\t0",
                        self.gene_names[0], self.types[0].label, self.samples[k].label
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn write_coverage(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", COVERAGE_HEADER_4.join("\t"))?;
        let full: Vec<u16> = (0..self.n_samples() as u16).collect();
        for g in 0..self.n_genes() {
            for seg in self.coverage_segments(g) {
                let pat = self.pattern(seg.pattern);
                if pat == full.as_slice() {
                    writeln!(
                        w,
                        "{}\t{}\t{}\t{}",
                        self.gene_names[g],
                        self.types[seg.type_idx as usize].label,
                        BROADCAST_SAMPLE,
                        seg.bases
                    )?;
                } else {
                    for &k in pat {
                        writeln!(
                            w,
                            "{}\t{}\t{}\t{}",
                            self.gene_names[g],
                            self.types[seg.type_idx as usize].label,
                            self.samples[k as usize].label,
                            seg.bases
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_types(&self, w: &mut impl Write) -> std::io::Result<()> {
        for t in &self.types {
            writeln!(w, "{}", t.label)?;
        }
        Ok(())
    }

    /// Stable text digest of the dataset contents (not of file formatting).
    pub fn content_summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "genes={} types={} samples={} nonzero_counts={} coverage_rows={} total_count={} total_coverage={}",
            self.n_genes(),
            self.n_types(),
            self.n_samples(),
            self.counts.len(),
            self.coverage.len(),
            self.total_count(),
            self.total_coverage()
        );
        s
    }
}
