//! Effect-weighted exposure sums E_g = sum over types and samples of
//! alpha_m * beta_k * T_gmk, the Poisson offset of every gene-level update.
//!
//! The cache keeps two derived layers over the dataset's coverage segments:
//! per-pattern beta sums and per-gene alpha-weighted pattern coverages.
//! Single-effect changes then touch O(genes) entries instead of the full
//! coverage grid.

use crate::dataset::MutationDataset;
use crate::error::{Error, Result};

/// Which multiplicative effect changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectAxis {
    Type(usize),
    Sample(usize),
}

#[derive(Debug, Clone)]
pub struct ExposureCache {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// B_P = sum of beta over the pattern's samples.
    pattern_beta: Vec<f64>,
    /// Per gene: (pattern, sum over segments of alpha_m * bases), flattened.
    gene_pattern_cov: Vec<(u32, f64)>,
    gene_pattern_offsets: Vec<usize>,
    exposures: Vec<f64>,
    /// X_g, copied from the dataset for locality.
    count_totals: Vec<f64>,
}

fn check_positive(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::validation(format!(
            "{what} effects must be strictly positive and finite"
        )));
    }
    Ok(())
}

impl ExposureCache {
    /// Full rebuild from the dataset and the current effect vectors.
    ///
    /// Summation is segment-ordered (gene-major, types in row order, samples
    /// in pattern order), so results are bit-reproducible for a dataset.
    pub fn build(data: &MutationDataset, alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != data.n_types() || beta.len() != data.n_samples() {
            return Err(Error::validation(format!(
                "effect vector lengths ({}, {}) do not match dataset ({}, {})",
                alpha.len(),
                beta.len(),
                data.n_types(),
                data.n_samples()
            )));
        }
        check_positive(alpha, "type")?;
        check_positive(beta, "sample")?;

        let mut cache = ExposureCache {
            alpha: alpha.to_vec(),
            beta: beta.to_vec(),
            pattern_beta: Vec::new(),
            gene_pattern_cov: Vec::new(),
            gene_pattern_offsets: Vec::new(),
            exposures: Vec::new(),
            count_totals: (0..data.n_genes())
                .map(|g| data.gene_count_total(g) as f64)
                .collect(),
        };
        cache.refresh(data);
        Ok(cache)
    }

    /// Recompute all derived layers from the stored effect vectors.
    pub fn refresh(&mut self, data: &MutationDataset) {
        self.pattern_beta = data
            .patterns()
            .iter()
            .map(|pat| pat.iter().map(|&k| self.beta[k as usize]).sum())
            .collect();

        self.gene_pattern_cov.clear();
        self.gene_pattern_offsets.clear();
        self.gene_pattern_offsets.push(0);
        self.exposures = vec![0.0; data.n_genes()];
        for g in 0..data.n_genes() {
            let start = self.gene_pattern_cov.len();
            for seg in data.coverage_segments(g) {
                let weighted = self.alpha[seg.type_idx as usize] * seg.bases as f64;
                match self.gene_pattern_cov[start..]
                    .iter_mut()
                    .find(|(p, _)| *p == seg.pattern)
                {
                    Some((_, c)) => *c += weighted,
                    None => self.gene_pattern_cov.push((seg.pattern, weighted)),
                }
            }
            self.gene_pattern_offsets.push(self.gene_pattern_cov.len());
            let mut e = 0.0;
            for &(p, c) in &self.gene_pattern_cov[start..] {
                e += c * self.pattern_beta[p as usize];
            }
            self.exposures[g] = e;
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn exposure(&self, g: usize) -> f64 {
        self.exposures[g]
    }

    pub fn exposures(&self) -> &[f64] {
        &self.exposures
    }

    /// X_g as f64.
    pub fn count_total(&self, g: usize) -> f64 {
        self.count_totals[g]
    }

    /// B_P per pattern under the current betas.
    pub fn pattern_beta(&self) -> &[f64] {
        &self.pattern_beta
    }

    /// (pattern, alpha-weighted coverage) pairs of gene g.
    pub fn gene_patterns(&self, g: usize) -> &[(u32, f64)] {
        &self.gene_pattern_cov[self.gene_pattern_offsets[g]..self.gene_pattern_offsets[g + 1]]
    }

    /// Adjust E_g for a single effect-coordinate change.
    ///
    /// `old` must equal the cache's current value for the coordinate; the
    /// update is an exact linear superposition, so a sequence of changes in
    /// any order lands on the same sums.
    pub fn apply_effect_change(
        &mut self,
        data: &MutationDataset,
        which: EffectAxis,
        old: f64,
        new: f64,
    ) -> Result<()> {
        if !(new > 0.0) || !new.is_finite() {
            return Err(Error::validation(
                "effects must remain strictly positive and finite",
            ));
        }
        let delta = new - old;
        match which {
            EffectAxis::Type(m) => {
                debug_assert_eq!(self.alpha[m].to_bits(), old.to_bits());
                if delta != 0.0 {
                    for row in data.type_rows(m) {
                        let g = row.gene as usize;
                        let dc = delta * row.bases as f64;
                        for entry in &mut self.gene_pattern_cov
                            [self.gene_pattern_offsets[g]..self.gene_pattern_offsets[g + 1]]
                        {
                            if entry.0 == row.pattern {
                                entry.1 += dc;
                                break;
                            }
                        }
                        self.exposures[g] += dc * self.pattern_beta[row.pattern as usize];
                    }
                }
                self.alpha[m] = new;
            }
            EffectAxis::Sample(k) => {
                debug_assert_eq!(self.beta[k].to_bits(), old.to_bits());
                if delta != 0.0 {
                    let affected = data.patterns_containing(k);
                    for &p in affected {
                        self.pattern_beta[p as usize] += delta;
                    }
                    for g in 0..self.exposures.len() {
                        let mut de = 0.0;
                        for &(p, c) in self.gene_patterns(g) {
                            if affected.contains(&p) {
                                de += c * delta;
                            }
                        }
                        self.exposures[g] += de;
                    }
                }
                self.beta[k] = new;
            }
        }
        Ok(())
    }

    /// Replace the whole alpha vector via per-coordinate incremental updates.
    pub fn set_alpha(&mut self, data: &MutationDataset, alpha: &[f64]) -> Result<()> {
        check_positive(alpha, "type")?;
        for m in 0..alpha.len() {
            if self.alpha[m] != alpha[m] {
                self.apply_effect_change(data, EffectAxis::Type(m), self.alpha[m], alpha[m])?;
            }
        }
        Ok(())
    }

    pub fn set_beta(&mut self, data: &MutationDataset, beta: &[f64]) -> Result<()> {
        check_positive(beta, "sample")?;
        for k in 0..beta.len() {
            if self.beta[k] != beta[k] {
                self.apply_effect_change(data, EffectAxis::Sample(k), self.beta[k], beta[k])?;
            }
        }
        Ok(())
    }

    /// Largest relative disagreement between the maintained exposures and a
    /// from-scratch rebuild.
    pub fn max_relative_drift(&self, data: &MutationDataset) -> f64 {
        let fresh = ExposureCache::build(data, &self.alpha, &self.beta)
            .expect("stored effects are valid");
        self.exposures
            .iter()
            .zip(fresh.exposures.iter())
            .map(|(&a, &b)| {
                let scale = b.abs().max(1e-300);
                (a - b).abs() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Brute-force exposure for one gene by expanding every (type, sample) cell.
pub fn brute_force_exposure(
    data: &MutationDataset,
    g: usize,
    alpha: &[f64],
    beta: &[f64],
) -> f64 {
    let mut total = 0.0;
    for m in 0..data.n_types() {
        for k in 0..data.n_samples() {
            let mut t = 0i64;
            for seg in data.coverage_segments(g) {
                if seg.type_idx as usize == m && data.pattern(seg.pattern).contains(&(k as u16)) {
                    t += seg.bases;
                }
            }
            total += alpha[m] * beta[k] * t as f64;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetBuilder;
    use crate::dataset::MutationType;
    use rand::Rng;
    use rand::SeedableRng;

    fn types(n: usize) -> Vec<MutationType> {
        (0..n)
            .map(|i| MutationType {
                label: format!("t{i}"),
            })
            .collect()
    }

    fn two_gene_dataset() -> MutationDataset {
        let mut b = DatasetBuilder::new(types(1)).unwrap();
        for g in ["g1", "g2"] {
            for s in ["s1", "s2"] {
                b.add_coverage_cell(g, "t0", s, 500).unwrap();
            }
        }
        b.add_count("g1", "t0", "s1", 1).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn unit_effects_reduce_to_plain_coverage_sum() {
        let data = two_gene_dataset();
        let cache = ExposureCache::build(&data, &[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(cache.exposure(0), 1000.0);
        assert_eq!(cache.exposure(1), 1000.0);
    }

    #[test]
    fn two_term_sum_matches_hand_arithmetic() {
        let mut b = DatasetBuilder::new(types(2)).unwrap();
        b.add_coverage_cell("g", "t0", "s1", 100).unwrap();
        b.add_coverage_cell("g", "t1", "s1", 300).unwrap();
        let data = b.build().unwrap();
        let cache = ExposureCache::build(&data, &[2.0, 0.5], &[1.0]).unwrap();
        assert_eq!(cache.exposure(0), 2.0 * 100.0 + 0.5 * 300.0);
    }

    #[test]
    fn matches_brute_force_on_random_dataset() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let mut b = DatasetBuilder::new(types(3)).unwrap();
        for g in 0..10 {
            for m in 0..3 {
                for k in 0..4 {
                    if rng.random::<f64>() < 0.7 {
                        let t = rng.random_range(1..2000i64);
                        b.add_coverage_cell(
                            &format!("g{g:02}"),
                            &format!("t{m}"),
                            &format!("s{k}"),
                            t,
                        )
                        .unwrap();
                    }
                }
            }
        }
        let data = b.build().unwrap();
        let alpha: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..3.0)).collect();
        let beta: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..3.0)).collect();
        let cache = ExposureCache::build(&data, &alpha, &beta).unwrap();
        for g in 0..data.n_genes() {
            let brute = brute_force_exposure(&data, g, &alpha, &beta);
            let rel = (cache.exposure(g) - brute).abs() / brute.max(1e-300);
            assert!(rel < 1e-12, "gene {g}: {} vs {}", cache.exposure(g), brute);
        }
    }

    #[test]
    fn beta_change_adds_alpha_weighted_column() {
        let data = two_gene_dataset();
        let mut cache = ExposureCache::build(&data, &[1.0], &[1.0, 1.0]).unwrap();
        cache
            .apply_effect_change(&data, EffectAxis::Sample(0), 1.0, 2.0)
            .unwrap();
        // Each gene gains sum_m alpha_m * T_gm1 = 500.
        assert_eq!(cache.exposure(0), 1500.0);
        assert_eq!(cache.exposure(1), 1500.0);
    }

    #[test]
    fn noop_change_leaves_cache_unchanged() {
        let data = two_gene_dataset();
        let mut cache = ExposureCache::build(&data, &[1.0], &[1.0, 1.0]).unwrap();
        let before = cache.exposures().to_vec();
        cache
            .apply_effect_change(&data, EffectAxis::Type(0), 1.0, 1.0)
            .unwrap();
        assert_eq!(before, cache.exposures());
    }

    #[test]
    fn random_change_sequence_matches_rebuild() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut b = DatasetBuilder::new(types(3)).unwrap();
        for g in 0..8 {
            for m in 0..3 {
                // Mix of broadcast and per-sample rows.
                if m == 0 {
                    b.add_coverage_broadcast(&format!("g{g}"), "t0", 700).unwrap();
                } else {
                    for k in 0..4 {
                        if rng.random::<f64>() < 0.6 {
                            b.add_coverage_cell(
                                &format!("g{g}"),
                                &format!("t{m}"),
                                &format!("s{k}"),
                                rng.random_range(1..1000i64),
                            )
                            .unwrap();
                        }
                    }
                }
            }
        }
        // Broadcast needs a sample roster.
        for k in 0..4 {
            b.add_count("g0", "t0", &format!("s{k}"), 0).unwrap();
        }
        let data = b.build().unwrap();
        let mut cache = ExposureCache::build(&data, &[1.0; 3], &[1.0; 4]).unwrap();
        for _ in 0..100 {
            if rng.random::<bool>() {
                let m = rng.random_range(0..3);
                let new = rng.random_range(0.1..4.0);
                cache
                    .apply_effect_change(&data, EffectAxis::Type(m), cache.alpha()[m], new)
                    .unwrap();
            } else {
                let k = rng.random_range(0..4);
                let new = rng.random_range(0.1..4.0);
                cache
                    .apply_effect_change(&data, EffectAxis::Sample(k), cache.beta()[k], new)
                    .unwrap();
            }
        }
        assert!(cache.max_relative_drift(&data) < 1e-9);
    }

    #[test]
    fn exposure_is_linear_in_each_effect() {
        let data = two_gene_dataset();
        let base = ExposureCache::build(&data, &[1.3], &[0.7, 1.1]).unwrap();
        let h = 0.25;
        let bumped = ExposureCache::build(&data, &[1.3 + h], &[0.7, 1.1]).unwrap();
        let slope = (bumped.exposure(0) - base.exposure(0)) / h;
        let bumped2 = ExposureCache::build(&data, &[1.3 + 2.0 * h], &[0.7, 1.1]).unwrap();
        let slope2 = (bumped2.exposure(0) - bumped.exposure(0)) / h;
        assert!((slope - slope2).abs() < 1e-9 * slope.abs());
    }

    #[test]
    fn rejects_nonpositive_effects() {
        let data = two_gene_dataset();
        assert!(ExposureCache::build(&data, &[0.0], &[1.0, 1.0]).is_err());
        assert!(ExposureCache::build(&data, &[1.0], &[1.0, -2.0]).is_err());
    }
}
