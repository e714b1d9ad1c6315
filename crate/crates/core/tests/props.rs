//! Property tests over randomized inputs: dataset round-trips, exposure
//! sums against brute force, and order statistics of the baselines.

use mutbayes_core::baselines::{bh_fdr, lrt_pvalue, rank_ascending};
use mutbayes_core::dataset::{DatasetBuilder, MutationType};
use mutbayes_core::exposure::brute_force_exposure;
use mutbayes_core::ExposureCache;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct RawStudy {
    n_types: usize,
    n_samples: usize,
    coverage: Vec<(u8, u8, u8, i64)>,
    counts: Vec<(u8, u8, u8, u32)>,
}

fn study_strategy() -> impl Strategy<Value = RawStudy> {
    (1usize..4, 1usize..4, 1usize..5).prop_flat_map(|(n_types, n_samples, n_genes)| {
        let cov_cell = (
            0..n_genes as u8,
            0..n_types as u8,
            0..n_samples as u8,
            1i64..50_000,
        );
        let coverage = proptest::collection::vec(cov_cell, 1..20);
        coverage.prop_flat_map(move |coverage| {
            // counts only on covered cells
            let cov = coverage.clone();
            let count_idx = proptest::collection::vec(
                (0..cov.len().max(1), 1u32..5),
                0..6,
            );
            count_idx.prop_map(move |picks| {
                let mut counts = Vec::new();
                for (i, x) in picks {
                    let (g, m, k, _) = coverage[i % coverage.len()];
                    counts.push((g, m, k, x));
                }
                RawStudy {
                    n_types,
                    n_samples,
                    coverage: coverage.clone(),
                    counts,
                }
            })
        })
    })
}

fn build(raw: &RawStudy) -> Option<mutbayes_core::MutationDataset> {
    let types: Vec<MutationType> = (0..raw.n_types)
        .map(|i| MutationType {
            label: format!("t{i}"),
        })
        .collect();
    let mut b = DatasetBuilder::new(types).ok()?;
    let mut seen = std::collections::HashSet::new();
    for &(g, m, k, t) in &raw.coverage {
        if seen.insert((g, m, k)) {
            b.add_coverage_cell(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), t)
                .ok()?;
        }
    }
    let mut seen_counts = std::collections::HashSet::new();
    for &(g, m, k, x) in &raw.counts {
        if seen_counts.insert((g, m, k)) {
            b.add_count(&format!("g{g}"), &format!("t{m}"), &format!("s{k}"), x)
                .ok()?;
        }
    }
    // unregistered samples would be dropped silently otherwise
    for k in 0..raw.n_samples {
        b.register_sample(&format!("s{k}"));
    }
    b.build().ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_roundtrips_through_tsv(raw in study_strategy()) {
        let Some(data) = build(&raw) else { return Ok(()); };
        let dir = tempfile::tempdir().unwrap();
        let mut cbuf = Vec::new();
        let mut vbuf = Vec::new();
        let mut tbuf = Vec::new();
        data.write_counts(&mut cbuf).unwrap();
        data.write_coverage(&mut vbuf).unwrap();
        data.write_types(&mut tbuf).unwrap();
        let cp = dir.path().join("c.tsv");
        let vp = dir.path().join("v.tsv");
        let tp = dir.path().join("t.tsv");
        std::fs::write(&cp, &cbuf).unwrap();
        std::fs::write(&vp, &vbuf).unwrap();
        std::fs::write(&tp, &tbuf).unwrap();
        let back = mutbayes_core::load_dataset(&cp, &vp, Some(&tp)).unwrap();
        prop_assert_eq!(data, back);
    }

    #[test]
    fn exposures_match_brute_force(
        raw in study_strategy(),
        alpha_seed in 1u64..1000,
    ) {
        let Some(data) = build(&raw) else { return Ok(()); };
        // deterministic pseudo-effects from the seed
        let alpha: Vec<f64> = (0..data.n_types())
            .map(|m| 0.25 + ((alpha_seed + m as u64 * 7) % 13) as f64 * 0.2)
            .collect();
        let beta: Vec<f64> = (0..data.n_samples())
            .map(|k| 0.3 + ((alpha_seed + k as u64 * 11) % 9) as f64 * 0.25)
            .collect();
        let cache = ExposureCache::build(&data, &alpha, &beta).unwrap();
        for g in 0..data.n_genes() {
            let brute = brute_force_exposure(&data, g, &alpha, &beta);
            let rel = (cache.exposure(g) - brute).abs() / brute.abs().max(1e-12);
            prop_assert!(rel < 1e-12);
        }
    }

    #[test]
    fn bh_is_valid_adjustment(ps in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
        let q = bh_fdr(&ps);
        let order = rank_ascending(&ps);
        for w in order.windows(2) {
            prop_assert!(q[w[0]] <= q[w[1]] + 1e-15);
        }
        for (&qi, &pi) in q.iter().zip(ps.iter()) {
            prop_assert!(qi >= pi - 1e-15);
            prop_assert!(qi <= 1.0);
        }
    }

    #[test]
    fn lrt_pvalue_is_a_probability_and_monotone(
        x in 0u32..40,
        mean in 1e-6f64..60.0,
    ) {
        let p = lrt_pvalue(x, mean);
        prop_assert!((0.0..=1.0).contains(&p));
        let p_next = lrt_pvalue(x + 1, mean);
        prop_assert!(p_next <= p + 1e-15);
        let p_higher_mean = lrt_pvalue(x, mean * 1.5);
        prop_assert!(p_higher_mean >= p - 1e-12);
    }
}
