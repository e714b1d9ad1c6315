//! Frequentist comparators: per-gene Poisson MLEs, likelihood-ratio-test
//! right-tail p-values, Benjamini-Hochberg adjustment, and the estimated /
//! true FDR curves used for calibration reports.

use std::io::Write;

use crate::dataset::MutationDataset;
use crate::error::{Error, Result};
use crate::exposure::ExposureCache;

/// Poisson MLE with exposure offset: X / E. None when the gene carries no
/// exposure.
pub fn mle_rate(x: u32, exposure: f64) -> Option<f64> {
    if exposure > 0.0 {
        Some(x as f64 / exposure)
    } else {
        None
    }
}

/// Right-tail probability P(X >= x) under Poisson(null_mean), inclusive.
///
/// Sums the shorter tail with a log-space starting term, exact to 1e-12
/// relative for the null means seen here (the spec range is <= 50).
pub fn lrt_pvalue(x: u32, null_mean: f64) -> f64 {
    assert!(null_mean > 0.0, "null mean must be positive");
    if x == 0 {
        return 1.0;
    }
    let xf = x as f64;
    if xf <= null_mean {
        // Complement of the lower tail P(X < x), x terms.
        let mut term = (-null_mean).exp();
        let mut acc = term;
        for j in 1..x {
            term *= null_mean / j as f64;
            acc += term;
        }
        (1.0 - acc).max(0.0)
    } else {
        // Direct upper-tail sum from x, decaying terms.
        let log_first = xf * null_mean.ln() - null_mean - crate::math::ln_factorial(x);
        let mut term = log_first.exp();
        let mut acc = term;
        let mut j = xf;
        loop {
            j += 1.0;
            term *= null_mean / j;
            acc += term;
            if term < acc * 1e-18 {
                break;
            }
        }
        acc.min(1.0)
    }
}

/// Benjamini-Hochberg step-up adjustment, mapped back to input order.
/// Ties are broken by a stable sort on (p, original index).
pub fn bh_fdr(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        p_values[a]
            .partial_cmp(&p_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut adjusted = vec![0.0; m];
    let mut running_min = 1.0f64;
    for (pos, &idx) in order.iter().enumerate().rev() {
        let rank = pos + 1;
        let q = (m as f64 * p_values[idx] / rank as f64).min(1.0);
        running_min = running_min.min(q);
        adjusted[idx] = running_min;
    }
    adjusted
}

/// Estimated FDR of top-k lists ranked by driver probability (descending,
/// ties by gene id): the mean posterior passenger probability in the list.
pub fn bayes_fdr_curve(p_driver: &[f64], list_sizes: &[usize]) -> Result<Vec<f64>> {
    let order = rank_descending(p_driver);
    let mut prefix = Vec::with_capacity(p_driver.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &g in &order {
        acc += 1.0 - p_driver[g];
        prefix.push(acc);
    }
    list_sizes
        .iter()
        .map(|&k| {
            if k == 0 || k > p_driver.len() {
                return Err(Error::validation(format!(
                    "list size {k} outside 1..={}",
                    p_driver.len()
                )));
            }
            Ok(prefix[k] / k as f64)
        })
        .collect()
}

/// True false-discovery proportion of every top-k prefix of `ranking`.
pub fn true_fdr_curve(ranking: &[usize], is_driver: &[bool]) -> Vec<f64> {
    let mut curve = Vec::with_capacity(ranking.len());
    let mut passengers = 0usize;
    for (pos, &g) in ranking.iter().enumerate() {
        if !is_driver[g] {
            passengers += 1;
        }
        curve.push(passengers as f64 / (pos + 1) as f64);
    }
    curve
}

/// Gene order by score descending, ties by gene id ascending.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Gene order by p-value ascending, ties by gene id ascending.
pub fn rank_ascending(p_values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p_values.len()).collect();
    order.sort_by(|&a, &b| {
        p_values[a]
            .partial_cmp(&p_values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

#[derive(Debug, Clone)]
pub struct GeneTestResult {
    pub gene: usize,
    pub x: u32,
    pub exposure: f64,
    pub mle_rate: Option<f64>,
    pub p_value: f64,
    pub bh_q: f64,
}

/// Per-gene MLE, LRT p-value and BH adjustment under the plug-in effects
/// carried by the cache. Genes without exposure keep p = 1 and no MLE.
pub fn compute_baseline(
    data: &MutationDataset,
    cache: &ExposureCache,
    lambda0: f64,
) -> Result<Vec<GeneTestResult>> {
    if !(lambda0 > 0.0) {
        return Err(Error::config("lambda0 must be > 0"));
    }
    let mut results: Vec<GeneTestResult> = (0..data.n_genes())
        .map(|g| {
            let x = data.gene_count_total(g);
            let e = cache.exposure(g);
            let p = if e > 0.0 { lrt_pvalue(x, lambda0 * e) } else { 1.0 };
            GeneTestResult {
                gene: g,
                x,
                exposure: e,
                mle_rate: mle_rate(x, e),
                p_value: p,
                bh_q: 1.0,
            }
        })
        .collect();
    let ps: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    for (r, q) in results.iter_mut().zip(bh_fdr(&ps)) {
        r.bh_q = q;
    }
    Ok(results)
}

pub fn write_baseline(
    results: &[GeneTestResult],
    data: &MutationDataset,
    w: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(w, "gene\tX\tE\tmle\tp\tbh_q")?;
    for r in results {
        let mle = r
            .mle_rate
            .map(|v| format!("{v}"))
            .unwrap_or_else(|| "NA".into());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            data.gene_name(r.gene),
            r.x,
            r.exposure,
            mle,
            r.p_value,
            r.bh_q
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force inclusive right tail by summing pmf values directly.
    fn brute_tail(x: u32, mean: f64) -> f64 {
        if x == 0 {
            return 1.0;
        }
        let mut acc = 0.0;
        let mut j = x;
        loop {
            let term = crate::math::poisson_log_pmf(j, mean).exp();
            acc += term;
            if term < acc * 1e-17 && j as f64 > mean {
                break;
            }
            j += 1;
            if j > x + 5000 {
                break;
            }
        }
        acc
    }

    #[test]
    fn mle_examples() {
        assert_eq!(mle_rate(0, 1e6), Some(0.0));
        assert_eq!(mle_rate(3, 1.5e6), Some(2e-6));
        assert_eq!(mle_rate(2, 0.0), None);
        // Small-gene reference shape: one mutation over ~17.5kb of
        // sample-summed coverage gives a rate near 5.7e-5.
        let small = mle_rate(1, 17_544.0).unwrap();
        assert!((small - 5.7e-5).abs() / 5.7e-5 < 0.01);
    }

    #[test]
    fn pvalue_of_zero_count_is_exactly_one() {
        assert_eq!(lrt_pvalue(0, 2.0), 1.0);
        assert_eq!(lrt_pvalue(0, 1e-6), 1.0);
    }

    #[test]
    fn pvalue_matches_hand_tail_sum() {
        // P(X >= 5 | mean 2) = 1 - e^-2 (1 + 2 + 2 + 4/3 + 2/3)
        let expect = 1.0 - (-2.0f64).exp() * (1.0 + 2.0 + 2.0 + 4.0 / 3.0 + 2.0 / 3.0);
        assert!((lrt_pvalue(5, 2.0) - expect).abs() < 1e-12);
        // P(X >= 1 | mean 1e-3) = 1 - e^-0.001
        let expect = 1.0 - (-0.001f64).exp();
        assert!((lrt_pvalue(1, 0.001) - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn pvalue_matches_brute_force_over_grid() {
        for &mean in &[0.01, 0.5, 2.0, 10.0, 50.0] {
            for x in 0..=30u32 {
                let got = lrt_pvalue(x, mean);
                let want = brute_tail(x, mean);
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(1e-300),
                    "x={x} mean={mean}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn pvalue_monotone_in_count_and_mean() {
        for x in 1..20u32 {
            assert!(lrt_pvalue(x + 1, 3.0) < lrt_pvalue(x, 3.0));
        }
        let mut prev = 0.0;
        for i in 1..40 {
            let mean = i as f64 * 0.5;
            let p = lrt_pvalue(4, mean);
            assert!(p >= prev);
            prev = p;
        }
    }

    #[test]
    fn bh_matches_hand_executed_step_up() {
        let adjusted = bh_fdr(&[0.01, 0.02, 0.5, 1.0]);
        let expect = [0.04, 0.04, 2.0 / 3.0, 1.0];
        for (a, e) in adjusted.iter().zip(expect.iter()) {
            assert!((a - e).abs() < 1e-12, "{adjusted:?}");
        }
    }

    #[test]
    fn bh_fixed_points() {
        assert_eq!(bh_fdr(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(bh_fdr(&[0.37]), vec![0.37]);
        assert!(bh_fdr(&[]).is_empty());
    }

    #[test]
    fn bh_is_monotone_along_sorted_order() {
        let ps = [0.9, 0.001, 0.02, 0.02, 0.5, 0.04, 1.0, 0.0003];
        let q = bh_fdr(&ps);
        let order = rank_ascending(&ps);
        for w in order.windows(2) {
            assert!(q[w[0]] <= q[w[1]] + 1e-15);
        }
        for (&qi, &pi) in q.iter().zip(ps.iter()) {
            assert!(qi >= pi - 1e-15 && qi <= 1.0);
        }
    }

    #[test]
    fn bayes_fdr_simple_cases() {
        assert_eq!(bayes_fdr_curve(&[1.0, 1.0], &[2]).unwrap(), vec![0.0]);
        let got = bayes_fdr_curve(&[0.9, 0.7], &[2]).unwrap();
        assert!((got[0] - 0.2).abs() < 1e-15);
        assert!(bayes_fdr_curve(&[0.5], &[2]).is_err());
    }

    #[test]
    fn bayes_fdr_matches_naive_recomputation() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(33);
        let probs: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let ks: Vec<usize> = (1..=200).collect();
        let fast = bayes_fdr_curve(&probs, &ks).unwrap();
        // naive: re-sort, re-average per k
        let order = rank_descending(&probs);
        for (i, &k) in ks.iter().enumerate() {
            let naive: f64 =
                order[..k].iter().map(|&g| 1.0 - probs[g]).sum::<f64>() / k as f64;
            assert!((fast[i] - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn true_fdr_examples() {
        // Perfect ranking of 3 drivers then passengers.
        let ranking = [0, 1, 2, 3, 4];
        let truth = [true, true, true, false, false];
        let curve = true_fdr_curve(&ranking, &truth);
        assert_eq!(curve[2], 0.0);
        assert!((curve[4] - 2.0 / 5.0).abs() < 1e-15);
        // All-passenger list.
        let curve = true_fdr_curve(&[0, 1], &[false, false]);
        assert_eq!(curve, vec![1.0, 1.0]);
    }
}
