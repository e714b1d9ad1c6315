//! Small numeric helpers shared by the samplers and summaries.

use statrs::function::gamma::ln_gamma;

/// ln(x!) for a count.
pub fn ln_factorial(x: u32) -> f64 {
    ln_gamma(x as f64 + 1.0)
}

/// Log-density kernel of Poisson(x | mean) with the `ln x!` term dropped.
///
/// The dropped term is constant across the cluster/assignment alternatives
/// compared in the Gibbs steps. `mean == 0` is only reachable with `x == 0`
/// (enforced by dataset validation) and contributes 0.
pub fn poisson_log_kernel(x: f64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if x == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    x * mean.ln() - mean
}

/// Full Poisson log-pmf.
pub fn poisson_log_pmf(x: u32, mean: f64) -> f64 {
    poisson_log_kernel(x as f64, mean) - ln_factorial(x)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Draw an index from unnormalized log-weights.
///
/// `u` is a uniform(0,1) variate supplied by the caller so the draw stays a
/// pure function of its inputs.
pub fn sample_log_weights(log_weights: &[f64], u: f64) -> usize {
    let max = log_weights
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let weights: Vec<f64> = log_weights
        .iter()
        .map(|&lw| {
            let w = (lw - max).exp();
            total += w;
            w
        })
        .collect();
    let target = u * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Interpolated order-statistic quantile (the common "type 7" rule).
///
/// `sorted` must be ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Equal-tailed credible interval at the given mass (e.g. 0.9).
pub fn credible_interval(draws: &[f64], mass: f64) -> (f64, f64) {
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = (1.0 - mass) / 2.0;
    (
        quantile_type7(&sorted, tail),
        quantile_type7(&sorted, 1.0 - tail),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates_order_statistics() {
        let draws: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert!((quantile_type7(&draws, 0.05) - 5.95).abs() < 1e-12);
        assert!((quantile_type7(&draws, 0.95) - 95.05).abs() < 1e-12);
        assert_eq!(quantile_type7(&draws, 0.0), 1.0);
        assert_eq!(quantile_type7(&draws, 1.0), 100.0);
    }

    #[test]
    fn degenerate_interval_collapses() {
        let draws = vec![5e-7; 40];
        let (lo, hi) = credible_interval(&draws, 0.9);
        assert_eq!(lo, 5e-7);
        assert_eq!(hi, 5e-7);
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let vals = [-3.0f64, -1.5, -0.2];
        let direct: f64 = vals.iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&vals) - direct).abs() < 1e-12);
    }

    #[test]
    fn sample_log_weights_respects_mass() {
        // Two weights 1:3; u below 0.25 picks the first.
        let lw = [0.0f64, (3.0f64).ln()];
        assert_eq!(sample_log_weights(&lw, 0.2), 0);
        assert_eq!(sample_log_weights(&lw, 0.3), 1);
        assert_eq!(sample_log_weights(&lw, 0.99), 1);
    }

    #[test]
    fn poisson_log_pmf_matches_known_values() {
        // Poisson(1 | 1) = e^{-1}
        assert!((poisson_log_pmf(1, 1.0) - (-1.0)).abs() < 1e-12);
        // Poisson(0 | mu) = e^{-mu}
        assert!((poisson_log_pmf(0, 2.5) - (-2.5)).abs() < 1e-12);
    }
}
