//! Univariate slice sampler with stepping out and shrinkage (Neal 2003).

use rand::Rng;

/// One slice-sampling transition for a log-density `log_f`, starting at `x`.
///
/// `width` is the initial bracket size. Stepping out is capped at
/// `max_steps` doublings per side, which is plenty for the unimodal
/// log-rate conditionals this is used on.
pub fn slice_sample<F, R>(x: f64, log_f: F, width: f64, max_steps: u32, rng: &mut R) -> f64
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let fx = log_f(x);
    debug_assert!(fx.is_finite(), "slice sampler started outside the support");
    let level = fx + rng.random::<f64>().ln();

    let mut lo = x - width * rng.random::<f64>();
    let mut hi = lo + width;
    let mut steps = max_steps;
    while steps > 0 && log_f(lo) > level {
        lo -= width;
        steps -= 1;
    }
    let mut steps = max_steps;
    while steps > 0 && log_f(hi) > level {
        hi += width;
        steps -= 1;
    }

    loop {
        let candidate = lo + rng.random::<f64>() * (hi - lo);
        if log_f(candidate) > level {
            return candidate;
        }
        if candidate < x {
            lo = candidate;
        } else {
            hi = candidate;
        }
        if hi - lo < f64::EPSILON * (1.0 + x.abs()) {
            // Interval shrunk to the starting point.
            return x;
        }
    }
}
