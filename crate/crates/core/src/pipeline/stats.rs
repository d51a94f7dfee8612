//! Seed splitting, bootstrap intervals and least-squares fits.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::stream_rng;

/// Tags that keep the seed trees of different pipeline stages apart.
pub mod tag {
    pub const DATA: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const PPC: u64 = 4;
    pub const SPIKES: u64 = 5;
    pub const DRAWS: u64 = 6;
}

/// Child seed reached from `master` by following `path` through ChaCha streams.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |seed, &step| stream_rng(seed, step).next_u64())
}

/// Sample mean with a percentile interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
    pub n: usize,
}

impl Interval {
    pub fn half_width(&self) -> f64 {
        (self.high - self.low) / 2.0
    }
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Percentile bootstrap interval of the mean at confidence `level`.
///
/// Non-finite values are dropped first; `None` when nothing is left.
pub fn bootstrap_mean<R: Rng + ?Sized>(values: &[f64], level: f64, resamples: usize, rng: &mut R) -> Option<Interval> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return None;
    }
    let k = finite.len();
    let mean = finite.iter().sum::<f64>() / k as f64;
    if k == 1 || resamples == 0 {
        return Some(Interval { mean, low: mean, high: mean, n: k });
    }
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..k).map(|_| *finite.choose(rng).expect("non-empty")).sum::<f64>() / k as f64)
        .collect();
    let means = sorted(&means);
    let tail = (1.0 - level) / 2.0;
    Some(Interval { mean, low: quantile(&means, tail), high: quantile(&means, 1.0 - tail), n: k })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} abscissae for {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientSamples("a line needs at least two points".into()));
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Undefined("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
        assert_eq!(derive_seed(7, &[]), 7);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 1.0), 3.0);
        assert!((quantile(&v, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_covers_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..50).map(|i| (i % 7) as f64).collect();
        let ci = bootstrap_mean(&values, 0.9, 2000, &mut rng).unwrap();
        assert!(ci.low <= ci.mean && ci.mean <= ci.high);
        assert!(ci.half_width() > 0.0 && ci.half_width() < 1.0);
        assert_eq!(ci.n, 50);
        let one = bootstrap_mean(&[2.5, f64::NAN], 0.9, 100, &mut rng).unwrap();
        assert_eq!((one.low, one.mean, one.high, one.n), (2.5, 2.5, 2.5, 1));
        assert!(bootstrap_mean(&[], 0.9, 100, &mut rng).is_none());
    }

    #[test]
    fn exact_line_has_unit_r_squared() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 1.0 - 0.25 * v).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0], &[0.0]).is_err());
    }
}
