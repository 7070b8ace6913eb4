//! Binomial confidence intervals and small fitting helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Two-sided confidence level used throughout the experiments.
pub const CONFIDENCE: f64 = 0.95;

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(hits <= trials && trials > 0, "need 0 <= hits <= trials, trials > 0");
    let alpha = 1.0 - confidence;
    let (k, n) = (hits as f64, trials as f64);
    let low = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("beta parameters").inverse_cdf(alpha / 2.0)
    };
    let high = if hits == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("beta parameters").inverse_cdf(1.0 - alpha / 2.0)
    };
    (low, high)
}

/// Point estimate and exact interval for a hit count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BinomialEstimate {
    pub fn new(hits: u64, trials: u64, confidence: f64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, trials, confidence);
        BinomialEstimate {
            hits,
            trials,
            estimate: hits as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Least-squares slope of `log y` against `log x`; `None` if fewer than two
/// usable points or any `y` is zero.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    linear_slope(&lx, &ly)
}

fn linear_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Slope of the least-squares line through the origin.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if xs.len() < 2 || sxx == 0.0 {
        return None;
    }
    Some(xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx)
}

/// Sample quantile by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
