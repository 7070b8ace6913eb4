//! Concentration of diagonally monotone functions of i.i.d. coordinates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seeding::{trial_rng, Stream};
use crate::stats::{BinomialEstimate, CONFIDENCE};

/// Test functions that are monotone in each coordinate and advance by at
/// least `t` under a uniform shift by `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmFunction {
    Max,
    Sum,
    MinPlusMean,
}

impl DmFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            DmFunction::Max => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            DmFunction::Sum => x.iter().sum(),
            DmFunction::MinPlusMean => {
                x.iter().copied().fold(f64::INFINITY, f64::min) + x.iter().sum::<f64>() / x.len() as f64
            }
        }
    }
}

fn default_confidence() -> f64 {
    CONFIDENCE
}

/// Coordinates are uniform on `[0, 1/c]`, so their density is `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationConfig {
    pub phi: DmFunction,
    pub n: usize,
    pub density_bound: f64,
    pub a: f64,
    pub epsilon: f64,
    /// Monte Carlo samples; zero skips sampling.
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub phi: DmFunction,
    pub n: usize,
    pub density_bound: f64,
    pub a: f64,
    pub epsilon: f64,
    pub exact: Option<f64>,
    pub empirical: Option<BinomialEstimate>,
    /// `n · c · ε`.
    pub bound: f64,
    /// The exact value, or the estimate less three interval half-widths,
    /// stays below the bound.
    pub holds: bool,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// CDF of the sum of `n` independent uniforms on `[0, 1]`.
fn irwin_hall_cdf(n: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= n as f64 {
        return 1.0;
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    let total: f64 = (0..=x.floor() as usize)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, k) * (x - k as f64).powi(n as i32)
        })
        .sum();
    (total / factorial).clamp(0.0, 1.0)
}

/// Closed-form `P{Φ ∈ [a, a + ε]}` where one is known.
pub fn exact_probability(phi: DmFunction, n: usize, c: f64, a: f64, epsilon: f64) -> Option<f64> {
    match phi {
        DmFunction::Max => {
            let cdf = |x: f64| (c * x).clamp(0.0, 1.0).powi(n as i32);
            Some(cdf(a + epsilon) - cdf(a))
        }
        DmFunction::Sum => Some(irwin_hall_cdf(n, c * (a + epsilon)) - irwin_hall_cdf(n, c * a)),
        DmFunction::MinPlusMean => None,
    }
}

pub fn concentration_check(cfg: &ConcentrationConfig) -> Result<ConcentrationReport> {
    if cfg.n == 0 || cfg.n > 20 {
        return invalid(format!("n must lie in 1..=20, got {}", cfg.n));
    }
    if !(cfg.density_bound > 0.0 && cfg.density_bound.is_finite()) {
        return invalid("density bound must be positive");
    }
    if !(cfg.epsilon >= 0.0) {
        return invalid("epsilon must be nonnegative");
    }
    if !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
        return invalid("confidence must lie in (0, 1)");
    }
    let exact = exact_probability(cfg.phi, cfg.n, cfg.density_bound, cfg.a, cfg.epsilon);
    let empirical = (cfg.samples > 0).then(|| {
        let mut rng = trial_rng(cfg.seed, Stream::Concentration, 0);
        let width = 1.0 / cfg.density_bound;
        let mut x = vec![0.0; cfg.n];
        let mut hits = 0u64;
        for _ in 0..cfg.samples {
            x.iter_mut().for_each(|v| *v = width * rng.random::<f64>());
            let f = cfg.phi.eval(&x);
            if f >= cfg.a && f <= cfg.a + cfg.epsilon {
                hits += 1;
            }
        }
        BinomialEstimate::new(hits, cfg.samples as u64, cfg.confidence)
    });
    if exact.is_none() && empirical.is_none() {
        return invalid("no closed form for this function: samples must be positive");
    }
    let bound = cfg.n as f64 * cfg.density_bound * cfg.epsilon;
    let holds = match (exact, &empirical) {
        (Some(p), _) => p <= bound + 1e-12,
        (None, Some(e)) => e.estimate - 3.0 * e.half_width() <= bound,
        (None, None) => unreachable!(),
    };
    Ok(ConcentrationReport {
        phi: cfg.phi,
        n: cfg.n,
        density_bound: cfg.density_bound,
        a: cfg.a,
        epsilon: cfg.epsilon,
        exact,
        empirical,
        bound,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(phi: DmFunction, n: usize, a: f64, epsilon: f64, samples: usize) -> ConcentrationConfig {
        ConcentrationConfig { phi, n, density_bound: 1.0, a, epsilon, samples, seed: 1, confidence: CONFIDENCE }
    }

    #[test]
    fn max_of_two_uniforms() {
        let r = concentration_check(&cfg(DmFunction::Max, 2, 0.5, 0.1, 0)).unwrap();
        assert_abs_diff_eq!(r.exact.unwrap(), 0.11, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound, 0.2, epsilon = 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn single_uniform_sum_is_exact() {
        for a in [0.0, 0.3, 0.85] {
            let r = concentration_check(&cfg(DmFunction::Sum, 1, a, 0.15, 0)).unwrap();
            assert_abs_diff_eq!(r.exact.unwrap(), 0.15, epsilon = 1e-12);
            assert_abs_diff_eq!(r.bound, 0.15, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_width_has_zero_mass() {
        let r = concentration_check(&cfg(DmFunction::Max, 5, 0.5, 0.0, 1000)).unwrap();
        assert_eq!(r.exact, Some(0.0));
        assert_eq!(r.empirical.unwrap().hits, 0);
    }

    #[test]
    fn irwin_hall_reference() {
        assert_abs_diff_eq!(irwin_hall_cdf(2, 1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(irwin_hall_cdf(2, 1.5), 1.0 - 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(irwin_hall_cdf(3, 1.5), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn monte_carlo_matches_closed_forms() {
        for phi in [DmFunction::Max, DmFunction::Sum] {
            let r = concentration_check(&cfg(phi, 3, 0.6, 0.2, 20_000)).unwrap();
            let e = r.empirical.unwrap();
            assert!(e.contains(r.exact.unwrap()), "{phi:?}: {e:?} vs {:?}", r.exact);
        }
    }

    #[test]
    fn min_plus_mean_needs_samples() {
        assert!(concentration_check(&cfg(DmFunction::MinPlusMean, 3, 0.5, 0.1, 0)).is_err());
        assert!(concentration_check(&cfg(DmFunction::MinPlusMean, 3, 0.5, 0.1, 10_000)).unwrap().holds);
    }

    proptest! {
        #[test]
        fn dm_functions_are_monotone_and_advance(
            x in proptest::collection::vec(0.0f64..1.0, 1..8),
            t in 0.0f64..2.0,
            i in 0usize..8,
            bump in 0.0f64..1.0,
        ) {
            for phi in [DmFunction::Max, DmFunction::Sum, DmFunction::MinPlusMean] {
                let base = phi.eval(&x);
                let shifted: Vec<f64> = x.iter().map(|v| v + t).collect();
                prop_assert!(phi.eval(&shifted) >= base + t - 1e-12);
                let mut up = x.clone();
                let k = i % x.len();
                up[k] += bump;
                prop_assert!(phi.eval(&up) >= base - 1e-12);
            }
        }

        #[test]
        fn closed_forms_respect_the_bound(n in 1usize..=8, a in 0.0f64..1.0, eps in 0.0f64..0.5, c in 0.5f64..4.0) {
            for phi in [DmFunction::Max, DmFunction::Sum] {
                let p = exact_probability(phi, n, c, a, eps).unwrap();
                prop_assert!(p >= -1e-12);
                prop_assert!(p <= n as f64 * c * eps + 1e-9);
            }
        }
    }
}
