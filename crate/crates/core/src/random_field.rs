//! Alloy-type random potentials `V(x) = Σ_s V_s φ(x − s)`.
//!
//! A [`BumpProfile`] describes one impurity's footprint, an
//! [`AmplitudeEnsemble`] the joint law of the amplitudes `V_s`, and a
//! [`FieldRealization`] one draw of the amplitudes on a finite site set.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Triangular};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Cube, Site};
use crate::seeding::{trial_rng, Stream};
use crate::stats::{BinomialEstimate, CONFIDENCE};

/// Tolerance on the covering sum.
pub const COVERING_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpKind {
    /// `scale · 1{‖y‖_max ≤ R}`
    Indicator,
    /// `scale · Π_i max(0, 1 − |y_i|/R)`
    Tent,
    /// `scale · Π_i exp(1 − 1/(1 − (y_i/R)²))` inside the cube of radius `R`
    SmoothCompact,
}

/// Translation-invariant bump `φ`, nonnegative and supported in the
/// sup-norm ball of radius `range`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct BumpProfile {
    kind: BumpKind,
    range: f64,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: BumpKind,
    range: f64,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawProfile> for BumpProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        BumpProfile::new(raw.kind, raw.range, raw.scale)
    }
}

impl From<BumpProfile> for RawProfile {
    fn from(p: BumpProfile) -> Self {
        RawProfile { kind: p.kind, range: p.range, scale: p.scale }
    }
}

impl BumpProfile {
    pub fn new(kind: BumpKind, range: f64, scale: f64) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return invalid(format!("bump range must be positive, got {range}"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return invalid(format!("bump scale must be positive, got {scale}"));
        }
        Ok(BumpProfile { kind, range, scale })
    }

    /// Unit-height tents of radius one: a partition of unity on `R^d`.
    pub fn unit_tent() -> Self {
        BumpProfile { kind: BumpKind::Tent, range: 1.0, scale: 1.0 }
    }

    pub fn kind(&self) -> BumpKind {
        self.kind
    }

    /// Support radius `R` in the sup-norm.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sup(&self) -> f64 {
        self.scale
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let r = self.range;
        match self.kind {
            BumpKind::Indicator => {
                if y.iter().all(|yi| yi.abs() <= r) {
                    self.scale
                } else {
                    0.0
                }
            }
            BumpKind::Tent => self.scale * y.iter().map(|yi| (1.0 - yi.abs() / r).max(0.0)).product::<f64>(),
            BumpKind::SmoothCompact => {
                self.scale
                    * y.iter()
                        .map(|yi| {
                            let t = yi / r;
                            if t.abs() < 1.0 {
                                (1.0 - 1.0 / (1.0 - t * t)).exp()
                            } else {
                                0.0
                            }
                        })
                        .product::<f64>()
            }
        }
    }

    /// Upper bound on `Σ_{s ∈ Z^d} φ(x − s)` over all `x`.
    pub fn overlap_bound(&self, dimension: usize) -> f64 {
        let per_axis = 2.0 * self.range.floor() + 2.0;
        self.scale * per_axis.powi(dimension as i32)
    }
}

pub fn eval_bump(profile: &BumpProfile, y: &[f64]) -> f64 {
    profile.eval(y)
}

/// Integer points `s` with `‖x − s‖_max ≤ r`.
pub fn sites_within(x: &[f64], r: f64) -> Vec<Site> {
    Cube::new(x.to_vec(), r).map(|c| c.lattice_sites()).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub min_sum: f64,
    pub max_sum: f64,
    pub covering_holds: bool,
    pub samples: usize,
}

/// Sample `Σ_{s ∈ Λ ∩ Z^d} φ(x − s)` over a grid in `Λ`.
///
/// The grid along each axis contains the regular points at `grid_step`,
/// both faces, and every integer and half-integer point of the cube.
pub fn verify_covering(profile: &BumpProfile, cube: &Cube, grid_step: f64) -> Result<CoveringReport> {
    if !(grid_step > 0.0) {
        return invalid(format!("grid step must be positive, got {grid_step}"));
    }
    let sites = cube.lattice_sites();
    let axes: Vec<Vec<f64>> = (0..cube.dimension())
        .map(|a| axis_samples(cube.lower(a), cube.upper(a), grid_step))
        .collect();

    let mut min_sum = f64::INFINITY;
    let mut max_sum = f64::NEG_INFINITY;
    let mut samples = 0usize;
    let mut idx = vec![0usize; axes.len()];
    let mut x = vec![0.0; axes.len()];
    let mut y = vec![0.0; axes.len()];
    loop {
        for (a, &i) in idx.iter().enumerate() {
            x[a] = axes[a][i];
        }
        let mut sum = 0.0;
        for s in &sites {
            if s.iter().zip(&x).all(|(&si, xi)| (xi - si as f64).abs() <= profile.range) {
                for a in 0..x.len() {
                    y[a] = x[a] - s[a] as f64;
                }
                sum += profile.eval(&y);
            }
        }
        min_sum = min_sum.min(sum);
        max_sum = max_sum.max(sum);
        samples += 1;

        let mut a = axes.len();
        loop {
            if a == 0 {
                return Ok(CoveringReport {
                    min_sum,
                    max_sum,
                    covering_holds: min_sum >= 1.0 - COVERING_TOLERANCE,
                    samples,
                });
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn axis_samples(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let n = ((hi - lo) / step).floor() as i64;
    for i in 0..=n {
        pts.push(lo + i as f64 * step);
    }
    pts.push(hi);
    let mut k = (2.0 * lo).ceil() as i64;
    while k as f64 <= 2.0 * hi {
        pts.push(k as f64 / 2.0);
        k += 1;
    }
    pts.retain(|p| *p >= lo && *p <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    pts
}

/// Joint law of the amplitudes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeEnsemble {
    /// Independent uniform amplitudes on `[low, high]`; `low == high` is the
    /// deterministic (zero-disorder) case.
    IidUniform { low: f64, high: f64 },
    /// Independent symmetric triangular amplitudes on `[low, high]`.
    IidBoundedDensity { low: f64, high: f64 },
    /// Markov chain along the lexicographic order: each site either
    /// redraws uniformly on `[low, high]` (probability `1 − coupling`) or
    /// draws uniformly from the window `[prev − window, prev + window]`
    /// clipped to `[low, high]`.
    MarkovClipped { low: f64, high: f64, coupling: f64, window: f64 },
}

impl AmplitudeEnsemble {
    pub fn uniform(m: f64) -> Self {
        AmplitudeEnsemble::IidUniform { low: 0.0, high: m }
    }

    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.support();
        if !(low.is_finite() && high.is_finite() && low <= high) {
            return invalid(format!("amplitude support [{low}, {high}] is not an interval"));
        }
        match *self {
            AmplitudeEnsemble::IidUniform { .. } => Ok(()),
            AmplitudeEnsemble::IidBoundedDensity { .. } if low < high => Ok(()),
            AmplitudeEnsemble::IidBoundedDensity { .. } => invalid("bounded-density ensemble needs low < high"),
            AmplitudeEnsemble::MarkovClipped { coupling, window, .. } => {
                if low == high {
                    return invalid("markov ensemble needs low < high");
                }
                if !(0.0..1.0).contains(&coupling) {
                    return invalid(format!("markov coupling must lie in [0, 1), got {coupling}"));
                }
                if !(window > 0.0 && window <= high - low) {
                    return invalid(format!("markov window must lie in (0, {}], got {window}", high - low));
                }
                Ok(())
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            AmplitudeEnsemble::IidUniform { low, high }
            | AmplitudeEnsemble::IidBoundedDensity { low, high }
            | AmplitudeEnsemble::MarkovClipped { low, high, .. } => (low, high),
        }
    }

    /// `M = sup |V_s|`.
    pub fn bound(&self) -> f64 {
        let (low, high) = self.support();
        low.abs().max(high.abs())
    }

    pub fn is_independent(&self) -> bool {
        !matches!(self, AmplitudeEnsemble::MarkovClipped { coupling, .. } if *coupling > 0.0)
    }

    /// Uniform bound `ρ∞` on every conditional marginal density, or `None`
    /// for the deterministic ensemble.
    pub fn density_bound(&self) -> Option<f64> {
        let (low, high) = self.support();
        let width = high - low;
        if width == 0.0 {
            return None;
        }
        Some(match *self {
            AmplitudeEnsemble::IidUniform { .. } => 1.0 / width,
            AmplitudeEnsemble::IidBoundedDensity { .. } => 2.0 / width,
            AmplitudeEnsemble::MarkovClipped { coupling, window, .. } => {
                // conditional density given both chain neighbours is at most k_max² / k_min
                let k_min = (1.0 - coupling) / width;
                let k_max = k_min + coupling / window;
                k_max * k_max / k_min
            }
        })
    }

    /// Transition density of the Markov kernel `k(v | prev)`.
    fn kernel_density(&self, v: f64, prev: f64) -> f64 {
        match *self {
            AmplitudeEnsemble::MarkovClipped { low, high, coupling, window } => {
                if v < low || v > high {
                    return 0.0;
                }
                let (wl, wh) = ((prev - window).max(low), (prev + window).min(high));
                let local = if v >= wl && v <= wh { 1.0 / (wh - wl) } else { 0.0 };
                (1.0 - coupling) / (high - low) + coupling * local
            }
            _ => unreachable!("kernel density only exists for the markov ensemble"),
        }
    }

    fn draw_fresh(&self, rng: &mut ChaCha8Rng) -> f64 {
        let (low, high) = self.support();
        match *self {
            AmplitudeEnsemble::IidBoundedDensity { .. } => Triangular::new(low, high, 0.5 * (low + high))
                .expect("validated support")
                .sample(rng),
            _ => low + (high - low) * rng.random::<f64>(),
        }
    }

    fn draw_after(&self, prev: Option<f64>, rng: &mut ChaCha8Rng) -> f64 {
        match (*self, prev) {
            (AmplitudeEnsemble::MarkovClipped { low, high, coupling, window }, Some(p))
                if coupling > 0.0 && rng.random::<f64>() < coupling =>
            {
                let (wl, wh) = ((p - window).max(low), (p + window).min(high));
                wl + (wh - wl) * rng.random::<f64>()
            }
            _ => self.draw_fresh(rng),
        }
    }
}

/// Amplitudes on a finite, lexicographically sorted site set. Sites outside
/// the set carry amplitude zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldRealization {
    sites: Vec<Site>,
    amplitudes: Vec<f64>,
    index: HashMap<Site, usize>,
    /// `(master_seed, trial)` the amplitudes were drawn from.
    pub provenance: (u64, u64),
}

impl FieldRealization {
    /// Build a realization from explicit amplitudes.
    pub fn from_amplitudes(sites: Vec<Site>, amplitudes: Vec<f64>, provenance: (u64, u64)) -> Result<Self> {
        if sites.len() != amplitudes.len() {
            return invalid("site and amplitude counts differ");
        }
        let mut pairs: Vec<(Site, f64)> = sites.into_iter().zip(amplitudes).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        let (sites, amplitudes): (Vec<Site>, Vec<f64>) = pairs.into_iter().unzip();
        let index = sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(FieldRealization { sites, amplitudes, index, provenance })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, site: &[i64]) -> Option<f64> {
        self.index.get(site).map(|&i| self.amplitudes[i])
    }

    pub fn covers(&self, site: &[i64]) -> bool {
        self.index.contains_key(site)
    }

    /// Copy with `t` added to the amplitude at each listed site that exists.
    pub fn shifted(&self, on: &[Site], t: f64) -> FieldRealization {
        let mut out = self.clone();
        for s in on {
            if let Some(&i) = self.index.get(s) {
                out.amplitudes[i] += t;
            }
        }
        out
    }

    /// Copy with a site-wise perturbation added.
    pub fn perturbed(&self, delta: &[(Site, f64)]) -> FieldRealization {
        let mut out = self.clone();
        for (s, d) in delta {
            if let Some(&i) = self.index.get(s) {
                out.amplitudes[i] += d;
            }
        }
        out
    }

    /// One row per site: coordinates followed by the amplitude.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let d = self.sites.first().map_or(0, |s| s.len());
        let mut header: Vec<String> = (1..=d).map(|i| format!("s{i}")).collect();
        header.push("amplitude".into());
        w.write_record(&header)?;
        for (s, a) in self.sites.iter().zip(&self.amplitudes) {
            let mut row: Vec<String> = s.iter().map(|c| c.to_string()).collect();
            row.push(a.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Draw amplitudes on `sites` for trial `trial` of a run seeded by `master_seed`.
pub fn sample_amplitudes(
    ensemble: &AmplitudeEnsemble,
    sites: &[Site],
    master_seed: u64,
    trial: u64,
) -> Result<FieldRealization> {
    sample_amplitudes_on(ensemble, sites, master_seed, Stream::Field, trial)
}

/// [`sample_amplitudes`] drawing from an explicit stream.
pub fn sample_amplitudes_on(
    ensemble: &AmplitudeEnsemble,
    sites: &[Site],
    master_seed: u64,
    stream: Stream,
    trial: u64,
) -> Result<FieldRealization> {
    if sites.is_empty() {
        return invalid("cannot sample a field on an empty site set");
    }
    ensemble.validate()?;
    let mut sorted = sites.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut rng = trial_rng(master_seed, stream, trial);
    let mut amplitudes = Vec::with_capacity(sorted.len());
    for (i, s) in sorted.iter().enumerate() {
        // chain predecessor: the neighbour one step back along the last axis
        let prev = (i > 0 && is_chain_predecessor(&sorted[i - 1], s)).then(|| amplitudes[i - 1]);
        amplitudes.push(ensemble.draw_after(prev, &mut rng));
    }
    FieldRealization::from_amplitudes(sorted, amplitudes, (master_seed, trial))
}

fn is_chain_predecessor(prev: &[i64], s: &[i64]) -> bool {
    let d = s.len();
    prev[..d - 1] == s[..d - 1] && prev[d - 1] + 1 == s[d - 1]
}

/// `V(x) = Σ_s V_s φ(x − s)` over the realization's sites.
pub fn eval_potential_1p(realization: &FieldRealization, profile: &BumpProfile, x: &[f64]) -> f64 {
    let mut y = vec![0.0; x.len()];
    sites_within(x, profile.range)
        .iter()
        .filter_map(|s| realization.amplitude(s).map(|a| (s, a)))
        .map(|(s, a)| {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = x[k] - s[k] as f64;
            }
            a * profile.eval(&y)
        })
        .sum()
}

/// Two-particle potential `V(x1) + V(x2)`.
pub fn eval_potential_2p(realization: &FieldRealization, profile: &BumpProfile, x1: &[f64], x2: &[f64]) -> f64 {
    eval_potential_1p(realization, profile, x1) + eval_potential_1p(realization, profile, x2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMethod {
    Analytic,
    Empirical,
}

/// Value of the continuity modulus `ν(ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub method: NuMethod,
    /// Two-sided 95% interval for empirical estimates. For correlated
    /// ensembles the interval is simultaneous over the probed conditioning
    /// configurations.
    pub ci: Option<(f64, f64)>,
    /// Sampled conditioning only probes part of the essential supremum.
    pub is_lower_bound: bool,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1), got {epsilon}"));
    }
    Ok(())
}

/// Closed-form `ν(ε)`: `ε / (high − low)` for uniform amplitudes, `ρ∞ ε`
/// otherwise, capped at one.
pub fn nu_bound(ensemble: &AmplitudeEnsemble, epsilon: f64) -> Result<NuEstimate> {
    check_epsilon(epsilon)?;
    ensemble.validate()?;
    let value = match ensemble.density_bound() {
        None => 1.0,
        Some(rho) => (rho * epsilon).min(1.0),
    };
    Ok(NuEstimate { epsilon, value, method: NuMethod::Analytic, ci: None, is_lower_bound: false })
}

/// Number of conditioning configurations probed for correlated ensembles.
pub const NU_CONDITIONING_CONFIGS: usize = 8;

/// Monte Carlo estimate of `ν(ε)`.
///
/// Each conditioning configuration gets its own sample, split in halves:
/// the first half locates the heaviest window `[y, y + ε]`, the second
/// half estimates that window's mass. The largest estimate is returned.
pub fn estimate_nu(ensemble: &AmplitudeEnsemble, epsilon: f64, trials: usize, seed: u64) -> Result<NuEstimate> {
    check_epsilon(epsilon)?;
    ensemble.validate()?;
    if trials < 100 {
        return invalid(format!("estimate_nu needs at least 100 trials, got {trials}"));
    }
    let configs = if ensemble.is_independent() { 1 } else { NU_CONDITIONING_CONFIGS };
    let per_config = trials / configs;
    let confidence = 1.0 - (1.0 - CONFIDENCE) / configs as f64;

    let mut best: Option<BinomialEstimate> = None;
    for c in 0..configs {
        let mut rng = trial_rng(seed, Stream::Nu, c as u64);
        let samples: Vec<f64> = if configs == 1 {
            (0..per_config).map(|_| ensemble.draw_fresh(&mut rng)).collect()
        } else {
            conditional_samples(ensemble, per_config, &mut rng)
        };
        let (locate, measure) = samples.split_at(samples.len() / 2);
        let y = heaviest_window(locate, epsilon);
        let hits = measure.iter().filter(|&&v| v >= y && v <= y + epsilon).count() as u64;
        let est = BinomialEstimate::new(hits, measure.len() as u64, confidence);
        if best.is_none_or(|b| est.estimate > b.estimate) {
            best = Some(est);
        }
    }
    let best = best.expect("at least one configuration");
    Ok(NuEstimate {
        epsilon,
        value: best.estimate,
        method: NuMethod::Empirical,
        ci: Some((best.ci_low, best.ci_high)),
        is_lower_bound: !ensemble.is_independent(),
    })
}

/// Samples of a middle chain site conditioned on freshly drawn neighbours.
fn conditional_samples(ensemble: &AmplitudeEnsemble, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let prev = ensemble.draw_fresh(rng);
    let mid = ensemble.draw_after(Some(prev), rng);
    let next = ensemble.draw_after(Some(mid), rng);
    let (low, high) = ensemble.support();
    let k_max = match *ensemble {
        AmplitudeEnsemble::MarkovClipped { coupling, window, .. } => (1.0 - coupling) / (high - low) + coupling / window,
        _ => unreachable!(),
    };
    // rejection: propose from k(·|prev), accept with k(next|v)/k_max
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v = ensemble.draw_after(Some(prev), rng);
        if rng.random::<f64>() * k_max <= ensemble.kernel_density(next, v) {
            out.push(v);
        }
    }
    out
}

/// Left end `y` of the window `[y, y + ε]` containing most sample points.
fn heaviest_window(samples: &[f64], epsilon: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut best_y, mut best_count) = (sorted.first().copied().unwrap_or(0.0), 0usize);
    let mut hi = 0usize;
    for lo in 0..sorted.len() {
        while hi < sorted.len() && sorted[hi] <= sorted[lo] + epsilon {
            hi += 1;
        }
        if hi - lo > best_count {
            best_count = hi - lo;
            best_y = sorted[lo];
        }
    }
    best_y
}
