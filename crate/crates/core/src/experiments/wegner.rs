//! One- and two-volume eigenvalue concentration probabilities.

use serde::{Deserialize, Serialize};

use super::map_trials;
use crate::error::{invalid, Error, Result};
use crate::geometry::{is_sufficiently_distant_with, TwoParticleBox, DEFAULT_DISTANCE_MULTIPLIER};
use crate::operator::{assemble, Domain, HamiltonianSpec};
use crate::random_field::{sample_amplitudes_on, AmplitudeEnsemble};
use crate::seeding::Stream;
use crate::spectral::{eigenvalues_below, lowest_eigenvalues_with, SolverOptions};
use crate::stats::{log_log_slope, quantile, slope_through_origin, BinomialEstimate, CONFIDENCE};

/// How the reference energy `E` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyChoice {
    Fixed(f64),
    /// Median ground-state energy over a pilot run on a separate stream.
    MedianGroundState { pilot_trials: usize },
}

/// How the energy interval `I = [a, b]` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IntervalChoice {
    Fixed { a: f64, b: f64 },
    /// Central `fraction` of pilot ground-state energies of both boxes.
    CentralGroundStates { pilot_trials: usize, fraction: f64 },
}

fn default_exclusion() -> f64 {
    0.01
}

fn default_multiplier() -> f64 {
    DEFAULT_DISTANCE_MULTIPLIER
}

/// Knobs shared by both estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOptions {
    /// Extra spectrum range beyond `E + 1`; defaults to `2 · sup |U + V|`.
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Energy exponent in the one-volume bound; defaults to `d / 2`.
    #[serde(default)]
    pub exponent: Option<f64>,
    /// Largest tolerated fraction of trials lost to solver failures.
    #[serde(default = "default_exclusion")]
    pub max_exclusion_fraction: f64,
    #[serde(default = "default_multiplier")]
    pub distance_multiplier: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            margin: None,
            solver: SolverOptions::default(),
            exponent: None,
            max_exclusion_fraction: default_exclusion(),
            distance_multiplier: default_multiplier(),
        }
    }
}

impl McOptions {
    fn margin(&self, spec: &HamiltonianSpec) -> f64 {
        self.margin.unwrap_or(2.0 * spec.potential_bound())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerOneConfig {
    pub hamiltonian: HamiltonianSpec,
    pub energy: EnergyChoice,
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub options: McOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WegnerTwoConfig {
    /// Operator on `Λ`; the operator on `Λ′` differs only in its domain.
    pub hamiltonian: HamiltonianSpec,
    pub second: TwoParticleBox,
    pub interval: IntervalChoice,
    pub epsilon: f64,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub options: McOptions,
}

fn epsilon_issue(epsilon: f64) -> Option<String> {
    (!(epsilon > 0.0 && epsilon < 1.0)).then(|| format!("epsilon must lie in (0, 1), got {epsilon}"))
}

fn common_issues(spec: &HamiltonianSpec, epsilon: f64, trials: usize, options: &McOptions) -> Vec<String> {
    let mut issues = Vec::new();
    if let Err(e) = spec.validate() {
        issues.push(e.to_string());
    }
    issues.extend(epsilon_issue(epsilon));
    if trials == 0 {
        issues.push("trials must be positive".into());
    }
    if options.margin.is_some_and(|m| !(m >= 0.0)) {
        issues.push("margin must be nonnegative".into());
    }
    if !(0.0..=1.0).contains(&options.max_exclusion_fraction) {
        issues.push("max_exclusion_fraction must lie in [0, 1]".into());
    }
    issues
}

impl WegnerOneConfig {
    /// Every problem that would stop a run, without running it.
    pub fn issues(&self) -> Vec<String> {
        let mut issues = common_issues(&self.hamiltonian, self.epsilon, self.trials, &self.options);
        if let EnergyChoice::MedianGroundState { pilot_trials: 0 } = self.energy {
            issues.push("pilot_trials must be positive".into());
        }
        issues
    }
}

impl WegnerTwoConfig {
    fn first_box(&self) -> Result<&TwoParticleBox> {
        match &self.hamiltonian.domain {
            Domain::TwoParticle(b) => Ok(b),
            Domain::OneParticle(_) => invalid("two-volume experiments need a two-particle domain"),
        }
    }

    pub fn second_spec(&self) -> HamiltonianSpec {
        HamiltonianSpec { domain: Domain::TwoParticle(self.second.clone()), ..self.hamiltonian.clone() }
    }

    pub fn issues(&self) -> Vec<String> {
        let mut issues = common_issues(&self.hamiltonian, self.epsilon, self.trials, &self.options);
        match self.first_box() {
            Err(e) => issues.push(e.to_string()),
            Ok(first) => {
                if first.dimension() != self.second.dimension() {
                    issues.push("boxes have different dimensions".into());
                } else {
                    let r = self.hamiltonian.profile.range();
                    match is_sufficiently_distant_with(first, &self.second, r, self.options.distance_multiplier) {
                        Ok(true) => {}
                        Ok(false) => issues.push(format!(
                            "boxes are not sufficiently distant: need separation above {} times the largest enlarged half-width",
                            self.options.distance_multiplier
                        )),
                        Err(e) => issues.push(e.to_string()),
                    }
                }
            }
        }
        match self.interval {
            IntervalChoice::Fixed { a, b } if !(a <= b) => issues.push(format!("empty interval [{a}, {b}]")),
            IntervalChoice::CentralGroundStates { pilot_trials, fraction } => {
                if pilot_trials == 0 {
                    issues.push("pilot_trials must be positive".into());
                }
                if !(fraction > 0.0 && fraction <= 1.0) {
                    issues.push(format!("fraction must lie in (0, 1], got {fraction}"));
                }
            }
            _ => {}
        }
        issues
    }
}

fn ensure_valid(issues: Vec<String>) -> Result<()> {
    if issues.is_empty() {
        Ok(())
    } else {
        invalid(issues.join("; "))
    }
}

/// Hit-rate estimate at one `ε` with its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub epsilon: f64,
    pub hits: u64,
    /// Trials that produced a spectrum.
    pub trials: u64,
    pub excluded: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Bound with unit constant.
    pub bound_rhs: f64,
    pub fitted_constant: Option<f64>,
    /// Upper confidence limit at or below the fitted bound.
    pub dominated: Option<bool>,
    /// Exclusions within the tolerated fraction.
    pub valid: bool,
}

/// `ν(x) = min(ρ∞ x, 1)`, or one without disorder.
fn nu(ensemble: &AmplitudeEnsemble, x: f64) -> f64 {
    ensemble.density_bound().map_or(1.0, |rho| (rho * x).min(1.0))
}

/// `(1 + E∨0)^p · |Λ| · min_j |Λ_j| · ν(ε)` in lattice cardinalities.
pub fn one_volume_bound(spec: &HamiltonianSpec, energy: f64, epsilon: f64, exponent: Option<f64>) -> f64 {
    let p = exponent.unwrap_or(spec.domain.dimension() as f64 / 2.0);
    let smallest = spec.domain.particles().iter().map(|c| c.lattice_count()).min().unwrap_or(0);
    (1.0 + energy.max(0.0)).powf(p)
        * spec.domain.lattice_count() as f64
        * smallest as f64
        * nu(&spec.ensemble, epsilon)
}

/// `|Λ| · |Λ′| · max_j max(|Π_j Λ|, |Π_j Λ′|) · ν(2ε)` in lattice cardinalities.
pub fn two_volume_bound(spec: &HamiltonianSpec, second: &TwoParticleBox, epsilon: f64) -> f64 {
    let first = spec.domain.particles();
    let widest = first
        .iter()
        .chain(second.factors().iter())
        .map(|c| c.lattice_count())
        .max()
        .unwrap_or(0);
    spec.domain.lattice_count() as f64 * second.lattice_count() as f64 * widest as f64 * nu(&spec.ensemble, 2.0 * epsilon)
}

fn is_solver_error(e: &Error) -> bool {
    matches!(e, Error::NotConverged(_) | Error::SolverFailure(_))
}

fn ground_states(
    specs: &[&HamiltonianSpec],
    sites: &[Vec<i64>],
    seed: u64,
    pilot: usize,
    solver: &SolverOptions,
) -> Result<Vec<f64>> {
    let per_trial: Vec<Result<Vec<f64>>> = map_trials(pilot, |t| {
        let field = sample_amplitudes_on(&specs[0].ensemble, sites, seed, Stream::Pilot, t)?;
        let mut out = Vec::new();
        for spec in specs {
            let op = assemble(spec, &field)?;
            match lowest_eigenvalues_with(&op, 1, solver) {
                Ok(s) => out.push(s.eigenvalues[0]),
                Err(e) if is_solver_error(&e) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for r in per_trial {
        all.extend(r?);
    }
    if all.is_empty() {
        return Err(Error::SolverFailure("no pilot ground state converged".into()));
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

fn resolve_energy(cfg: &WegnerOneConfig, sites: &[Vec<i64>]) -> Result<f64> {
    match cfg.energy {
        EnergyChoice::Fixed(e) => Ok(e),
        EnergyChoice::MedianGroundState { pilot_trials } => {
            let gs = ground_states(&[&cfg.hamiltonian], sites, cfg.master_seed, pilot_trials, &cfg.options.solver)?;
            Ok(quantile(&gs, 0.5))
        }
    }
}

fn resolve_interval(cfg: &WegnerTwoConfig, specs: &[&HamiltonianSpec], sites: &[Vec<i64>]) -> Result<(f64, f64)> {
    match cfg.interval {
        IntervalChoice::Fixed { a, b } => Ok((a, b)),
        IntervalChoice::CentralGroundStates { pilot_trials, fraction } => {
            let gs = ground_states(specs, sites, cfg.master_seed, pilot_trials, &cfg.options.solver)?;
            Ok((quantile(&gs, 0.5 - fraction / 2.0), quantile(&gs, 0.5 + fraction / 2.0)))
        }
    }
}

/// Per-trial statistic `g`: the trial hits at `ε` iff `g ≤ ε`.
/// `None` marks a trial lost to the eigensolver.
struct TrialStats {
    stats: Vec<Option<f64>>,
}

impl TrialStats {
    fn estimate(&self, epsilon: f64, bound_rhs: f64, max_exclusion: f64) -> Result<ProbabilityEstimate> {
        let excluded = self.stats.iter().filter(|s| s.is_none()).count() as u64;
        let trials = self.stats.len() as u64 - excluded;
        if trials == 0 {
            return Err(Error::SolverFailure("every trial failed in the eigensolver".into()));
        }
        let hits = self.stats.iter().flatten().filter(|&&g| g <= epsilon).count() as u64;
        let b = BinomialEstimate::new(hits, trials, CONFIDENCE);
        Ok(ProbabilityEstimate {
            epsilon,
            hits,
            trials,
            excluded,
            estimate: b.estimate,
            ci_low: b.ci_low,
            ci_high: b.ci_high,
            bound_rhs,
            fitted_constant: None,
            dominated: None,
            valid: excluded as f64 <= max_exclusion * self.stats.len() as f64,
        })
    }
}

/// Distance from `E` up to the nearest eigenvalue at or above it.
fn one_volume_stats(cfg: &WegnerOneConfig, energy: f64, sites: &[Vec<i64>]) -> Result<TrialStats> {
    let spec = &cfg.hamiltonian;
    let threshold = energy + 1.0 + cfg.options.margin(spec);
    let per_trial: Vec<Result<Option<f64>>> = map_trials(cfg.trials, |t| {
        let field = sample_amplitudes_on(&spec.ensemble, sites, cfg.master_seed, Stream::Field, t)?;
        let op = assemble(spec, &field)?;
        match eigenvalues_below(&op, threshold, &cfg.options.solver) {
            Ok(s) => Ok(Some(s.eigenvalues.iter().filter(|&&e| e >= energy).map(|e| e - energy).fold(f64::INFINITY, f64::min))),
            Err(e) if is_solver_error(&e) => Ok(None),
            Err(e) => Err(e),
        }
    });
    Ok(TrialStats { stats: per_trial.into_iter().collect::<Result<_>>()? })
}

/// `dist(Σ(H_Λ) ∩ I, Σ(H_Λ′) ∩ I)`, infinite when either side is empty.
fn two_volume_stats(cfg: &WegnerTwoConfig, interval: (f64, f64), sites: &[Vec<i64>]) -> Result<TrialStats> {
    let spec = &cfg.hamiltonian;
    let second = cfg.second_spec();
    let (a, b) = interval;
    let threshold = b + 1.0 + cfg.options.margin(spec);
    let per_trial: Vec<Result<Option<f64>>> = map_trials(cfg.trials, |t| {
        let field = sample_amplitudes_on(&spec.ensemble, sites, cfg.master_seed, Stream::Field, t)?;
        let mut parts = Vec::with_capacity(2);
        for s in [spec, &second] {
            let op = assemble(s, &field)?;
            match eigenvalues_below(&op, threshold, &cfg.options.solver) {
                Ok(sp) => parts.push(sp.in_interval(a, b).collect::<Vec<f64>>()),
                Err(e) if is_solver_error(&e) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        let dist = parts[0]
            .iter()
            .flat_map(|x| parts[1].iter().map(move |y| (x - y).abs()))
            .fold(f64::INFINITY, f64::min);
        Ok(Some(dist))
    });
    Ok(TrialStats { stats: per_trial.into_iter().collect::<Result<_>>()? })
}

fn one_volume_sites(spec: &HamiltonianSpec) -> Result<Vec<Vec<i64>>> {
    spec.field_sites()
}

fn two_volume_sites(cfg: &WegnerTwoConfig) -> Result<Vec<Vec<i64>>> {
    let mut sites = cfg.hamiltonian.field_sites()?;
    sites.extend(cfg.second_spec().field_sites()?);
    sites.sort();
    sites.dedup();
    Ok(sites)
}

/// Estimate `P{Σ(H_Λ) ∩ [E, E + ε] ≠ ∅}`.
pub fn one_volume_probability(cfg: &WegnerOneConfig) -> Result<ProbabilityEstimate> {
    let table = epsilon_sweep(&SweepTarget::One(cfg.clone()), &[cfg.epsilon])?;
    Ok(table.rows.into_iter().next().expect("one row"))
}

/// Estimate `P{dist(Σ(H_Λ) ∩ I, Σ(H_Λ′) ∩ I) ≤ ε}`.
pub fn two_volume_probability(cfg: &WegnerTwoConfig) -> Result<ProbabilityEstimate> {
    let table = epsilon_sweep(&SweepTarget::Two(cfg.clone()), &[cfg.epsilon])?;
    Ok(table.rows.into_iter().next().expect("one row"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepTarget {
    One(WegnerOneConfig),
    Two(WegnerTwoConfig),
}

/// Estimates over several `ε` from one shared set of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub energy: Option<f64>,
    pub interval: Option<(f64, f64)>,
    pub rows: Vec<ProbabilityEstimate>,
    /// `estimate(ε_i) / estimate(ε_{i+1})` for consecutive rows.
    pub ratios: Vec<Option<f64>>,
    pub log_log_slope: Option<f64>,
    pub origin_slope: Option<f64>,
    /// Upper confidence limit over the bound at the coarsest `ε`.
    pub fitted_constant: Option<f64>,
    pub all_dominated: Option<bool>,
    pub valid: bool,
}

pub fn epsilon_sweep(target: &SweepTarget, epsilons: &[f64]) -> Result<SweepTable> {
    if epsilons.is_empty() {
        return invalid("epsilon list is empty");
    }
    let eps_issues: Vec<String> = epsilons.iter().filter_map(|&e| epsilon_issue(e)).collect();
    ensure_valid(eps_issues)?;
    let (stats, bounds, energy, interval, max_exclusion) = match target {
        SweepTarget::One(cfg) => {
            ensure_valid(cfg.issues())?;
            let sites = one_volume_sites(&cfg.hamiltonian)?;
            let energy = resolve_energy(cfg, &sites)?;
            let stats = one_volume_stats(cfg, energy, &sites)?;
            let bounds: Vec<f64> = epsilons
                .iter()
                .map(|&e| one_volume_bound(&cfg.hamiltonian, energy, e, cfg.options.exponent))
                .collect();
            (stats, bounds, Some(energy), None, cfg.options.max_exclusion_fraction)
        }
        SweepTarget::Two(cfg) => {
            ensure_valid(cfg.issues())?;
            let sites = two_volume_sites(cfg)?;
            let second = cfg.second_spec();
            let interval = resolve_interval(cfg, &[&cfg.hamiltonian, &second], &sites)?;
            let stats = two_volume_stats(cfg, interval, &sites)?;
            let bounds: Vec<f64> = epsilons.iter().map(|&e| two_volume_bound(&cfg.hamiltonian, &cfg.second, e)).collect();
            (stats, bounds, None, Some(interval), cfg.options.max_exclusion_fraction)
        }
    };
    let mut rows = epsilons
        .iter()
        .zip(&bounds)
        .map(|(&e, &b)| stats.estimate(e, b, max_exclusion))
        .collect::<Result<Vec<_>>>()?;

    let coarse = (0..rows.len()).max_by(|&i, &j| rows[i].epsilon.total_cmp(&rows[j].epsilon)).expect("rows");
    let fitted = (rows.len() > 1 && rows[coarse].bound_rhs > 0.0).then(|| rows[coarse].ci_high / rows[coarse].bound_rhs);
    if let Some(c) = fitted {
        for r in &mut rows {
            r.fitted_constant = Some(c);
            r.dominated = Some(r.ci_high <= c * r.bound_rhs * (1.0 + 1e-12));
        }
    }
    let ratios = rows
        .windows(2)
        .map(|w| (w[1].estimate > 0.0).then(|| w[0].estimate / w[1].estimate))
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let varies = ys.iter().any(|&y| y != ys[0]);
    let all_dominated = fitted.map(|_| rows.iter().all(|r| r.dominated == Some(true)));
    Ok(SweepTable {
        energy,
        interval,
        valid: rows.iter().all(|r| r.valid),
        log_log_slope: log_log_slope(&xs, &ys),
        origin_slope: if varies { slope_through_origin(&xs, &ys) } else { None },
        fitted_constant: fitted,
        all_dominated,
        ratios,
        rows,
    })
}
