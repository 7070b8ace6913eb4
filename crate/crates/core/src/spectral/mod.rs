//! Ordered spectra, eigenvalue counts and Weyl reference counts.
//!
//! The iterative solver is a block Lanczos method. When the operator's
//! bandwidth allows, it runs in shift-and-invert mode on `(H − σ)⁻¹` with
//! `σ` just below a rigorous lower bound of the spectrum, otherwise directly on `−H`. Every
//! returned eigenvalue is a Rayleigh quotient whose residual was checked
//! explicitly against the tolerance.

mod band;
mod lanczos;

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::operator::{DiscreteHamiltonian, Domain};
use band::BandCholesky;
use lanczos::{dot, Config, Target};

/// Largest `n · bandwidth` for which shift-and-invert is attempted.
const BAND_STORAGE_LIMIT: usize = 40_000_000;

/// Distance of the shift below the spectrum's lower bound.
const SHIFT_GAP: f64 = 0.1;

/// Default cap on the Krylov basis size.
pub const DEFAULT_MAX_BASIS: usize = 1000;

/// Nondecreasing list of computed eigenvalues with their residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub count_requested: Option<usize>,
    pub threshold: Option<f64>,
    pub tolerance: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    /// Eigenvalues in the closed interval `[a, b]`.
    pub fn in_interval(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.eigenvalues.iter().copied().filter(move |&e| a <= e && e <= b)
    }

    /// CSV with columns `k,eigenvalue,residual,converged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "eigenvalue", "residual", "converged"])?;
        for (k, ((e, r), c)) in self.eigenvalues.iter().zip(&self.residuals).zip(&self.converged).enumerate() {
            w.write_record(&[k.to_string(), e.to_string(), r.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Shift-and-invert when the band factorization fits, else regular.
    #[default]
    Auto,
    Regular,
    ShiftInvert,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Residual tolerance relative to `max(1, |λ|)`.
    pub tol: f64,
    pub block_size: usize,
    pub max_basis: usize,
    pub mode: SolverMode,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, block_size: 2, max_basis: DEFAULT_MAX_BASIS, mode: SolverMode::Auto, seed: 0 }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid(format!("solver tolerance must be positive, got {}", self.tol));
        }
        if self.block_size == 0 || self.max_basis == 0 {
            return invalid("block size and basis cap must be positive");
        }
        Ok(())
    }
}

enum Want {
    Lowest(usize),
    Below(f64),
}

fn residual_of(op: &DiscreteHamiltonian, v: &[f64], hv: &mut [f64]) -> (f64, f64) {
    op.apply_into(v, hv);
    let vv = dot(v, v);
    let rho = dot(v, hv) / vv;
    let r2: f64 = hv.iter().zip(v).map(|(h, x)| (h - rho * x).powi(2)).sum();
    (rho, (r2 / vv).sqrt())
}

fn solve(op: &DiscreteHamiltonian, want: Want, opts: &SolverOptions) -> Result<Spectrum> {
    opts.validate()?;
    let n = op.dim();
    let tol = opts.tol;
    let cfg = Config { block: opts.block_size, max_basis: opts.max_basis, seed: opts.seed };
    let mut hv = vec![0.0; n];
    let mut found: Vec<(f64, f64, bool)> = Vec::new();
    let accept = |_: f64, v: &[f64], found: &mut Vec<(f64, f64, bool)>, hv: &mut [f64]| {
        let (rho, res) = residual_of(op, v, hv);
        let ok = res <= tol * rho.abs().max(1.0);
        found.push((rho, res, ok));
        ok
    };

    let use_shift = match opts.mode {
        SolverMode::Regular => false,
        SolverMode::ShiftInvert => true,
        SolverMode::Auto => n.saturating_mul(op.bandwidth() + 1) <= BAND_STORAGE_LIMIT,
    };
    let factor = if use_shift {
        let sigma = op.spectrum_lower_bound() - SHIFT_GAP;
        match BandCholesky::factor(op, sigma) {
            Ok(f) => Some((sigma, f)),
            Err(e) if opts.mode == SolverMode::ShiftInvert => return Err(e),
            Err(_) => None,
        }
    } else {
        None
    };

    let outcome = match &factor {
        Some((sigma, f)) => {
            let sigma = *sigma;
            let target = match want {
                Want::Lowest(k) => Target::Count(k),
                Want::Below(thr) => {
                    if thr <= sigma {
                        Target::AtLeast(f64::INFINITY)
                    } else {
                        Target::AtLeast(1.0 / (thr - sigma))
                    }
                }
            };
            lanczos::largest(
                n,
                |x, y| {
                    y.copy_from_slice(x);
                    f.solve_in_place(y);
                },
                target,
                &cfg,
                |theta, est| {
                    let lambda = sigma + 1.0 / theta;
                    est / (theta * theta) <= 10.0 * tol * lambda.abs().max(1.0)
                },
                |theta, v| accept(theta, v, &mut found, &mut hv),
            )
        }
        None => {
            let target = match want {
                Want::Lowest(k) => Target::Count(k),
                Want::Below(thr) => Target::AtLeast(-thr),
            };
            lanczos::largest(
                n,
                |x, y| {
                    op.apply_into(x, y);
                    y.iter_mut().for_each(|v| *v = -*v);
                },
                target,
                &cfg,
                |theta, est| est <= 10.0 * tol * theta.abs().max(1.0),
                |theta, v| accept(theta, v, &mut found, &mut hv),
            )
        }
    };

    // `found` holds the results of the last accepted batch at its tail
    let batch = outcome.pairs.len();
    let mut rows: Vec<(f64, f64, bool)> = if found.len() >= batch && outcome.converged {
        found[found.len() - batch..].to_vec()
    } else {
        outcome
            .pairs
            .iter()
            .map(|p| {
                let (rho, res) = residual_of(op, &p.vector, &mut hv);
                (rho, res, res <= tol * rho.abs().max(1.0))
            })
            .collect()
    };
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (count_requested, threshold) = match want {
        Want::Lowest(k) => (Some(k), None),
        Want::Below(thr) => {
            // the witness above the threshold is not part of the answer
            while rows.last().is_some_and(|r| r.0 > thr) {
                rows.pop();
            }
            (None, Some(thr))
        }
    };
    let spectrum = Spectrum {
        eigenvalues: rows.iter().map(|r| r.0).collect(),
        residuals: rows.iter().map(|r| r.1).collect(),
        converged: rows.iter().map(|r| r.2).collect(),
        count_requested,
        threshold,
        tolerance: tol,
    };
    if outcome.converged && spectrum.all_converged() {
        Ok(spectrum)
    } else {
        Err(Error::NotConverged(Box::new(spectrum)))
    }
}

/// The `k` smallest eigenvalues, each with residual `≤ tol · max(1, |λ|)`.
pub fn lowest_eigenvalues(op: &DiscreteHamiltonian, k: usize, tol: f64) -> Result<Spectrum> {
    lowest_eigenvalues_with(op, k, &SolverOptions::with_tol(tol))
}

pub fn lowest_eigenvalues_with(op: &DiscreteHamiltonian, k: usize, opts: &SolverOptions) -> Result<Spectrum> {
    if k == 0 || k > op.dim() {
        return invalid(format!("need 1 <= k <= {}, got {k}", op.dim()));
    }
    solve(op, Want::Lowest(k), opts)
}

/// Every eigenvalue `≤ threshold`.
pub fn eigenvalues_below(op: &DiscreteHamiltonian, threshold: f64, opts: &SolverOptions) -> Result<Spectrum> {
    if !threshold.is_finite() {
        return invalid("threshold must be finite");
    }
    solve(op, Want::Below(threshold), opts)
}

/// Eigenvalue count in a closed interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCount {
    pub count: usize,
    /// Some eigenvalue lies within the tolerance of an endpoint.
    pub boundary_flag: bool,
}

fn near(x: f64, e: f64, tol: f64) -> bool {
    (x - e).abs() <= tol * x.abs().max(1.0)
}

pub fn count_in_interval(op: &DiscreteHamiltonian, a: f64, b: f64, tol: f64) -> Result<IntervalCount> {
    count_in_interval_with(op, a, b, &SolverOptions::with_tol(tol))
}

pub fn count_in_interval_with(op: &DiscreteHamiltonian, a: f64, b: f64, opts: &SolverOptions) -> Result<IntervalCount> {
    if !(a <= b) {
        return invalid(format!("empty interval [{a}, {b}]"));
    }
    let margin = opts.tol * b.abs().max(1.0);
    let spec = eigenvalues_below(op, b + margin, opts)?;
    let below_b = spec.eigenvalues.iter().filter(|&&e| e <= b).count();
    let below_a = spec.eigenvalues.iter().filter(|&&e| e < a).count();
    let boundary_flag = spec.eigenvalues.iter().any(|&e| near(a, e, opts.tol) || near(b, e, opts.tol));
    Ok(IntervalCount { count: below_b - below_a, boundary_flag })
}

/// `N(E)` with its Weyl reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub threshold: f64,
    pub count: usize,
    pub weyl_reference: f64,
}

pub fn count_below(op: &DiscreteHamiltonian, e: f64, opts: &SolverOptions) -> Result<CountReport> {
    let spec = eigenvalues_below(op, e, opts)?;
    Ok(CountReport { threshold: e, count: spec.len(), weyl_reference: weyl_reference(e, op.domain(), op.masses()) })
}

/// Volume of the unit ball in `R^D`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    std::f64::consts::PI.powf(half) / gamma(half + 1.0)
}

/// Leading Weyl term `ω_D (2E)^{D/2} Π m_j^{d/2} |Λ| / (2π)^D`; zero for `E ≤ 0`.
pub fn weyl_reference(e: f64, domain: &Domain, masses: [f64; 2]) -> f64 {
    if e <= 0.0 {
        return 0.0;
    }
    let d = domain.dimension();
    let dim = domain.configuration_dimension();
    let mass_factor: f64 = masses[..domain.particles().len()].iter().map(|m| m.powf(d as f64 / 2.0)).product();
    unit_ball_volume(dim) * (2.0 * e).powf(dim as f64 / 2.0) * mass_factor * domain.volume()
        / (2.0 * std::f64::consts::PI).powi(dim as i32)
}

/// All eigenvalues via a dense symmetric eigensolver, ascending.
pub fn dense_eigenvalues(op: &DiscreteHamiltonian) -> Vec<f64> {
    let mut e: Vec<f64> = op.to_dense().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cube, TwoParticleBox};
    use crate::operator::{assemble, HamiltonianSpec, InteractionSpec};
    use crate::random_field::{sample_amplitudes, AmplitudeEnsemble, BumpProfile};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> DiscreteHamiltonian {
        let h = PI / n as f64;
        let spec = HamiltonianSpec::new(
            Domain::OneParticle(Cube::new(vec![PI / 2.0], PI / 2.0).unwrap()),
            h,
            BumpProfile::unit_tent(),
            AmplitudeEnsemble::uniform(0.0),
        );
        let sites = spec.field_sites().unwrap();
        let r = sample_amplitudes(&spec.ensemble, &sites, 0, 0).unwrap();
        assemble(&spec, &r).unwrap()
    }

    fn random_pair_operator(seed: u64, l: f64, h: f64) -> DiscreteHamiltonian {
        let spec = HamiltonianSpec {
            interaction: InteractionSpec::SquareWell { strength: 0.7, range: 0.5 },
            ..HamiltonianSpec::new(
                Domain::TwoParticle(TwoParticleBox::from_parts(vec![0.0], l, vec![0.0], l).unwrap()),
                h,
                BumpProfile::unit_tent(),
                AmplitudeEnsemble::uniform(1.0),
            )
        };
        let r = sample_amplitudes(&spec.ensemble, &spec.field_sites().unwrap(), seed, 0).unwrap();
        assemble(&spec, &r).unwrap()
    }

    fn random_symmetric(n: usize, seed: u64) -> DiscreteHamiltonian {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        DiscreteHamiltonian::from_dense(&m, Domain::OneParticle(Cube::new(vec![0.0], 1.0).unwrap())).unwrap()
    }

    #[test]
    fn laplacian_lowest_five() {
        let n = 256;
        let h = PI / n as f64;
        let op = laplacian(n);
        assert_eq!(op.dim(), 255);
        for mode in [SolverMode::ShiftInvert, SolverMode::Regular] {
            let opts = SolverOptions { mode, tol: 1e-10, ..Default::default() };
            let s = lowest_eigenvalues_with(&op, 5, &opts).unwrap();
            for k in 0..5 {
                let exact = (1.0 - ((k + 1) as f64 * PI / n as f64).cos()) / (h * h);
                assert_relative_eq!(s.eigenvalues[k], exact, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_operator() {
        let op = DiscreteHamiltonian::from_diagonal(&[3.0, 1.0, 2.0]);
        let s = lowest_eigenvalues(&op, 2, 1e-12).unwrap();
        assert_relative_eq!(s.eigenvalues[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.eigenvalues[1], 2.0, max_relative = 1e-12);
        assert!(lowest_eigenvalues(&op, 0, 1e-12).is_err());
        assert!(lowest_eigenvalues(&op, 4, 1e-12).is_err());
    }

    #[test]
    fn full_spectrum_matches_dense() {
        for seed in 0..3 {
            let op = random_symmetric(30, seed);
            let dense = dense_eigenvalues(&op);
            for mode in [SolverMode::Auto, SolverMode::Regular] {
                let s = lowest_eigenvalues_with(&op, 30, &SolverOptions { mode, ..Default::default() }).unwrap();
                for (a, b) in s.eigenvalues.iter().zip(&dense) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn pair_operator_matches_dense() {
        for seed in 0..3 {
            let op = random_pair_operator(seed, 2.0, 0.25);
            let dense = dense_eigenvalues(&op);
            let s = lowest_eigenvalues(&op, 10, 1e-10).unwrap();
            for (a, b) in s.eigenvalues.iter().zip(&dense) {
                assert_relative_eq!(*a, *b, max_relative = 1e-9);
            }
            let k = (12..dense.len() - 1).find(|&k| dense[k + 1] - dense[k] > 1e-6).unwrap();
            let mid = 0.5 * (dense[k] + dense[k + 1]);
            let below = eigenvalues_below(&op, mid, &SolverOptions::default()).unwrap();
            assert_eq!(below.len(), k + 1);
        }
    }

    #[test]
    fn interval_counts() {
        let op = DiscreteHamiltonian::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_eq!(count_in_interval(&op, 1.5, 3.5, 1e-10).unwrap().count, 2);
        assert_eq!(count_in_interval(&op, 2.5, 2.5, 1e-10).unwrap().count, 0);
        let edge = count_in_interval(&op, 2.0, 2.5, 1e-10).unwrap();
        assert_eq!(edge, IntervalCount { count: 1, boundary_flag: true });
        assert!(count_in_interval(&op, 2.0, 1.0, 1e-10).is_err());
        for seed in 0..4 {
            let op = random_symmetric(50, 100 + seed);
            let dense = dense_eigenvalues(&op);
            let (a, b) = (-3.0, 2.5);
            let expected = dense.iter().filter(|&&e| a <= e && e <= b).count();
            assert_eq!(count_in_interval(&op, a, b, 1e-10).unwrap().count, expected);
        }
    }

    #[test]
    fn weyl_examples() {
        let interval = Domain::OneParticle(Cube::new(vec![PI / 2.0], PI / 2.0).unwrap());
        let w = weyl_reference(8.0, &interval, [1.0, 1.0]);
        assert!((w - 4.0).abs() <= 1.0);
        assert_eq!(weyl_reference(-1.0, &interval, [1.0, 1.0]), 0.0);
        assert_eq!(weyl_reference(0.0, &interval, [1.0, 1.0]), 0.0);
        let wide = Domain::OneParticle(Cube::new(vec![PI], PI).unwrap());
        assert_relative_eq!(weyl_reference(5.0, &wide, [1.0, 1.0]), 2.0 * weyl_reference(5.0, &interval, [1.0, 1.0]));
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn laplacian_count_tracks_weyl() {
        // lower quarter of the discrete band: E ≤ (2/h²)/4
        let n = 128;
        let op = laplacian(n);
        let h = PI / n as f64;
        let top = 2.0 / (h * h);
        for frac in [0.05, 0.1, 0.2, 0.25] {
            let e = frac * top;
            let r = count_below(&op, e, &SolverOptions::default()).unwrap();
            let ratio = r.count as f64 / r.weyl_reference;
            assert!((0.5..=2.0).contains(&ratio), "E={e}: {} vs {}", r.count, r.weyl_reference);
        }
    }

    #[test]
    fn bounded_perturbation_moves_eigenvalues_by_at_most_sup() {
        let a = random_pair_operator(11, 1.5, 0.25);
        let dense_a = dense_eigenvalues(&a);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut m = a.to_dense();
        let bound = 0.8;
        for i in 0..a.dim() {
            m[(i, i)] += rng.random_range(-bound..bound);
        }
        let b = DiscreteHamiltonian::from_dense(&m, a.domain().clone()).unwrap();
        let sa = lowest_eigenvalues(&a, 8, 1e-10).unwrap();
        let sb = lowest_eigenvalues(&b, 8, 1e-10).unwrap();
        for (x, y) in sa.eigenvalues.iter().zip(&sb.eigenvalues) {
            assert!((x - y).abs() <= bound + 1e-9);
        }
        assert_relative_eq!(sa.eigenvalues[0], dense_a[0], max_relative = 1e-9);
    }

    #[test]
    fn csv_layout() {
        let op = DiscreteHamiltonian::from_diagonal(&[2.0, 1.0]);
        let s = lowest_eigenvalues(&op, 2, 1e-12).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,eigenvalue,residual,converged\n0,1,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn output_is_nondecreasing(seed in 0u64..1000, k in 1usize..12) {
            let op = random_symmetric(20, seed);
            let s = lowest_eigenvalues(&op, k, 1e-10).unwrap();
            prop_assert_eq!(s.len(), k);
            prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn counts_are_nondecreasing_in_threshold(seed in 0u64..1000, a in -4.0f64..4.0, gap in 0.0f64..3.0) {
            let op = random_symmetric(16, seed);
            let lo = eigenvalues_below(&op, a, &SolverOptions::default()).unwrap().len();
            let hi = eigenvalues_below(&op, a + gap, &SolverOptions::default()).unwrap().len();
            prop_assert!(lo <= hi);
        }
    }
}
